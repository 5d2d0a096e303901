#include "curvmix/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "curvmix/rng.hpp"

namespace curvmix {

namespace {

// =============================================================================
// Report helpers
// =============================================================================

double binom_radius(long trials, double delta) {
    return std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(trials)));
}

Json value_pair_json(const Value& lhs, const Value& rhs) {
    return Json{{"lhs", value_json(lhs)}, {"rhs", value_json(rhs)}};
}

struct LinkRecord {
    std::string name;
    Value lhs, rhs;
    bool pass = false;
    std::string mode = "exact";
};

Json link_json(const LinkRecord& link) {
    Json j = value_pair_json(link.lhs, link.rhs);
    j["pass"] = link.pass;
    j["mode"] = link.mode;
    return j;
}

LinkRecord exact_link(std::string name, const Rat& lhs, const Rat& rhs) {
    LinkRecord l;
    l.name = std::move(name);
    l.lhs = Value(lhs);
    l.rhs = Value(rhs);
    l.pass = lhs <= rhs;
    return l;
}

LinkRecord float_link(std::string name, double lhs, double rhs) {
    LinkRecord l;
    l.name = std::move(name);
    l.lhs = Value(lhs);
    l.rhs = Value(rhs);
    l.pass = lhs <= rhs + 1e-9 * std::max(1.0, std::abs(rhs));
    l.mode = "float";
    return l;
}

// =============================================================================
// Per-chain context
// =============================================================================

struct ChainContext {
    const TaggedChain* tc = nullptr;
    const RunConfig* config = nullptr;
    int n = 0;
    DirectedMetric metric;
    std::vector<Rat> pi;
    std::vector<double> pi_d;
    Rat p_min;
    double p_min_d = 0;
    bool lazy = false, reversible = false, transitive = false;
    bool transitive_spot_checked = false;
    CurvatureCertificate<Rat> curvature;
    bool curved = false;
    std::optional<SpectralProfile> spectral;
    int diam = 0;
    Rat diam_sharp;
    std::optional<ConductanceValue<Rat>> phi1;
    long horizon_chain = 0;
    long t_sweep = 0;
    bool truncated = false;
    std::optional<long> t_mix, t_mix_sharp;
    std::optional<long> float_switch_t;

    // exact per-t curves (index = t), valid while the sweep stays exact
    std::vector<Rat> tv_curve, avg_tv, disp;
    std::vector<double> tv_curve_d, avg_tv_d, disp_d;

    // worst pairwise decay instance
    bool tvdecay_all_pass = true;
    double tvdecay_max_ratio = -1.0;
    Rat tvdecay_binding_lhs;
    long tvdecay_binding_t = 0;
    int tvdecay_binding_x = 0, tvdecay_binding_y = 0;

    // per-row TV equality across starting states (transitive chains)
    bool rows_tv_equal = true;
    long row_equal_violation_t = -1;

    // designated farthest pair, used by the domination and coupled-tail checks
    int far_x = 0, far_y = 1;
    std::vector<Rat> far_pair_tv;

    // double-precision conductance scan, keyed by t
    std::map<long, double> phi_scan_d;

    std::optional<CouplingKernel<Rat>> kernel;  // built for lazy chains

    bool within_limit() const { return n >= 2 && n <= config->enum_limit; }

    Hypotheses hypotheses() const {
        Hypotheses h;
        h.lazy = lazy;
        h.reversible = reversible;
        h.transitive = transitive;
        h.nonneg_curved = curved;
        h.p_min_ge_threshold = p_min >= config->cutoff_p_min;
        h.within_enum_limit = within_limit();
        return h;
    }
};

// exact rows of P^t recomputed from scratch (used once per chain at most)
Mat<Rat> exact_power(const Chain<Rat>& chain, long t, size_t bit_budget) {
    PowerSweep sweep(chain, bit_budget);
    for (long s = 0; s < t; ++s) {
        sweep.step();
        if (!sweep.exact()) throw OverflowError("exact power exceeded the bit budget");
    }
    return sweep.exact_rows();
}

Mat<double> double_power(const Chain<Rat>& chain, long t) {
    const int n = chain.size();
    Mat<double> P(n, n, 0.0), M(n, n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) P(i, j) = chain.at(i, j).get_d();
    for (int i = 0; i < n; ++i) M(i, i) = 1.0;
    for (long s = 0; s < t; ++s) {
        Mat<double> next;
        mat_mul(M, P, next);
        M = std::move(next);
    }
    return M;
}

double phi_double_at(ChainContext& ctx, long t) {
    auto it = ctx.phi_scan_d.find(t);
    if (it != ctx.phi_scan_d.end()) return it->second;
    Mat<double> rows = double_power(ctx.tc->chain, t);
    auto phi = conductance_from_rows(ctx.pi_d, rows, t, ctx.config->enum_limit);
    ctx.phi_scan_d[t] = phi.phi;
    return phi.phi;
}

// =============================================================================
// Sweep
// =============================================================================

void run_sweep(ChainContext& ctx) {
    const Chain<Rat>& chain = ctx.tc->chain;
    const int n = ctx.n;
    const Rat threshold = rat_of(1, 4);
    const Rat ten(10);
    const Rat pm = ctx.p_min;

    // farthest ordered pair (smallest indices on ties)
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (ctx.metric(x, y) > ctx.metric(ctx.far_x, ctx.far_y)) {
                ctx.far_x = x;
                ctx.far_y = y;
            }

    const bool track_decay = ctx.lazy && ctx.curved;
    const bool track_far = ctx.lazy && ctx.curved && n <= 8;
    const bool scan_for_main = ctx.lazy && ctx.curved && ctx.within_limit();
    const bool scan_for_spectral = ctx.reversible && ctx.within_limit();

    PowerSweep sweep(chain, ctx.config->bit_budget);
    long stop_t = -1;
    for (long t = 0;; ++t) {
        if (t > 0) sweep.step();
        const bool exact = sweep.exact();
        if (!exact && !ctx.float_switch_t) ctx.float_switch_t = sweep.switch_t();

        // row TVs to pi, curves, displacement
        Rat worst(0), avg(0), dis(0);
        double worst_d = 0, avg_d = 0, dis_d = 0;
        if (exact) {
            const Mat<Rat>& rows = sweep.exact_rows();
            std::vector<Rat> tv = row_tv_to_stationary(rows, ctx.pi);
            for (int x = 0; x < n; ++x) {
                if (tv[x] > worst) worst = tv[x];
                avg += ctx.pi[x] * tv[x];
            }
            dis = mean_displacement(ctx.pi, rows, ctx.metric);
            worst_d = worst.get_d();
            avg_d = avg.get_d();
            dis_d = dis.get_d();
            ctx.tv_curve.push_back(worst);
            ctx.avg_tv.push_back(avg);
            ctx.disp.push_back(dis);
            if (ctx.transitive && ctx.rows_tv_equal)
                for (int x = 1; x < n; ++x)
                    if (tv[x] != tv[0]) {
                        ctx.rows_tv_equal = false;
                        ctx.row_equal_violation_t = t;
                        break;
                    }
        } else {
            const Mat<double>& rows = sweep.float_rows();
            std::vector<double> tv = row_tv_to_stationary(rows, ctx.pi_d);
            for (int x = 0; x < n; ++x) {
                worst_d = std::max(worst_d, tv[x]);
                avg_d += ctx.pi_d[x] * tv[x];
            }
            dis_d = mean_displacement(ctx.pi_d, rows, ctx.metric);
            if (ctx.transitive && ctx.rows_tv_equal)
                for (int x = 1; x < n; ++x)
                    if (std::abs(tv[x] - tv[0]) > 1e-9) {
                        ctx.rows_tv_equal = false;
                        ctx.row_equal_violation_t = t;
                        break;
                    }
        }
        ctx.tv_curve_d.push_back(worst_d);
        ctx.avg_tv_d.push_back(avg_d);
        ctx.disp_d.push_back(dis_d);

        if (!ctx.t_mix && worst_d <= threshold.get_d() + (exact ? 0.0 : 1e-9)) {
            if (!exact || ctx.tv_curve[t] <= threshold) ctx.t_mix = t;
        }
        if (!ctx.t_mix_sharp && avg_d <= threshold.get_d() + (exact ? 0.0 : 1e-9)) {
            if (!exact || ctx.avg_tv[t] <= threshold) ctx.t_mix_sharp = t;
        }

        // pairwise TV decay |P^t(x,.)-P^t(y,.)| <= dist(x,y) sqrt(10/((t+1)Pmin))
        if (track_decay) {
            if (exact) {
                const Mat<Rat>& rows = sweep.exact_rows();
                for (int x = 0; x < n; ++x)
                    for (int y = 0; y < n; ++y) {
                        if (x == y) continue;
                        Rat lhs(0);
                        for (int z = 0; z < n; ++z) {
                            Rat d = rows(x, z) - rows(y, z);
                            if (d < Rat(0)) d = -d;
                            lhs += d;
                        }
                        lhs /= 2;
                        const long dxy = ctx.metric(x, y);
                        // squared comparison keeps everything rational
                        Rat lhs_sq = lhs * lhs * Rat(t + 1) * pm;
                        Rat rhs_sq = ten * Rat(dxy) * Rat(dxy);
                        if (lhs_sq > rhs_sq) ctx.tvdecay_all_pass = false;
                        double ratio = Rat(lhs_sq / rhs_sq).get_d();
                        if (ratio > ctx.tvdecay_max_ratio) {
                            ctx.tvdecay_max_ratio = ratio;
                            ctx.tvdecay_binding_lhs = lhs;
                            ctx.tvdecay_binding_t = t;
                            ctx.tvdecay_binding_x = x;
                            ctx.tvdecay_binding_y = y;
                        }
                        if (track_far && x == ctx.far_x && y == ctx.far_y)
                            ctx.far_pair_tv.push_back(lhs);
                    }
            } else {
                const Mat<double>& rows = sweep.float_rows();
                for (int x = 0; x < n; ++x)
                    for (int y = 0; y < n; ++y) {
                        if (x == y) continue;
                        double lhs = 0;
                        for (int z = 0; z < n; ++z) lhs += std::abs(rows(x, z) - rows(y, z));
                        lhs /= 2;
                        const double dxy = ctx.metric(x, y);
                        double rhs = dxy * std::sqrt(10.0 / ((t + 1) * ctx.p_min_d));
                        if (lhs > rhs * (1 + 1e-9)) ctx.tvdecay_all_pass = false;
                        double ratio = (lhs * lhs) / (rhs * rhs);
                        if (ratio > ctx.tvdecay_max_ratio) {
                            ctx.tvdecay_max_ratio = ratio;
                            ctx.tvdecay_binding_t = t;
                            ctx.tvdecay_binding_x = x;
                            ctx.tvdecay_binding_y = y;
                        }
                    }
            }
        }

        // double-precision conductance scan
        if (t >= 1 && ctx.within_limit()) {
            const bool main_wants =
                scan_for_main && (!ctx.t_mix_sharp || t <= std::max(4 * *ctx.t_mix_sharp, 1L));
            const bool spectral_wants = scan_for_spectral && t <= 8;
            if (main_wants || spectral_wants) {
                if (exact) {
                    const Mat<Rat>& rows = sweep.exact_rows();
                    Mat<double> rows_d(n, n, 0.0);
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < n; ++j) rows_d(i, j) = rows(i, j).get_d();
                    auto phi = conductance_from_rows(ctx.pi_d, rows_d, t, ctx.config->enum_limit);
                    ctx.phi_scan_d[t] = phi.phi;
                } else {
                    auto phi =
                        conductance_from_rows(ctx.pi_d, sweep.float_rows(), t, ctx.config->enum_limit);
                    ctx.phi_scan_d[t] = phi.phi;
                }
            }
        }

        // stopping rule
        if (ctx.t_mix && ctx.t_mix_sharp) {
            if (stop_t < 0) {
                long want = std::max({4 * *ctx.t_mix_sharp, *ctx.t_mix + 8, 32L});
                if (ctx.spectral)
                    want = std::max(want, static_cast<long>(std::ceil(ctx.spectral->t_rel)) + 8);
                stop_t = std::min(ctx.horizon_chain, want);
            }
            if (t >= stop_t) {
                ctx.t_sweep = t;
                break;
            }
        }
        if (t >= ctx.horizon_chain) {
            ctx.t_sweep = t;
            ctx.truncated = !(ctx.t_mix && ctx.t_mix_sharp);
            break;
        }
    }
}

ChainContext build_context(const TaggedChain& tc, const RunConfig& config) {
    ChainContext ctx;
    ctx.tc = &tc;
    ctx.config = &config;
    ctx.n = tc.chain.size();
    ctx.metric = directed_metric(tc.chain);
    ctx.pi = stationary(tc.chain);
    ctx.pi_d.resize(ctx.n);
    for (int i = 0; i < ctx.n; ++i) ctx.pi_d[i] = ctx.pi[i].get_d();
    ctx.p_min = tc.chain.p_min();
    ctx.p_min_d = ctx.p_min.get_d();
    ctx.lazy = tc.chain.is_lazy();
    ctx.reversible = is_reversible(tc.chain, ctx.pi);
    if (ctx.n <= kTransitivitySearchLimit) {
        ctx.transitive = is_transitive(tc.chain);
        ctx.transitive_spot_checked = true;
    } else {
        ctx.transitive = tc.transitive_by_construction && tc.expect_transitive;
    }
    ctx.curvature = certify_curvature(tc.chain, ctx.metric);
    ctx.curved = ctx.curvature.verdict == CurvatureVerdict::NonNegative;
    if (ctx.reversible && ctx.n >= 2) ctx.spectral = spectral_profile(tc.chain, ctx.pi);
    ctx.diam = ctx.metric.diam();
    ctx.diam_sharp = effective_diameter(ctx.pi, ctx.metric);
    if (ctx.within_limit())
        ctx.phi1 = conductance_from_rows(ctx.pi, tc.chain.matrix(), 1, config.enum_limit);
    ctx.horizon_chain = config.horizon_override
                            ? std::max(1L, *config.horizon_override)
                            : default_horizon(ctx.diam, ctx.p_min);
    run_sweep(ctx);
    if (ctx.lazy) ctx.kernel = coupling_kernel(tc.chain, ctx.metric);
    return ctx;
}

// =============================================================================
// Check emitters
// =============================================================================

class Checker {
  public:
    Checker(ChainContext& ctx, std::vector<InequalityReport>& reports)
        : ctx_(ctx), reports_(reports) {}

    InequalityReport& emit(const std::string& statement, bool external = false) {
        InequalityReport rep;
        rep.chain = ctx_.tc->name;
        rep.statement = statement;
        rep.external = external;
        rep.hypotheses = ctx_.hypotheses();
        reports_.push_back(std::move(rep));
        return reports_.back();
    }

    void skip(InequalityReport& rep, const std::string& reason) {
        rep.result = CheckResult::Skip;
        rep.skip_reason = reason;
    }

    // returns false (and marks the skip) when any required hypothesis is absent
    bool require(InequalityReport& rep, std::initializer_list<std::pair<bool, const char*>> reqs) {
        for (const auto& [ok, reason] : reqs)
            if (!ok) {
                skip(rep, reason);
                return false;
            }
        return true;
    }

    void finish_exact(InequalityReport& rep, const Rat& lhs, const Rat& rhs) {
        rep.lhs = Value(lhs);
        rep.rhs = Value(rhs);
        rep.slack = Value(Rat(rhs - lhs));
        rep.mode = "exact";
        rep.result = lhs <= rhs ? CheckResult::Pass : CheckResult::Fail;
    }

    void finish_float(InequalityReport& rep, double lhs, double rhs) {
        rep.lhs = Value(lhs);
        rep.rhs = Value(rhs);
        rep.slack = Value(rhs - lhs);
        rep.mode = "float";
        rep.result = lhs <= rhs + 1e-9 * std::max(1.0, std::abs(rhs))
                         ? CheckResult::Pass
                         : CheckResult::Fail;
    }

  private:
    ChainContext& ctx_;
    std::vector<InequalityReport>& reports_;
};

void check_tv_decay(ChainContext& ctx, Checker& checker) {
    auto& rep = checker.emit("tv_pair_decay");
    if (!checker.require(rep, {{ctx.lazy, "not lazy"},
                               {ctx.curved, "curvature not certified non-negative"}}))
        return;
    const long t = ctx.tvdecay_binding_t;
    const int x = ctx.tvdecay_binding_x, y = ctx.tvdecay_binding_y;
    const double rhs =
        ctx.metric(x, y) * std::sqrt(10.0 / ((t + 1) * ctx.p_min_d));
    rep.params = Json{{"t", t},
                      {"x", x},
                      {"y", y},
                      {"dist", ctx.metric(x, y)},
                      {"t_max_checked", ctx.t_sweep},
                      {"max_ratio_sq", decimal_string(ctx.tvdecay_max_ratio, 12)}};
    const bool exact_binding =
        !ctx.float_switch_t || t < *ctx.float_switch_t;
    if (exact_binding) {
        rep.lhs = Value(ctx.tvdecay_binding_lhs);
        rep.mode = "exact";
    } else {
        rep.lhs = Value(ctx.tv_curve_d[t]);  // display only; pass already tracked
        rep.mode = "float";
    }
    rep.rhs = Value(rhs);
    rep.slack = Value(rhs - rep.lhs.approx);
    rep.result = ctx.tvdecay_all_pass ? CheckResult::Pass : CheckResult::Fail;
}

void check_diameter_bounds(ChainContext& ctx, Checker& checker) {
    {
        auto& rep = checker.emit("mixing_le_diameter_sq");
        if (checker.require(rep, {{ctx.lazy, "not lazy"},
                                  {ctx.curved, "curvature not certified non-negative"},
                                  {!ctx.truncated, "horizon hit before mixing"}})) {
            Rat rhs = Rat(160) * Rat(ctx.diam) * Rat(ctx.diam) / ctx.p_min;
            rep.params = Json{{"t_mix", *ctx.t_mix}, {"diam", ctx.diam}};
            checker.finish_exact(rep, Rat(*ctx.t_mix), rhs);
        }
    }
    {
        auto& rep = checker.emit("avg_mixing_le_effective_diameter_sq");
        if (checker.require(rep, {{ctx.lazy, "not lazy"},
                                  {ctx.curved, "curvature not certified non-negative"},
                                  {!ctx.truncated, "horizon hit before mixing"}})) {
            Rat rhs = Rat(640) * ctx.diam_sharp * ctx.diam_sharp / ctx.p_min;
            rep.params = Json{{"t_mix_sharp", *ctx.t_mix_sharp},
                              {"diam_sharp", ratio_string(ctx.diam_sharp)}};
            checker.finish_exact(rep, Rat(*ctx.t_mix_sharp), rhs);
        }
    }
}

void check_main_estimate(ChainContext& ctx, Checker& checker) {
    auto& rep = checker.emit("avg_mixing_le_displacement_conductance_inf");
    if (!checker.require(rep, {{ctx.lazy, "not lazy"},
                               {ctx.curved, "curvature not certified non-negative"},
                               {ctx.within_limit(), "state count beyond the enumeration limit"},
                               {!ctx.truncated, "horizon hit before mixing"}}))
        return;

    // double-precision scan locates the minimizing t; the inequality itself is
    // then certified exactly at that t (any t >= 1 gives a valid instance)
    const long scan_to = std::min<long>(ctx.t_sweep, std::max(4 * *ctx.t_mix_sharp, 1L));
    long t_star = -1;
    double best = 0;
    for (long t = 1; t <= scan_to; ++t) {
        auto it = ctx.phi_scan_d.find(t);
        if (it == ctx.phi_scan_d.end() || it->second <= 0) continue;
        double ratio = ctx.disp_d[t] / it->second;
        if (t_star < 0 || ratio < best) {
            t_star = t;
            best = ratio;
        }
    }
    if (t_star < 0) {
        checker.skip(rep, "no conductance values within the scan window");
        return;
    }

    const bool exact_ok = !ctx.float_switch_t || t_star < *ctx.float_switch_t;
    if (exact_ok) {
        Mat<Rat> rows = exact_power(ctx.tc->chain, t_star, ctx.config->bit_budget);
        auto phi = conductance_from_rows(ctx.pi, rows, t_star, ctx.config->enum_limit);
        Rat displacement = mean_displacement(ctx.pi, rows, ctx.metric);
        Rat ratio = displacement / phi.phi;
        Rat rhs = Rat(160) / ctx.p_min * ratio * ratio;
        rep.params = Json{{"t_star", t_star},
                          {"scanned_to", scan_to},
                          {"displacement", ratio_string(displacement)},
                          {"phi_pt", ratio_string(phi.phi)},
                          {"phi_argmin_set", phi.argmin_set}};
        checker.finish_exact(rep, Rat(*ctx.t_mix_sharp), rhs);
    } else {
        double ratio = best;
        double rhs = 160.0 / ctx.p_min_d * ratio * ratio;
        rep.params = Json{{"t_star", t_star}, {"scanned_to", scan_to}};
        checker.finish_float(rep, static_cast<double>(*ctx.t_mix_sharp), rhs);
    }
}

void check_conductance_bound(ChainContext& ctx, Checker& checker) {
    {
        auto& rep = checker.emit("avg_mixing_le_conductance_sq");
        if (checker.require(rep,
                            {{ctx.lazy, "not lazy"},
                             {ctx.curved, "curvature not certified non-negative"},
                             {ctx.within_limit(), "state count beyond the enumeration limit"},
                             {!ctx.truncated, "horizon hit before mixing"}})) {
            const Rat& phi = ctx.phi1->phi;
            Rat rhs = Rat(40) / (ctx.p_min * phi * phi);
            rep.params = Json{{"phi", ratio_string(phi)},
                              {"phi_argmin_set", ctx.phi1->argmin_set},
                              {"t_mix_sharp", *ctx.t_mix_sharp}};
            checker.finish_exact(rep, Rat(*ctx.t_mix_sharp), rhs);
        }
    }
    {
        // the t = 1 term of the displacement/conductance estimate collapses to
        // the conductance bound: for lazy chains E[dist(X0,X1)] <= 1/2 exactly
        auto& rep = checker.emit("displacement_t1_specialization");
        if (checker.require(rep,
                            {{ctx.lazy, "not lazy"},
                             {ctx.curved, "curvature not certified non-negative"},
                             {ctx.within_limit(), "state count beyond the enumeration limit"}})) {
            const Rat& phi = ctx.phi1->phi;
            const Rat& e1 = ctx.disp.size() > 1 ? ctx.disp[1] : ctx.diam_sharp;
            Rat t1_term = Rat(160) / ctx.p_min * (e1 / phi) * (e1 / phi);
            Rat conductance_rhs = Rat(40) / (ctx.p_min * phi * phi);
            rep.params = Json{{"displacement_t1", ratio_string(e1)},
                              {"one_step_move_mass_le_half", e1 <= rat_of(1, 2)}};
            checker.finish_exact(rep, t1_term, conductance_rhs);
        }
    }
}

void check_expansion(ChainContext& ctx, Checker& checker) {
    auto& rep = checker.emit("conductance_le_effective_diameter_root");
    if (!checker.require(rep,
                         {{ctx.curved, "curvature not certified non-negative"},
                          {ctx.within_limit(), "state count beyond the enumeration limit"}}))
        return;
    const Rat& phi = ctx.phi1->phi;
    // squared form of phi <= 19 / sqrt(P_min diam#)
    Rat lhs = phi * phi * ctx.p_min * ctx.diam_sharp;
    Rat rhs(361);
    std::vector<LinkRecord> links;
    if (ctx.lazy) {
        links.push_back(exact_link("lazy_effective_diameter_le_41",
                                   ctx.diam_sharp * phi * phi * ctx.p_min, Rat(41)));
    } else {
        Chain<Rat> lazy_chain = lazify(ctx.tc->chain);
        auto phi_lazy =
            conductance_from_rows(ctx.pi, lazy_chain.matrix(), 1, ctx.config->enum_limit);
        Rat p_min_lazy = lazy_chain.p_min();
        links.push_back(exact_link(
            "lazified_effective_diameter_le_41",
            ctx.diam_sharp * phi_lazy.phi * phi_lazy.phi * p_min_lazy, Rat(41)));
        links.push_back(exact_link("effective_diameter_le_328",
                                   ctx.diam_sharp * phi * phi * ctx.p_min, Rat(328)));
        rep.params["phi_lazified"] = ratio_string(phi_lazy.phi);
        rep.params["p_min_lazified"] = ratio_string(p_min_lazy);
    }
    bool all = lhs <= rhs;
    Json jlinks = Json::object();
    for (const auto& link : links) {
        jlinks[link.name] = link_json(link);
        all = all && link.pass;
    }
    rep.params["proof_chain"] = jlinks;
    rep.params["phi"] = ratio_string(phi);
    rep.params["diam_sharp"] = ratio_string(ctx.diam_sharp);
    checker.finish_exact(rep, lhs, rhs);
    if (rep.result == CheckResult::Pass && !all) rep.result = CheckResult::Fail;
}

void check_diameter_lower(ChainContext& ctx, Checker& checker) {
    auto& rep = checker.emit("avg_mixing_ge_effective_diameter_gap");
    if (!checker.require(rep,
                         {{ctx.lazy, "not lazy"},
                          {ctx.within_limit(), "state count beyond the enumeration limit"},
                          {!ctx.truncated, "horizon hit before mixing"}}))
        return;
    const Rat& phi = ctx.phi1->phi;
    Rat lhs = ctx.diam_sharp - Rat(4) / phi;
    rep.params = Json{{"diam_sharp", ratio_string(ctx.diam_sharp)},
                      {"phi", ratio_string(phi)},
                      {"t_mix_sharp", *ctx.t_mix_sharp}};
    checker.finish_exact(rep, lhs, Rat(*ctx.t_mix_sharp));
}

void check_escape(ChainContext& ctx, Checker& checker) {
    auto& rep = checker.emit("displacement_ge_mixing_root");
    if (!checker.require(rep, {{ctx.lazy, "not lazy"},
                               {ctx.reversible, "not reversible"},
                               {ctx.curved, "curvature not certified non-negative"},
                               {!ctx.truncated, "horizon hit before mixing"}}))
        return;
    const double t_rel = ctx.spectral->t_rel;
    // smallest integer certainly >= t_rel under the 1e-9 eigensolver slack
    const long t_lo = std::max(1L, static_cast<long>(std::ceil(t_rel * (1.0 + 1e-9) + 1e-9)));
    if (t_lo > ctx.t_sweep) {
        checker.skip(rep, "relaxation time beyond the checked window");
        return;
    }
    const Rat target = Rat(*ctx.t_mix_sharp) * ctx.p_min;  // (41 E_t)^2 >= this
    const double target_d = target.get_d();
    bool all_pass = true;
    long binding_t = -1;
    double binding_val = 0;
    for (long t = t_lo; t <= ctx.t_sweep; ++t) {
        const bool exact = !ctx.float_switch_t || t < *ctx.float_switch_t;
        double val;
        if (exact) {
            Rat lhs = Rat(1681) * ctx.disp[t] * ctx.disp[t];
            if (lhs < target) all_pass = false;
            val = lhs.get_d();
        } else {
            val = 1681.0 * ctx.disp_d[t] * ctx.disp_d[t];
            if (val < target_d * (1 - 1e-9)) all_pass = false;
        }
        if (binding_t < 0 || val < binding_val) {
            binding_t = t;
            binding_val = val;
        }
    }

    // sharpness probe at ceil(t_rel): displacement over the unsquared bound
    const long t_ceil = std::min<long>(ctx.t_sweep, std::max(1L, (long)std::ceil(t_rel)));
    const double bound = std::sqrt(target_d) / 41.0;
    const double probe_ratio = bound > 0 ? ctx.disp_d[t_ceil] / bound : 0.0;

    rep.params = Json{{"t_lo", t_lo},
                      {"t_max_checked", ctx.t_sweep},
                      {"t_rel", decimal_string(t_rel, 12)},
                      {"binding_t", binding_t},
                      {"ratio_at_ceil_t_rel", decimal_string(probe_ratio, 12)}};
    // boundary step below the certain grid, informational only
    if (t_lo - 1 >= 1 && t_lo - 1 < static_cast<long>(ctx.disp.size())) {
        Rat lhs_b = Rat(1681) * ctx.disp[t_lo - 1] * ctx.disp[t_lo - 1];
        rep.params["boundary_step_holds"] = lhs_b >= target;
    }
    const bool binding_exact = !ctx.float_switch_t || binding_t < *ctx.float_switch_t;
    if (binding_exact)
        checker.finish_exact(rep, target, Rat(1681) * ctx.disp[binding_t] * ctx.disp[binding_t]);
    else
        checker.finish_float(rep, target_d, binding_val);
    if (!all_pass) rep.result = CheckResult::Fail;
}

void check_sandwich(ChainContext& ctx, Checker& checker) {
    auto& rep = checker.emit("relaxation_mixing_conductance_sandwich");
    if (!checker.require(
            rep, {{ctx.lazy, "not lazy"},
                  {ctx.reversible, "not reversible"},
                  {ctx.transitive, "not transitive"},
                  {ctx.curved, "curvature not certified non-negative"},
                  {ctx.p_min >= ctx.config->cutoff_p_min, "P_min below the sparsity threshold"},
                  {ctx.within_limit(), "state count beyond the enumeration limit"},
                  {!ctx.truncated, "horizon hit before mixing"}}))
        return;
    const Rat& phi = ctx.phi1->phi;
    const double t_rel = ctx.spectral->t_rel;
    const Rat buser_lhs = ctx.p_min / (Rat(12) * phi * phi);
    const Rat upper = Rat(40) / (ctx.p_min * phi * phi);

    std::vector<LinkRecord> links;
    links.push_back(float_link("relaxation_ge_conductance_term", buser_lhs.get_d(), t_rel));
    // exact form of the classical spectral lower bound on mixing at level 1/4:
    // t_mix >= (t_rel - 1) ln 2. The unsharpened comparison t_rel <= t_mix can
    // fail at small scale (the lazy 4-cycle has t_rel = 2, t_mix = 1).
    links.push_back(float_link("mixing_ge_relaxation_term", (t_rel - 1.0) * std::log(2.0),
                               static_cast<double>(*ctx.t_mix)));
    links.push_back(exact_link("avg_mixing_le_conductance_term", Rat(*ctx.t_mix_sharp), upper));

    const bool equality = *ctx.t_mix == *ctx.t_mix_sharp && ctx.rows_tv_equal;

    Json jlinks = Json::object();
    bool all = equality;
    for (const auto& link : links) {
        jlinks[link.name] = link_json(link);
        all = all && link.pass;
    }
    rep.params["links"] = jlinks;
    rep.params["t_mix_equals_t_mix_sharp"] = (*ctx.t_mix == *ctx.t_mix_sharp);
    rep.params["per_row_tv_equal"] = ctx.rows_tv_equal;
    rep.params["naive_relaxation_le_mixing"] =
        t_rel <= static_cast<double>(*ctx.t_mix) + 1e-9;
    rep.params["t_rel"] = decimal_string(t_rel, 12);
    rep.params["t_mix"] = *ctx.t_mix;
    rep.params["t_mix_sharp"] = *ctx.t_mix_sharp;
    rep.params["ratio_t_mix_phi2_over_p"] =
        decimal_string(*ctx.t_mix * Rat(phi * phi / ctx.p_min).get_d(), 12);
    rep.params["ratio_t_rel_over_t_mix"] =
        decimal_string(t_rel / static_cast<double>(std::max(1L, *ctx.t_mix)), 12);

    rep.lhs = Value(Rat(*ctx.t_mix_sharp));
    rep.rhs = Value(upper);
    rep.slack = rep.rhs - rep.lhs;
    rep.mode = "float";  // the relaxation links carry eigensolver error
    rep.result = all ? CheckResult::Pass : CheckResult::Fail;
}

void verify_l1_cheeger(ChainContext& ctx, Checker& checker, Rng rng) {
    auto& rep = checker.emit("l1_cheeger");
    if (!checker.require(rep, {{ctx.within_limit(), "state count beyond the enumeration limit"}}))
        return;
    const int n = ctx.n;
    double worst_ratio = -1;
    Json binding;
    bool all = true;
    for (long t : {1L, 2L}) {
        Mat<double> rows = double_power(ctx.tc->chain, t);
        const double phi = phi_double_at(ctx, t);
        for (int draw = 0; draw < 16; ++draw) {
            std::vector<double> f(n);
            for (int i = 0; i < n; ++i) f[i] = 2.0 * rng.uniform() - 1.0;
            double mean = 0;
            for (int i = 0; i < n; ++i) mean += ctx.pi_d[i] * f[i];
            for (int i = 0; i < n; ++i) f[i] -= mean;
            auto record = l1_cheeger_record(ctx.pi_d, rows, phi, f);
            all = all && record.holds;
            const double ratio = record.rhs > 0 ? record.lhs / record.rhs : 0.0;
            if (ratio > worst_ratio) {
                worst_ratio = ratio;
                binding = Json{{"t", t},
                               {"draw", draw},
                               {"lhs", decimal_string(record.lhs, 12)},
                               {"rhs", decimal_string(record.rhs, 12)}};
            }
        }
    }
    rep.params = Json{{"draws_per_t", 16}, {"t_values", Json::array({1, 2})},
                      {"binding", binding}};
    checker.finish_float(rep, worst_ratio, 1.0);
    if (!all) rep.result = CheckResult::Fail;
}

void verify_concentration(ChainContext& ctx, Checker& checker, Rng rng) {
    auto& rep = checker.emit("tail_concentration");
    if (!checker.require(rep, {{ctx.within_limit(), "state count beyond the enumeration limit"}}))
        return;
    const int n = ctx.n;
    std::vector<std::pair<int, int>> edges;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (x != y && ctx.tc->chain.at(x, y) > Rat(0)) edges.push_back({x, y});
    const double phi = ctx.phi1->phi.get_d();

    // observables: graph distance from each of a few roots, plus random
    // 1-Lipschitz functions built as minima of shifted distance cones
    std::vector<std::vector<double>> observables;
    for (int root : {0, n / 2}) {
        std::vector<double> f(n);
        for (int x = 0; x < n; ++x) f[x] = ctx.metric(root, x);
        observables.push_back(std::move(f));
    }
    for (int draw = 0; draw < 12; ++draw) {
        const int anchors = 1 + static_cast<int>(rng.below(3));
        std::vector<double> f(n, 1e100);
        for (int a = 0; a < anchors; ++a) {
            const int z = static_cast<int>(rng.below(n));
            const double offset = 4.0 * rng.uniform() - 2.0;
            for (int x = 0; x < n; ++x)
                f[x] = std::min(f[x], ctx.metric(z, x) + offset);
        }
        observables.push_back(std::move(f));
    }

    bool all = true;
    double worst_ratio = -1;
    Json binding;
    int idx = 0;
    for (const auto& f : observables) {
        for (double a : {0.5, 1.0, 2.0}) {
            auto rec = concentration_record(ctx.pi_d, edges, phi, ctx.lazy, f, a);
            for (const InequalityRecord* r :
                 {&rec.upper, &rec.lower, rec.upper_sharp ? &*rec.upper_sharp : nullptr,
                  rec.lower_sharp ? &*rec.lower_sharp : nullptr}) {
                if (!r) continue;
                all = all && r->holds;
                const double ratio = r->rhs > 0 ? r->lhs / r->rhs : 0.0;
                if (ratio > worst_ratio) {
                    worst_ratio = ratio;
                    binding = Json{{"observable", idx},
                                   {"a", a},
                                   {"lhs", decimal_string(r->lhs, 12)},
                                   {"rhs", decimal_string(r->rhs, 12)}};
                }
            }
        }
        ++idx;
    }
    rep.params = Json{{"observables", static_cast<int>(observables.size())},
                      {"levels", Json::array({0.5, 1.0, 2.0})},
                      {"lazy_sharpening_checked", ctx.lazy},
                      {"binding", binding}};
    checker.finish_float(rep, worst_ratio, 1.0);
    if (!all) rep.result = CheckResult::Fail;
}

void check_power_conductance_spectral(ChainContext& ctx, Checker& checker) {
    auto& rep = checker.emit("power_conductance_ge_spectral");
    if (!checker.require(rep, {{ctx.reversible, "not reversible"},
                               {ctx.within_limit(), "state count beyond the enumeration limit"}}))
        return;
    // the spectral lower bound needs a non-negative spectrum: with eigenvalues
    // below zero the t-step form can dip under (1-lambda2^t)/2 (non-lazy
    // 5-cycle at t=2). Lazy reversible chains always qualify.
    const double lambda_min = ctx.spectral->eigenvalues.back();
    if (lambda_min < -1e-9) {
        checker.skip(rep, "spectrum has negative eigenvalues");
        return;
    }
    const double lambda2 = ctx.spectral->lambda2;
    bool all = true;
    double binding_lhs = 0, binding_rhs = 0;
    long binding_t = 0;
    double worst_margin = 1e300;
    for (const auto& [t, phi] : ctx.phi_scan_d) {
        const double rhs = (1.0 - std::pow(lambda2, static_cast<double>(t))) / 2.0;
        const double margin = phi - rhs;
        if (phi < rhs - 1e-9 * std::max(1.0, std::abs(rhs))) all = false;
        if (margin < worst_margin) {
            worst_margin = margin;
            binding_lhs = phi;
            binding_rhs = rhs;
            binding_t = t;
        }
    }
    if (ctx.phi_scan_d.empty()) {
        checker.skip(rep, "no conductance values computed");
        return;
    }
    rep.params = Json{{"binding_t", binding_t},
                      {"lambda2", decimal_string(lambda2, 12)},
                      {"grid_size", static_cast<int>(ctx.phi_scan_d.size())}};
    checker.finish_float(rep, binding_rhs, binding_lhs);  // spectral bound <= phi
    if (!all) rep.result = CheckResult::Fail;
}

void check_buser(ChainContext& ctx, Checker& checker) {
    auto& rep = checker.emit("buser_relaxation_lower", /*external=*/true);
    if (!checker.require(rep, {{ctx.reversible, "not reversible"},
                               {ctx.curved, "curvature not certified non-negative"},
                               {ctx.within_limit(), "state count beyond the enumeration limit"}}))
        return;
    const Rat& phi = ctx.phi1->phi;
    Rat lhs = ctx.p_min / (Rat(12) * phi * phi);
    rep.params = Json{{"phi", ratio_string(phi)}, {"t_rel", decimal_string(ctx.spectral->t_rel, 12)}};
    checker.finish_float(rep, lhs.get_d(), ctx.spectral->t_rel);
}

void check_good_coupling(ChainContext& ctx, Checker& checker) {
    auto& rep = checker.emit("good_coupling_mass");
    if (!checker.require(rep, {{ctx.lazy, "not lazy (coupling lemma hypothesis)"}})) return;
    const int n = ctx.n;
    bool first = true;
    Rat min_gamma;
    int bx = 0, by = 0;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            if (x == y) continue;
            const int dxy = ctx.metric(x, y);
            Rat gamma(0);
            for (const auto& [uv, w] : ctx.kernel->row(x, y))
                if (ctx.metric(uv.first, uv.second) < dxy) gamma += w;
            if (first || gamma < min_gamma) {
                min_gamma = gamma;
                bx = x;
                by = y;
                first = false;
            }
        }
    rep.params = Json{{"x", bx}, {"y", by}, {"pairs_checked", n * (n - 1)}};
    checker.finish_exact(rep, ctx.p_min, min_gamma);  // P_min <= chi(Gamma)
}

void check_coupling_contraction(ChainContext& ctx, Checker& checker) {
    auto& rep = checker.emit("coupling_contraction");
    if (!checker.require(rep, {{ctx.lazy, "not lazy"},
                               {ctx.curved, "curvature not certified non-negative"}}))
        return;
    const int n = ctx.n;
    bool all = true;
    Rat worst_lhs(0), worst_rhs(1);
    int bx = 0, by = 1;
    bool first = true;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            if (x == y) continue;
            Rat expected(0);
            for (const auto& [uv, w] : ctx.kernel->row(x, y))
                expected += w * Rat(ctx.metric(uv.first, uv.second));
            Rat dist(ctx.metric(x, y));
            if (expected > dist) all = false;
            if (first || expected * worst_rhs > worst_lhs * dist) {
                worst_lhs = expected;
                worst_rhs = dist;
                bx = x;
                by = y;
                first = false;
            }
        }
    rep.params = Json{{"x", bx}, {"y", by}};
    checker.finish_exact(rep, worst_lhs, worst_rhs);
    if (!all) rep.result = CheckResult::Fail;
}

void check_coupling_tv_domination(ChainContext& ctx, Checker& checker) {
    auto& rep = checker.emit("coupling_tv_domination");
    if (!checker.require(rep, {{ctx.lazy, "not lazy"},
                               {ctx.curved, "curvature not certified non-negative"},
                               {ctx.n <= 8, "kernel power check restricted to n <= 8"}}))
        return;
    if (ctx.far_pair_tv.size() < 2) {
        checker.skip(rep, "no exact pair curve available");
        return;
    }
    const int n = ctx.n;
    const long t_max = std::min<long>(static_cast<long>(ctx.far_pair_tv.size()) - 1, 64);
    // delta at (far_x, far_y), evolved through the kernel
    std::vector<Rat> dist(static_cast<size_t>(n) * n, Rat(0));
    dist[static_cast<size_t>(ctx.far_x) * n + ctx.far_y] = Rat(1);
    bool all = true;
    Rat binding_lhs(0), binding_rhs(1);
    long binding_t = 1;
    bool first = true;
    for (long t = 1; t <= t_max; ++t) {
        dist = ctx.kernel->evolve(dist);
        Rat meet_complement(0);
        for (int u = 0; u < n; ++u)
            for (int v = 0; v < n; ++v)
                if (u != v) meet_complement += dist[static_cast<size_t>(u) * n + v];
        // far_pair_tv[t-1] stores TV at step t (collected for t >= 1... index check below)
        const Rat& tv = ctx.far_pair_tv[t];
        if (tv > meet_complement) all = false;
        if (first || tv * binding_rhs > binding_lhs * meet_complement) {
            binding_lhs = tv;
            binding_rhs = meet_complement;
            binding_t = t;
            first = false;
        }
    }
    rep.params = Json{{"x", ctx.far_x}, {"y", ctx.far_y}, {"t_max", t_max},
                      {"binding_t", binding_t}};
    checker.finish_exact(rep, binding_lhs, binding_rhs);
    if (!all) rep.result = CheckResult::Fail;
}

// =============================================================================
// Supermartingale Monte Carlo
// =============================================================================

struct McOutcome {
    std::vector<TailEstimate> tails;
    bool below_bound = true;
    bool matches_oracle = true;
    bool exact_below_bound = true;
};

McOutcome evaluate_tails(std::vector<TailEstimate> tails, const SupermartingaleTrial& trial) {
    McOutcome out;
    const double delta = 0.01 / static_cast<double>(tails.size());  // Bonferroni at 99%
    for (TailEstimate& tail : tails) {
        tail.radius = binom_radius(trial.trials, delta);
        if (tail.empirical - tail.radius > tail.bound) out.below_bound = false;
        if (tail.exact) {
            const double two_sided = binom_radius(trial.trials, delta / 2);
            if (std::abs(tail.empirical - tail.exact->get_d()) > two_sided)
                out.matches_oracle = false;
            // exact tail <= bound, compared in squares to stay rational:
            // tail^2 p t <= 10 z0^2
            Rat lhs = *tail.exact * *tail.exact * trial.move_probability * Rat(tail.t);
            Rat rhs = Rat(10) * Rat(trial.z0) * Rat(trial.z0);
            if (lhs > rhs) out.exact_below_bound = false;
        }
    }
    out.tails = std::move(tails);
    return out;
}

Json tails_json(const McOutcome& outcome) {
    Json arr = Json::array();
    for (const auto& tail : outcome.tails) {
        Json j{{"t", tail.t},
               {"empirical", decimal_string(tail.empirical, 12)},
               {"radius", decimal_string(tail.radius, 12)},
               {"bound", decimal_string(tail.bound, 12)}};
        j["exact"] = tail.exact ? Json(ratio_string(*tail.exact)) : Json(nullptr);
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace

std::vector<TailEstimate> simulate_reflected_walk_tails(int m, const SupermartingaleTrial& trial) {
    // absorbed at 0; interior: +-1 w.p. 1/4, stay 1/2; at m: down 1/2, stay 1/2
    std::vector<long> absorb_counts(trial.t_grid.size(), 0);
    const long t_max = *std::max_element(trial.t_grid.begin(), trial.t_grid.end());
    Rng rng(trial.seed);
    for (long trial_i = 0; trial_i < trial.trials; ++trial_i) {
        long z = trial.z0;
        long tau = t_max + 1;
        for (long t = 1; t <= t_max; ++t) {
            const uint64_t r = rng.next();
            if (z == m) {
                if (r >> 63)
                    z -= 1;  // down w.p. 1/2
            } else {
                const int move = static_cast<int>(r >> 62);
                if (move == 0)
                    z -= 1;
                else if (move == 1)
                    z += 1;
            }
            if (z == 0) {
                tau = t;
                break;
            }
        }
        for (size_t g = 0; g < trial.t_grid.size(); ++g)
            if (tau >= trial.t_grid[g]) ++absorb_counts[g];
    }

    // exact absorption oracle by matrix powers on {0..m}
    Mat<Rat> M(m + 1, m + 1, Rat(0));
    M(0, 0) = Rat(1);
    for (int z = 1; z <= m; ++z) {
        if (z == m) {
            M(z, z) = rat_of(1, 2);
            M(z, z - 1) = rat_of(1, 2);
        } else {
            M(z, z) = rat_of(1, 2);
            M(z, z - 1) = rat_of(1, 4);
            M(z, z + 1) = rat_of(1, 4);
        }
    }
    std::vector<TailEstimate> tails;
    std::vector<Rat> row(m + 1, Rat(0));
    row[trial.z0] = Rat(1);
    long steps_done = 0;
    for (size_t g = 0; g < trial.t_grid.size(); ++g) {
        const long t = trial.t_grid[g];
        while (steps_done < t - 1) {
            row = vec_mat(row, M);
            ++steps_done;
        }
        TailEstimate tail;
        tail.t = t;
        tail.empirical = static_cast<double>(absorb_counts[g]) / trial.trials;
        tail.bound = trial.z0 * std::sqrt(10.0 / (trial.move_probability.get_d() * t));
        tail.exact = Rat(1) - row[0];  // P(tau >= t) = P(Z_{t-1} != 0)
        tails.push_back(std::move(tail));
    }
    return tails;
}

std::vector<TailEstimate> simulate_coupled_tails(const Chain<Rat>& chain,
                                                 const DirectedMetric& metric,
                                                 const CouplingKernel<Rat>& kernel, int x0,
                                                 int y0, const SupermartingaleTrial& trial) {
    (void)metric;
    const int n = chain.size();
    const long t_max = *std::max_element(trial.t_grid.begin(), trial.t_grid.end());

    // per-row cumulative weights for sampling
    std::vector<std::vector<double>> cumulative(static_cast<size_t>(n) * n);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            const auto& row = kernel.row(x, y);
            auto& cum = cumulative[static_cast<size_t>(x) * n + y];
            double acc = 0;
            for (const auto& [uv, w] : row) {
                acc += w.get_d();
                cum.push_back(acc);
            }
        }

    std::vector<long> counts(trial.t_grid.size(), 0);
    Rng rng(trial.seed);
    for (long trial_i = 0; trial_i < trial.trials; ++trial_i) {
        int x = x0, y = y0;
        long tau = t_max + 1;
        for (long t = 1; t <= t_max; ++t) {
            const auto& row = kernel.row(x, y);
            const auto& cum = cumulative[static_cast<size_t>(x) * n + y];
            const int pick = sample_cumulative(cum, rng.uniform());
            x = row[pick].first.first;
            y = row[pick].first.second;
            if (x == y) {
                tau = t;
                break;
            }
        }
        for (size_t g = 0; g < trial.t_grid.size(); ++g)
            if (tau >= trial.t_grid[g]) ++counts[g];
    }

    // exact tails through kernel powers on V x V
    std::vector<Rat> dist(static_cast<size_t>(n) * n, Rat(0));
    dist[static_cast<size_t>(x0) * n + y0] = Rat(1);
    std::vector<TailEstimate> tails;
    long steps_done = 0;
    for (size_t g = 0; g < trial.t_grid.size(); ++g) {
        const long t = trial.t_grid[g];
        while (steps_done < t - 1) {
            dist = kernel.evolve(dist);
            ++steps_done;
        }
        Rat off_diag(0);
        for (int u = 0; u < n; ++u)
            for (int v = 0; v < n; ++v)
                if (u != v) off_diag += dist[static_cast<size_t>(u) * n + v];
        TailEstimate tail;
        tail.t = t;
        tail.empirical = static_cast<double>(counts[g]) / trial.trials;
        tail.bound = trial.z0 * std::sqrt(10.0 / (trial.move_probability.get_d() * t));
        tail.exact = off_diag;
        tails.push_back(std::move(tail));
    }
    return tails;
}

// =============================================================================
// Suite driver
// =============================================================================

namespace {

void check_corpus_tags(const ChainContext& ctx, std::vector<CorpusError>& errors) {
    const TaggedChain& tc = *ctx.tc;
    if (tc.expect_lazy != ctx.lazy)
        errors.push_back({tc.name, "laziness tag mismatch"});
    if (tc.expect_reversible != ctx.reversible)
        errors.push_back({tc.name, "reversibility tag mismatch"});
    if (ctx.transitive_spot_checked && tc.expect_transitive != ctx.transitive)
        errors.push_back({tc.name, "transitivity tag mismatch"});
    switch (tc.expect_curvature) {
        case CurvatureExpectation::NonNegative:
            if (ctx.curvature.verdict != CurvatureVerdict::NonNegative)
                errors.push_back({tc.name, "expected non-negative curvature, certifier says " +
                                               std::string(verdict_name(ctx.curvature.verdict))});
            break;
        case CurvatureExpectation::Negative:
            if (ctx.curvature.verdict != CurvatureVerdict::Negative)
                errors.push_back({tc.name, "expected negative curvature, certifier says " +
                                               std::string(verdict_name(ctx.curvature.verdict))});
            break;
        default:
            break;
    }
}

ChainSummary summarize(const ChainContext& ctx) {
    ChainSummary s;
    s.name = ctx.tc->name;
    s.family = ctx.tc->family;
    s.params = ctx.tc->params;
    s.n = ctx.n;
    s.lazy = ctx.lazy;
    s.reversible = ctx.reversible;
    s.transitive = ctx.transitive;
    s.curvature_verdict = verdict_name(ctx.curvature.verdict);
    if (ctx.curvature.witness)
        s.curvature_witness = {ctx.curvature.witness->x, ctx.curvature.witness->y};
    s.p_min = Value(ctx.p_min);
    s.diam = ctx.diam;
    s.diam_sharp = Value(ctx.diam_sharp);
    if (ctx.phi1) s.phi = Value(ctx.phi1->phi);
    s.t_mix = ctx.t_mix;
    s.t_mix_sharp = ctx.t_mix_sharp;
    if (ctx.spectral) s.t_rel = ctx.spectral->t_rel;
    s.horizon = ctx.horizon_chain;
    s.t_sweep = ctx.t_sweep;
    s.truncated = ctx.truncated;
    return s;
}

}  // namespace

SuiteResult run_suite(const std::vector<TaggedChain>& corpus, const RunConfig& config) {
    SuiteResult result;
    result.config = config;
    if (corpus.empty()) return result;
    result.reports.reserve(corpus.size() * 20 + 8);

    Rng root(config.seed);
    const ChainContext* coupled_builtin = nullptr;
    std::vector<ChainContext> contexts;
    contexts.reserve(corpus.size());

    for (const TaggedChain& tc : corpus) {
        try {
            contexts.push_back(build_context(tc, config));
        } catch (const ChainError& e) {
            result.corpus_errors.push_back({tc.name, std::string("analysis failed: ") + e.what()});
        }
    }

    for (ChainContext& ctx : contexts) {
        check_corpus_tags(ctx, result.corpus_errors);
        result.chains.push_back(summarize(ctx));

        Checker checker(ctx, result.reports);
        try {
            check_tv_decay(ctx, checker);
            check_diameter_bounds(ctx, checker);
            check_main_estimate(ctx, checker);
            check_conductance_bound(ctx, checker);
            check_expansion(ctx, checker);
            check_diameter_lower(ctx, checker);
            check_escape(ctx, checker);
            check_sandwich(ctx, checker);
            verify_l1_cheeger(ctx, checker, root.fork(ctx.tc->name + "/l1"));
            verify_concentration(ctx, checker, root.fork(ctx.tc->name + "/conc"));
            check_power_conductance_spectral(ctx, checker);
            check_buser(ctx, checker);
            check_good_coupling(ctx, checker);
            check_coupling_contraction(ctx, checker);
            check_coupling_tv_domination(ctx, checker);
        } catch (const ChainError& e) {
            result.corpus_errors.push_back(
                {ctx.tc->name, std::string("check crashed: ") + e.what()});
        }

        if (!coupled_builtin && ctx.lazy && ctx.curved && ctx.n <= 8)
            coupled_builtin = &ctx;
    }

    // built-in supermartingale (a): coupled-chain distance process
    if (coupled_builtin) {
        const ChainContext& ctx = *coupled_builtin;
        SupermartingaleTrial trial;
        trial.name = "coupled-" + ctx.tc->name;
        trial.seed = root.fork("supermartingale/coupled").next();
        trial.trials = config.mc_trials;
        trial.move_probability = ctx.p_min;
        trial.z0 = ctx.metric(ctx.far_x, ctx.far_y);
        auto outcome = evaluate_tails(
            simulate_coupled_tails(ctx.tc->chain, ctx.metric, *ctx.kernel, ctx.far_x,
                                   ctx.far_y, trial),
            trial);
        InequalityReport rep;
        rep.chain = ctx.tc->name;
        rep.statement = "supermartingale_tail_coupled";
        rep.hypotheses = ctx.hypotheses();
        rep.mode = "float";
        rep.params = Json{{"x0", ctx.far_x},        {"y0", ctx.far_y},
                          {"z0", trial.z0},          {"p", ratio_string(trial.move_probability)},
                          {"trials", trial.trials},  {"seed", trial.seed},
                          {"tails", tails_json(outcome)},
                          {"matches_exact_oracle", outcome.matches_oracle},
                          {"exact_below_bound", outcome.exact_below_bound}};
        const auto& last = outcome.tails.back();
        rep.lhs = Value(last.empirical - last.radius);
        rep.rhs = Value(last.bound);
        rep.slack = rep.rhs - rep.lhs;
        rep.result = outcome.below_bound && outcome.matches_oracle && outcome.exact_below_bound
                         ? CheckResult::Pass
                         : CheckResult::Fail;
        result.reports.push_back(std::move(rep));
    }

    // built-in (b): lazy reflected walk absorbed at the origin
    {
        SupermartingaleTrial trial;
        trial.name = "reflected-walk-8";
        trial.seed = root.fork("supermartingale/reflected").next();
        trial.trials = config.mc_trials;
        trial.move_probability = rat_of(1, 2);
        trial.z0 = 4;
        auto outcome = evaluate_tails(simulate_reflected_walk_tails(8, trial), trial);
        InequalityReport rep;
        rep.chain = "reflected-walk-8";
        rep.statement = "supermartingale_tail_reflected";
        rep.mode = "float";
        rep.params = Json{{"m", 8},
                          {"z0", trial.z0},
                          {"p", ratio_string(trial.move_probability)},
                          {"trials", trial.trials},
                          {"seed", trial.seed},
                          {"tails", tails_json(outcome)},
                          {"matches_exact_oracle", outcome.matches_oracle},
                          {"exact_below_bound", outcome.exact_below_bound}};
        const auto& last = outcome.tails.back();
        rep.lhs = Value(last.empirical - last.radius);
        rep.rhs = Value(last.bound);
        rep.slack = rep.rhs - rep.lhs;
        rep.result = outcome.below_bound && outcome.matches_oracle && outcome.exact_below_bound
                         ? CheckResult::Pass
                         : CheckResult::Fail;
        result.reports.push_back(std::move(rep));
    }

    // external results that fail indicate corpus or computation defects
    for (const InequalityReport& rep : result.reports)
        if (rep.external && rep.result == CheckResult::Fail)
            result.corpus_errors.push_back({rep.chain, "external result failed: " + rep.statement});

    std::stable_sort(result.reports.begin(), result.reports.end(),
                     [](const InequalityReport& a, const InequalityReport& b) {
                         if (a.chain != b.chain) return a.chain < b.chain;
                         return a.statement < b.statement;
                     });
    for (const InequalityReport& rep : result.reports) {
        switch (rep.result) {
            case CheckResult::Pass: ++result.passed; break;
            case CheckResult::Fail: ++result.failed; break;
            case CheckResult::Skip: ++result.skipped; break;
        }
    }
    return result;
}

// =============================================================================
// Serialization
// =============================================================================

Json suite_json(const SuiteResult& result) {
    Json doc;
    doc["schema_version"] = 1;
    doc["config"] = Json{{"corpus", result.config.corpus},
                         {"seed", result.config.seed},
                         {"horizon_override", result.config.horizon_override
                                                  ? Json(*result.config.horizon_override)
                                                  : Json(nullptr)},
                         {"enum_limit", result.config.enum_limit},
                         {"bit_budget", result.config.bit_budget},
                         {"cutoff_p_min", ratio_string(result.config.cutoff_p_min)},
                         {"mc_trials", result.config.mc_trials}};

    Json chains = Json::array();
    for (const ChainSummary& s : result.chains) {
        Json j;
        j["name"] = s.name;
        j["family"] = s.family;
        j["params"] = s.params;
        j["n"] = s.n;
        j["lazy"] = s.lazy;
        j["reversible"] = s.reversible;
        j["transitive"] = s.transitive;
        j["curvature"] = s.curvature_verdict;
        if (s.curvature_witness)
            j["curvature_witness"] = Json::array({s.curvature_witness->first,
                                                  s.curvature_witness->second});
        j["p_min"] = value_json(s.p_min);
        j["diam"] = s.diam;
        j["diam_sharp"] = value_json(s.diam_sharp);
        j["phi"] = s.phi ? value_json(*s.phi) : Json(nullptr);
        j["t_mix"] = s.t_mix ? Json(*s.t_mix) : Json(nullptr);
        j["t_mix_sharp"] = s.t_mix_sharp ? Json(*s.t_mix_sharp) : Json(nullptr);
        j["t_rel"] = s.t_rel ? Json(decimal_string(*s.t_rel, 12)) : Json(nullptr);
        j["horizon"] = s.horizon;
        j["t_checked"] = s.t_sweep;
        j["truncated"] = s.truncated;
        chains.push_back(std::move(j));
    }
    doc["chains"] = std::move(chains);

    Json reports = Json::array();
    for (const InequalityReport& rep : result.reports) {
        Json j;
        j["chain"] = rep.chain;
        j["statement"] = rep.statement;
        j["external"] = rep.external;
        j["hypotheses"] = Json{{"lazy", rep.hypotheses.lazy},
                               {"reversible", rep.hypotheses.reversible},
                               {"transitive", rep.hypotheses.transitive},
                               {"nonneg_curved", rep.hypotheses.nonneg_curved},
                               {"p_min_ge_threshold", rep.hypotheses.p_min_ge_threshold},
                               {"within_enum_limit", rep.hypotheses.within_enum_limit}};
        j["result"] = result_name(rep.result);
        if (rep.result == CheckResult::Skip) j["skip_reason"] = rep.skip_reason;
        j["mode"] = rep.mode;
        j["lhs"] = value_json(rep.lhs);
        j["rhs"] = value_json(rep.rhs);
        j["slack"] = value_json(rep.slack);
        j["params"] = rep.params;
        reports.push_back(std::move(j));
    }
    doc["reports"] = std::move(reports);

    Json errors = Json::array();
    for (const CorpusError& e : result.corpus_errors)
        errors.push_back(Json{{"chain", e.chain}, {"what", e.what}});
    doc["corpus_errors"] = std::move(errors);

    doc["summary"] = Json{{"chains", static_cast<long>(result.chains.size())},
                          {"pass", result.passed},
                          {"fail", result.failed},
                          {"skip", result.skipped},
                          {"corpus_errors", static_cast<long>(result.corpus_errors.size())},
                          {"clean", result.clean()}};
    return doc;
}

std::string suite_table(const SuiteResult& result) {
    std::ostringstream os;
    for (const InequalityReport& rep : result.reports) {
        os << result_name(rep.result) << "  " << rep.chain << "  " << rep.statement;
        if (rep.result == CheckResult::Skip)
            os << "  (" << rep.skip_reason << ")";
        else
            os << "  lhs=" << decimal_string(rep.lhs.approx, 12)
               << " rhs=" << decimal_string(rep.rhs.approx, 12)
               << " slack=" << decimal_string(rep.slack.approx, 12) << " [" << rep.mode << "]";
        os << '\n';
    }
    for (const CorpusError& e : result.corpus_errors)
        os << "corpus-error  " << e.chain << "  " << e.what << '\n';
    os << "chains=" << result.chains.size() << " pass=" << result.passed
       << " fail=" << result.failed << " skip=" << result.skipped
       << " corpus_errors=" << result.corpus_errors.size()
       << (result.clean() ? "  CLEAN" : "  NOT CLEAN") << '\n';
    return os.str();
}

}  // namespace curvmix
