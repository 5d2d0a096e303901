#include "curvmix/profile.hpp"

#include <sstream>

namespace curvmix {

namespace {

// double-mode power iteration mirroring PowerSweep's interface
struct FloatSweep {
    explicit FloatSweep(const Chain<double>& chain) : chain_(&chain) {
        const int n = chain.size();
        rows_ = Mat<double>(n, n, 0.0);
        for (int i = 0; i < n; ++i) rows_(i, i) = 1.0;
    }
    void step() {
        Mat<double> next;
        mat_mul(rows_, chain_->matrix(), next);
        rows_ = std::move(next);
    }
    const Chain<double>* chain_;
    Mat<double> rows_;
};

long horizon_for(int diam, double p_min_d, const std::optional<long>& override_h) {
    if (override_h) return std::max(1L, *override_h);
    double h = 32.0 * diam * diam / p_min_d;
    return std::max(1L, static_cast<long>(std::ceil(h)));
}

template <typename T>
ChainProfile analyze_impl(const Chain<T>& chain, const AnalyzeOptions& options) {
    ChainProfile out;
    const int n = chain.size();
    out.n = n;
    out.mode = NumTraits<T>::mode_name;

    const DirectedMetric metric = directed_metric(chain);
    const std::vector<T> pi = stationary(chain);
    for (const T& v : pi) out.pi.push_back(Value(v));
    const T p_min = chain.p_min();
    out.p_min = Value(p_min);
    out.lazy = chain.is_lazy();
    out.reversible = is_reversible(chain, pi);
    if (n <= kTransitivitySearchLimit) out.transitive = is_transitive(chain);
    out.diam = metric.diam();
    out.diam_sharp = Value(effective_diameter(pi, metric));

    if (n >= 2) {
        if (n <= options.enum_limit) {
            auto phi = conductance_from_rows(pi, chain.matrix(), 1, options.enum_limit);
            out.phi = Value(phi.phi);
            out.phi_argmin = phi.argmin_set;
        } else {
            auto phi = conductance_upper_bound_sweep(chain, 1, options.bit_budget);
            out.phi = Value(phi.phi);
            out.phi_upper_bound_only = true;
            out.phi_argmin = phi.argmin_set;
        }
    }

    auto curvature = certify_curvature(chain, metric);
    out.curvature_verdict = verdict_name(curvature.verdict);
    if (curvature.witness) {
        out.curvature_witness = {curvature.witness->x, curvature.witness->y};
        out.curvature_witness_w1 = Value(curvature.witness->w1_value);
    }

    if (out.reversible && n >= 2) out.t_rel = spectral_profile(chain, pi).t_rel;

    out.horizon = horizon_for(metric.diam(), NumTraits<T>::to_double(p_min),
                              options.horizon_override);

    // mixing and displacement curves, stopped once both thresholds are met
    std::vector<double> pi_d(n);
    for (int i = 0; i < n; ++i) pi_d[i] = NumTraits<T>::to_double(pi[i]);

    auto consume_rows = [&](long t, const auto& rows, const auto& pi_vec) {
        using S = std::decay_t<decltype(pi_vec[0])>;
        std::vector<S> tv = row_tv_to_stationary(rows, pi_vec);
        S worst(0), avg(0);
        for (int x = 0; x < n; ++x) {
            if (tv[x] > worst) worst = tv[x];
            avg += pi_vec[x] * tv[x];
        }
        S disp = mean_displacement(pi_vec, rows, metric);
        ChainProfile::TraceRow row{t, Value(worst), Value(avg), Value(disp), std::nullopt};
        if (t >= 1 && n >= 2 && n <= options.enum_limit && options.with_trace) {
            auto phi_t = conductance_from_rows(pi_vec, rows, t, options.enum_limit);
            row.phi_pt = Value(phi_t.phi);
        }
        out.trace.push_back(std::move(row));
        const Rat threshold = rat_of(1, 4);
        if (!out.t_mix && dominates(Value(worst), Value(threshold))) out.t_mix = t;
        if (!out.t_mix_sharp && dominates(Value(avg), Value(threshold)))
            out.t_mix_sharp = t;
    };

    if constexpr (NumTraits<T>::exact) {
        PowerSweep sweep(chain, options.bit_budget);
        for (long t = 0; t <= out.horizon; ++t) {
            if (t > 0) sweep.step();
            if (sweep.exact())
                consume_rows(t, sweep.exact_rows(), pi);
            else
                consume_rows(t, sweep.float_rows(), pi_d);
            if (out.t_mix && out.t_mix_sharp) break;
        }
        out.float_switch_t = sweep.switch_t();
    } else {
        FloatSweep sweep(chain);
        for (long t = 0; t <= out.horizon; ++t) {
            if (t > 0) sweep.step();
            consume_rows(t, sweep.rows_, pi_d);
            if (out.t_mix && out.t_mix_sharp) break;
        }
    }
    out.truncated = !(out.t_mix && out.t_mix_sharp);
    out.displacement_final = out.trace.back().displacement;
    if (!options.with_trace) {
        // keep the curves out of the profile when no trace was requested
        // (the JSON stays small; t_mix and friends are already extracted)
        out.trace.clear();
    }
    return out;
}

}  // namespace

ChainProfile analyze_chain(const AnyChain& chain, const AnalyzeOptions& options) {
    return std::visit([&](const auto& c) { return analyze_impl(c, options); }, chain);
}

Json profile_json(const ChainProfile& p) {
    Json doc;
    doc["n"] = p.n;
    doc["mode"] = p.mode;
    doc["lazy"] = p.lazy;
    doc["reversible"] = p.reversible;
    doc["transitive"] = p.transitive ? Json(*p.transitive) : Json(nullptr);
    Json pi = Json::array();
    for (const Value& v : p.pi) pi.push_back(value_json(v));
    doc["pi"] = std::move(pi);
    doc["p_min"] = value_json(p.p_min);
    doc["diam"] = p.diam;
    doc["diam_sharp"] = value_json(p.diam_sharp);
    if (p.phi) {
        doc["phi"] = value_json(*p.phi);
        doc["phi_upper_bound_only"] = p.phi_upper_bound_only;
        doc["phi_argmin"] = p.phi_argmin;
    } else {
        doc["phi"] = nullptr;
    }
    doc["curvature"] = p.curvature_verdict;
    if (p.curvature_witness) {
        doc["curvature_witness"] = {{"x", p.curvature_witness->first},
                                    {"y", p.curvature_witness->second},
                                    {"w1", value_json(*p.curvature_witness_w1)}};
    }
    doc["horizon"] = p.horizon;
    doc["t_mix"] = p.t_mix ? Json(*p.t_mix) : Json(nullptr);
    doc["t_mix_sharp"] = p.t_mix_sharp ? Json(*p.t_mix_sharp) : Json(nullptr);
    doc["truncated"] = p.truncated;
    doc["float_switch_t"] = p.float_switch_t ? Json(*p.float_switch_t) : Json(nullptr);
    doc["t_rel"] = p.t_rel ? Json(decimal_string(*p.t_rel, 12)) : Json(nullptr);
    doc["displacement_final"] = value_json(p.displacement_final);
    return doc;
}

std::string trace_csv(const ChainProfile& profile) {
    std::ostringstream os;
    os << "t,d_tv,d_tv_sharp,displacement,phi_pt\n";
    for (const auto& row : profile.trace) {
        os << row.t << ',' << decimal_string(row.d_tv.approx, 12) << ','
           << decimal_string(row.d_tv_sharp.approx, 12) << ','
           << decimal_string(row.displacement.approx, 12) << ',';
        if (row.phi_pt) os << decimal_string(row.phi_pt->approx, 12);
        os << '\n';
    }
    return os.str();
}

}  // namespace curvmix
