#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "curvmix/conductance.hpp"
#include "curvmix/generators.hpp"
#include "curvmix/io.hpp"
#include "curvmix/mixing.hpp"
#include "curvmix/profile.hpp"
#include "curvmix/transport.hpp"

namespace curvmix {

// =============================================================================
// Inequality verification suite
// =============================================================================

struct RunConfig {
    std::string corpus = "default";
    uint64_t seed = 0;
    std::optional<long> horizon_override;
    int enum_limit = kConductanceEnumLimit;
    size_t bit_budget = kDefaultBitBudget;
    // sparsity threshold gating the sandwich check; the sandwich constants do
    // not depend on it, so the default admits every built-in walk (the
    // sparsest corpus chain has P_min = 1/12)
    Rat cutoff_p_min = Rat(1, 16);
    long mc_trials = 100000;
};

struct Hypotheses {
    bool lazy = false;
    bool reversible = false;
    bool transitive = false;
    bool nonneg_curved = false;
    bool p_min_ge_threshold = false;
    bool within_enum_limit = false;
};

enum class CheckResult { Pass, Fail, Skip };

inline const char* result_name(CheckResult r) {
    switch (r) {
        case CheckResult::Pass: return "pass";
        case CheckResult::Fail: return "fail";
        default: return "skip";
    }
}

struct InequalityReport {
    std::string chain;
    std::string statement;
    bool external = false;  // cited result: a failure is a corpus error
    Hypotheses hypotheses;
    CheckResult result = CheckResult::Skip;
    std::string skip_reason;
    std::string mode = "exact";
    Value lhs, rhs, slack;
    Json params = Json::object();
};

struct CorpusError {
    std::string chain;
    std::string what;
};

struct ChainSummary {
    std::string name, family, params;
    int n = 0;
    bool lazy = false, reversible = false, transitive = false;
    std::string curvature_verdict;
    std::optional<std::pair<int, int>> curvature_witness;
    Value p_min;
    int diam = 0;
    Value diam_sharp;
    std::optional<Value> phi;
    std::optional<long> t_mix, t_mix_sharp;
    std::optional<double> t_rel;
    long horizon = 0;
    long t_sweep = 0;
    bool truncated = false;
};

struct SuiteResult {
    RunConfig config;
    std::vector<ChainSummary> chains;
    std::vector<InequalityReport> reports;
    std::vector<CorpusError> corpus_errors;
    long passed = 0, failed = 0, skipped = 0;

    bool clean() const { return failed == 0 && corpus_errors.empty(); }
};

SuiteResult run_suite(const std::vector<TaggedChain>& corpus, const RunConfig& config);

Json suite_json(const SuiteResult& result);

// one line per statement, plus totals; every number shown also sits in the JSON
std::string suite_table(const SuiteResult& result);

// =============================================================================
// Supermartingale Monte Carlo
// =============================================================================

struct SupermartingaleTrial {
    std::string name;
    uint64_t seed = 0;
    long trials = 100000;
    std::vector<long> t_grid = {16, 64, 256};
    Rat move_probability = Rat(1, 2);  // certified lower bound p
    long z0 = 4;
};

struct TailEstimate {
    long t = 0;
    double empirical = 0;     // fraction of trials with tau >= t
    double radius = 0;        // Bonferroni-adjusted binomial confidence radius
    double bound = 0;         // z0 sqrt(10/(p t))
    std::optional<Rat> exact; // exact tail when an oracle is available
};

// built-in (b): lazy reflected walk on {0..m} absorbed at 0, p = 1/2
std::vector<TailEstimate> simulate_reflected_walk_tails(int m, const SupermartingaleTrial& trial);

// built-in (a): coupled-chain distance process under the coupling kernel
std::vector<TailEstimate> simulate_coupled_tails(const Chain<Rat>& chain,
                                                 const DirectedMetric& metric,
                                                 const CouplingKernel<Rat>& kernel, int x0,
                                                 int y0, const SupermartingaleTrial& trial);

}  // namespace curvmix
