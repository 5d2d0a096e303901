#pragma once

#include <optional>
#include <string>
#include <vector>

#include "curvmix/conductance.hpp"
#include "curvmix/io.hpp"
#include "curvmix/mixing.hpp"
#include "curvmix/transport.hpp"

namespace curvmix {

struct AnalyzeOptions {
    std::optional<long> horizon_override;
    int enum_limit = kConductanceEnumLimit;
    size_t bit_budget = kDefaultBitBudget;
    bool with_trace = false;
};

// The full statistics bundle for one chain: stationary data, metric scales,
// conductance, curvature verdict, mixing and displacement curves.
struct ChainProfile {
    int n = 0;
    std::string mode;
    std::vector<Value> pi;
    Value p_min;
    bool lazy = false;
    bool reversible = false;
    std::optional<bool> transitive;  // unset when beyond the generic search cap
    int diam = 0;
    Value diam_sharp;
    std::optional<Value> phi;  // Phi(P), or a flagged upper bound
    bool phi_upper_bound_only = false;
    std::vector<int> phi_argmin;
    std::string curvature_verdict;
    std::optional<std::pair<int, int>> curvature_witness;
    std::optional<Value> curvature_witness_w1;
    long horizon = 0;
    std::optional<long> t_mix;
    std::optional<long> t_mix_sharp;
    bool truncated = false;
    std::optional<long> float_switch_t;
    std::optional<double> t_rel;
    Value displacement_final;

    struct TraceRow {
        long t;
        Value d_tv, d_tv_sharp, displacement;
        std::optional<Value> phi_pt;
    };
    std::vector<TraceRow> trace;
};

ChainProfile analyze_chain(const AnyChain& chain, const AnalyzeOptions& options);

Json profile_json(const ChainProfile& profile);
std::string trace_csv(const ChainProfile& profile);

}  // namespace curvmix
