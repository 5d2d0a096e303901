// curvmix: generate Markov chains, analyze a chain file, or run the
// inequality verification suite over the built-in corpus.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "curvmix/generators.hpp"
#include "curvmix/io.hpp"
#include "curvmix/profile.hpp"
#include "curvmix/verifier.hpp"

namespace {

using namespace curvmix;

constexpr int kExitClean = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::cout << text;
    else
        write_text_file(out_path, text);
}

std::vector<int> parse_moduli(const std::string& spec) {
    std::vector<int> moduli;
    std::string token;
    for (char c : spec + ",") {
        if (c == ',') {
            if (!token.empty()) moduli.push_back(std::stoi(token));
            token.clear();
        } else {
            token += c;
        }
    }
    if (moduli.empty()) throw ParseError("empty group spec");
    return moduli;
}

// "0,1|1,0|1,1" -> three group elements
std::vector<std::vector<int>> parse_generators(const std::string& spec) {
    std::vector<std::vector<int>> gens;
    std::string element;
    for (char c : spec + "|") {
        if (c == '|') {
            if (!element.empty()) {
                std::vector<int> coords;
                std::string token;
                for (char d : element + ",") {
                    if (d == ',') {
                        if (!token.empty()) coords.push_back(std::stoi(token));
                        token.clear();
                    } else {
                        token += d;
                    }
                }
                gens.push_back(std::move(coords));
            }
            element.clear();
        } else {
            element += c;
        }
    }
    return gens;
}

int run_generate(const std::string& family, int n, bool lazy, int d,
                 const std::string& group, int degree, const std::string& gens_spec,
                 const std::string& up_prob, int m, int arms, uint64_t seed,
                 const std::string& mode, const std::string& out_path) {
    Chain<Rat> chain = [&]() -> Chain<Rat> {
        if (family == "cycle") return cycle_walk(n, lazy);
        if (family == "hypercube-cycle") return hypercube_times_cycle(d, n, lazy);
        if (family == "abelian-cayley") {
            const std::vector<int> moduli = parse_moduli(group);
            if (!gens_spec.empty()) return abelian_cayley(moduli, parse_generators(gens_spec), lazy);
            Rng rng = Rng(seed).fork("cayley-cli");
            return abelian_cayley(moduli, random_generating_multiset(moduli, degree, rng), lazy);
        }
        if (family == "transposition") return transposition_walk(m, lazy);
        if (family == "biased-segment") return biased_segment(n, parse_ratio(up_prob));
        if (family == "directed-cycle") return directed_lazy_cycle(n);
        if (family == "double-star") return double_star(arms);
        throw ParseError("unknown family '" + family + "'");
    }();

    Json doc;
    if (mode == "float") {
        Mat<double> P(chain.size(), chain.size(), 0.0);
        for (int i = 0; i < chain.size(); ++i)
            for (int j = 0; j < chain.size(); ++j) P(i, j) = chain.at(i, j).get_d();
        doc = chain_json(Chain<double>::build(std::move(P), chain.labels()));
    } else {
        doc = chain_json(chain);
    }
    emit(doc.dump(2) + "\n", out_path);
    return kExitClean;
}

int run_analyze(const std::string& path, const std::string& mode,
                std::optional<long> horizon, int enum_limit, const std::string& out_path,
                const std::string& trace_path) {
    AnyChain chain = read_chain_file(path);
    if (mode == "float" && std::holds_alternative<Chain<Rat>>(chain)) {
        const Chain<Rat>& exact = std::get<Chain<Rat>>(chain);
        Mat<double> P(exact.size(), exact.size(), 0.0);
        for (int i = 0; i < exact.size(); ++i)
            for (int j = 0; j < exact.size(); ++j) P(i, j) = exact.at(i, j).get_d();
        chain = Chain<double>::build(std::move(P), exact.labels());
    } else if (mode == "exact" && std::holds_alternative<Chain<double>>(chain)) {
        throw ParseError("a float chain file cannot be reinterpreted as exact");
    }

    AnalyzeOptions options;
    options.horizon_override = horizon;
    options.enum_limit = enum_limit;
    options.with_trace = !trace_path.empty();
    ChainProfile profile = analyze_chain(chain, options);
    if (!trace_path.empty()) write_text_file(trace_path, trace_csv(profile));
    emit(profile_json(profile).dump(2) + "\n", out_path);
    return kExitClean;
}

int run_verify(const std::string& corpus, uint64_t seed, std::optional<long> horizon,
               int enum_limit, const std::string& out_path) {
    RunConfig config;
    config.corpus = corpus;
    config.seed = seed;
    config.horizon_override = horizon;
    config.enum_limit = enum_limit;
    SuiteResult result = run_suite(corpus_by_name(corpus, seed), config);
    std::cout << suite_table(result);
    if (!out_path.empty()) write_text_file(out_path, suite_json(result).dump(2) + "\n");
    return result.clean() ? kExitClean : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"curvature, conductance, mixing and displacement statistics of finite Markov chains"};
    app.require_subcommand(1);

    // generate
    auto* generate = app.add_subcommand("generate", "emit a chain JSON file");
    std::string family;
    generate->add_option("family", family,
                         "cycle | hypercube-cycle | abelian-cayley | transposition | "
                         "biased-segment | directed-cycle | double-star")
        ->required();
    int g_n = 4, g_d = 1, g_degree = 3, g_m = 3, g_arms = 2;
    bool g_lazy = false;
    std::string g_group = "8", g_gens, g_up = "3/4", g_mode = "exact", g_out;
    uint64_t g_seed = 0;
    generate->add_option("--n", g_n, "cycle / segment length");
    generate->add_flag("--lazy", g_lazy, "average with the identity");
    generate->add_option("--d", g_d, "hypercube dimension");
    generate->add_option("--group", g_group, "comma-separated cyclic moduli, e.g. 2,4");
    generate->add_option("--degree", g_degree, "number of random generators");
    generate->add_option("--gens", g_gens, "explicit generators, e.g. 0,1|1,0|1,1");
    generate->add_option("--up-prob", g_up, "segment up-move probability, e.g. 3/4");
    generate->add_option("--m", g_m, "symmetric group size (3 or 4)");
    generate->add_option("--arms", g_arms, "leaves per hub");
    generate->add_option("--seed", g_seed, "seed for random generator draws");
    generate->add_option("--mode", g_mode, "exact | float")
        ->check(CLI::IsMember({"exact", "float"}));
    generate->add_option("--out", g_out, "output path (stdout when omitted)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "profile a chain file");
    std::string a_path, a_mode = "auto", a_out, a_trace;
    long a_horizon = -1;
    int a_enum_limit = kConductanceEnumLimit;
    analyze->add_option("chain", a_path, "chain JSON file")->required();
    analyze->add_option("--mode", a_mode, "auto | exact | float")
        ->check(CLI::IsMember({"auto", "exact", "float"}));
    analyze->add_option("--horizon", a_horizon, "step cap override");
    analyze->add_option("--enum-limit", a_enum_limit, "conductance enumeration cap (<= 24)");
    analyze->add_option("--out", a_out, "profile JSON path (stdout when omitted)");
    analyze->add_option("--trace", a_trace, "per-step CSV trace path");

    // verify
    auto* verify = app.add_subcommand("verify", "run the inequality suite");
    std::string v_corpus = "default", v_out;
    uint64_t v_seed = 0;
    long v_horizon = -1;
    int v_enum_limit = kConductanceEnumLimit;
    verify->add_option("--corpus", v_corpus, "default | smoke | none");
    verify->add_option("--seed", v_seed, "suite seed");
    verify->add_option("--horizon", v_horizon, "step cap override");
    verify->add_option("--enum-limit", v_enum_limit, "conductance enumeration cap (<= 24)");
    verify->add_option("--out", v_out, "report JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*generate)
            return run_generate(family, g_n, g_lazy, g_d, g_group, g_degree, g_gens, g_up,
                                g_m, g_arms, g_seed, g_mode, g_out);
        if (*analyze)
            return run_analyze(a_path, a_mode,
                               a_horizon > 0 ? std::optional<long>(a_horizon) : std::nullopt,
                               a_enum_limit, a_out, a_trace);
        if (*verify)
            return run_verify(v_corpus, v_seed,
                              v_horizon > 0 ? std::optional<long>(v_horizon) : std::nullopt,
                              v_enum_limit, v_out);
    } catch (const ChainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
