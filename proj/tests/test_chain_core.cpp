#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "curvmix/chain.hpp"
#include "curvmix/generators.hpp"

using namespace curvmix;

namespace {

Mat<Rat> lazy_four_cycle() {
    Mat<Rat> P(4, 4, Rat(0));
    for (int x = 0; x < 4; ++x) {
        P(x, x) = rat_of(1, 2);
        P(x, (x + 1) % 4) = rat_of(1, 4);
        P(x, (x + 3) % 4) = rat_of(1, 4);
    }
    return P;
}

Mat<Rat> biased_segment_3() {
    // stay 1/2, up 3/8, down 1/8, reflected into the endpoint self-loops
    Mat<Rat> P(3, 3, Rat(0));
    P(0, 0) = rat_of(5, 8);
    P(0, 1) = rat_of(3, 8);
    P(1, 0) = rat_of(1, 8);
    P(1, 1) = rat_of(1, 2);
    P(1, 2) = rat_of(3, 8);
    P(2, 1) = rat_of(1, 8);
    P(2, 2) = rat_of(7, 8);
    return P;
}

}  // namespace

// =============================================================================
// build_chain
// =============================================================================

TEST_CASE("single state chain is valid with trivial stationary law") {
    Mat<Rat> P(1, 1, Rat(1));
    auto chain = Chain<Rat>::build(std::move(P));
    CHECK(chain.size() == 1);
    auto pi = stationary(chain);
    CHECK(pi[0] == Rat(1));
    CHECK(chain.p_min() == Rat(1));
}

TEST_CASE("lazy four-cycle validates") {
    auto chain = Chain<Rat>::build(lazy_four_cycle());
    CHECK(chain.size() == 4);
    CHECK(chain.is_lazy());
}

TEST_CASE("disconnected two-state identity is rejected as reducible") {
    Mat<Rat> P(2, 2, Rat(0));
    P(0, 0) = Rat(1);
    P(1, 1) = Rat(1);
    CHECK_THROWS_AS(Chain<Rat>::build(std::move(P)), ReducibleError);
}

TEST_CASE("bad row sums and negative entries are rejected") {
    Mat<Rat> P(2, 2, Rat(0));
    P(0, 0) = rat_of(1, 2);
    P(0, 1) = rat_of(1, 4);
    P(1, 0) = rat_of(1, 2);
    P(1, 1) = rat_of(1, 2);
    CHECK_THROWS_AS(Chain<Rat>::build(P), RowSumError);

    Mat<Rat> Q(2, 2, Rat(0));
    Q(0, 0) = rat_of(3, 2);
    Q(0, 1) = rat_of(-1, 2);
    Q(1, 0) = rat_of(1, 2);
    Q(1, 1) = rat_of(1, 2);
    CHECK_THROWS_AS(Chain<Rat>::build(Q), NegativeEntryError);
}

TEST_CASE("float mode accepts 1e-12 row-sum slack and rejects worse") {
    Mat<double> P(2, 2, 0.0);
    P(0, 0) = 0.5 + 5e-13;
    P(0, 1) = 0.5;
    P(1, 0) = 0.5;
    P(1, 1) = 0.5;
    CHECK_NOTHROW(Chain<double>::build(P));
    P(0, 0) = 0.5 + 1e-10;
    CHECK_THROWS_AS(Chain<double>::build(P), RowSumError);
}

// =============================================================================
// directed_metric
// =============================================================================

TEST_CASE("lazy four-cycle metric: d(0,2)=2 and diam=2") {
    auto chain = Chain<Rat>::build(lazy_four_cycle());
    auto metric = directed_metric(chain);
    CHECK(metric(0, 2) == 2);
    CHECK(metric.diam() == 2);
    for (int x = 0; x < 4; ++x) CHECK(metric(x, x) == 0);
}

TEST_CASE("directed lazy 3-cycle has an asymmetric metric") {
    auto chain = directed_lazy_cycle(3);
    auto metric = directed_metric(chain);
    CHECK(metric(0, 2) == 2);
    CHECK(metric(2, 0) == 1);
}

TEST_CASE("metric edge characterization and triangle inequality on the corpus") {
    for (const auto& tagged : default_corpus(0)) {
        auto metric = directed_metric(tagged.chain);
        const int n = tagged.chain.size();
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                if (x == y) {
                    CHECK(metric(x, y) == 0);
                    continue;
                }
                CHECK(metric(x, y) >= 1);
                CHECK((metric(x, y) == 1) == (tagged.chain.at(x, y) > Rat(0)));
            }
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y)
                for (int z = 0; z < n; ++z)
                    CHECK(metric(x, z) <= metric(x, y) + metric(y, z));
    }
}

// =============================================================================
// stationary
// =============================================================================

TEST_CASE("lazy four-cycle is uniform") {
    auto chain = Chain<Rat>::build(lazy_four_cycle());
    auto pi = stationary(chain);
    for (int i = 0; i < 4; ++i) CHECK(pi[i] == rat_of(1, 4));
}

TEST_CASE("biased segment stationary law solved exactly") {
    // birth-death detailed balance: pi(x+1)/pi(x) = (3/8)/(1/8) = 3,
    // so pi = (1, 3, 9)/13
    auto chain = Chain<Rat>::build(biased_segment_3());
    auto pi = stationary(chain);
    CHECK(pi[0] == rat_of(1, 13));
    CHECK(pi[1] == rat_of(3, 13));
    CHECK(pi[2] == rat_of(9, 13));
    // pi P = pi exactly
    auto piP = vec_mat(pi, chain.matrix());
    for (int i = 0; i < 3; ++i) CHECK(piP[i] == pi[i]);
}

TEST_CASE("float stationary solve meets the residual gate") {
    Mat<double> P(3, 3, 0.0);
    P(0, 0) = 0.625;
    P(0, 1) = 0.375;
    P(1, 0) = 0.125;
    P(1, 1) = 0.5;
    P(1, 2) = 0.375;
    P(2, 1) = 0.125;
    P(2, 2) = 0.875;
    auto chain = Chain<double>::build(std::move(P));
    auto pi = stationary(chain);
    CHECK(pi[0] == doctest::Approx(1.0 / 13).epsilon(1e-12));
    CHECK(pi[2] == doctest::Approx(9.0 / 13).epsilon(1e-12));
}

// =============================================================================
// p_min
// =============================================================================

TEST_CASE("smallest positive entries") {
    CHECK(Chain<Rat>::build(lazy_four_cycle()).p_min() == rat_of(1, 4));
    CHECK(Chain<Rat>::build(biased_segment_3()).p_min() == rat_of(1, 8));
}

// =============================================================================
// matrix_power_row
// =============================================================================

TEST_CASE("powers of the lazy four-cycle") {
    auto chain = Chain<Rat>::build(lazy_four_cycle());
    auto row0 = matrix_power_row(chain, 0, 0);
    CHECK(row0 == std::vector<Rat>{Rat(1), Rat(0), Rat(0), Rat(0)});
    auto row1 = matrix_power_row(chain, 0, 1);
    CHECK(row1 == std::vector<Rat>{rat_of(1, 2), rat_of(1, 4), Rat(0), rat_of(1, 4)});
    auto row2 = matrix_power_row(chain, 0, 2);
    CHECK(row2 ==
          std::vector<Rat>{rat_of(3, 8), rat_of(1, 4), rat_of(1, 8), rat_of(1, 4)});
}

TEST_CASE("semigroup property holds exactly") {
    auto chain = biased_segment(5, rat_of(2, 3));
    for (long s : {1L, 3L})
        for (long t : {2L, 5L}) {
            auto direct = matrix_power_row(chain, 1, s + t);
            // row of P^s, then t more steps
            auto row = matrix_power_row(chain, 1, s);
            for (long k = 0; k < t; ++k) row = vec_mat(row, chain.matrix());
            CHECK(direct == row);
        }
}

TEST_CASE("denominator bit budget triggers OverflowError") {
    auto chain = Chain<Rat>::build(lazy_four_cycle());
    CHECK_THROWS_AS(matrix_power_row(chain, 0, 64, 16), OverflowError);
}

TEST_CASE("PowerSweep degrades to float past the budget and records the step") {
    auto chain = Chain<Rat>::build(lazy_four_cycle());
    PowerSweep sweep(chain, 16);
    for (int t = 0; t < 32; ++t) sweep.step();
    CHECK(!sweep.exact());
    REQUIRE(sweep.switch_t().has_value());
    CHECK(*sweep.switch_t() > 1);
    CHECK(*sweep.switch_t() <= 16);
    // rows remain near-stochastic after the switch
    double sum = 0;
    for (int j = 0; j < 4; ++j) sum += sweep.float_rows()(0, j);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

// =============================================================================
// lazify
// =============================================================================

TEST_CASE("lazify halves off-diagonal mass and conductance-relevant entries") {
    auto plain = cycle_walk(4, false);
    auto lazy = lazify(plain);
    auto expected = Chain<Rat>::build(lazy_four_cycle());
    CHECK(lazy.matrix() == expected.matrix());
    CHECK(lazy.p_min() == plain.p_min() / 2);
}

TEST_CASE("lazify on an already lazy chain pushes the diagonal to 3/4") {
    auto lazy = Chain<Rat>::build(lazy_four_cycle());
    auto lazier = lazify(lazy);
    for (int x = 0; x < 4; ++x) CHECK(lazier.at(x, x) >= rat_of(3, 4));
}

TEST_CASE("lazify keeps a one-state chain unchanged") {
    Mat<Rat> P(1, 1, Rat(1));
    auto chain = Chain<Rat>::build(std::move(P));
    CHECK(lazify(chain).at(0, 0) == Rat(1));
}

TEST_CASE("lazify output is lazy on every corpus chain") {
    for (const auto& tagged : default_corpus(0)) {
        auto lazy = lazify(tagged.chain);
        CHECK(lazy.is_lazy());
    }
}
