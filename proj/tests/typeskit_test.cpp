#include "idbc/typeskit.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "idbc/channel.hpp"
#include "idbc/errors.hpp"
#include "idbc/pmf.hpp"
#include "idbc/rng.hpp"
#include "oracles.hpp"

namespace idbc {
namespace {

Dmc bsc(double p) { return Dmc(2, 2, {1.0 - p, p, p, 1.0 - p}); }

Sequence seq(std::vector<std::uint8_t> s) { return Sequence(std::move(s)); }

TEST(EmpiricalTypeTest, CountsSymbols) {
    const TypeVector t = empirical_type(seq({0, 2, 0, 1, 0}), 3);
    EXPECT_EQ(t.n, 5);
    EXPECT_EQ(t.counts, (std::vector<std::int64_t>{3, 1, 1}));
    EXPECT_THROW(empirical_type(seq({0, 3}), 3), std::invalid_argument);
}

TEST(TypicalityTest, WindowsAreMultiplicativeAndClosed) {
    const Pmf half({0.5, 0.5});
    EXPECT_TRUE(is_typical(seq({0, 0, 1, 1}), half, 0.0));
    // Frequency 1/4 vs mass 1/2: the deviation equals eps * p exactly at 0.5.
    EXPECT_TRUE(is_typical(seq({0, 1, 1, 1}), half, 0.5));
    EXPECT_FALSE(is_typical(seq({0, 1, 1, 1}), half, 0.49));
}

TEST(TypicalityTest, ZeroMassSymbolsDisqualify) {
    const Pmf point({1.0, 0.0});
    EXPECT_TRUE(is_typical(seq({0, 0, 0}), point, 0.1));
    EXPECT_FALSE(is_typical(seq({0, 1, 0}), point, 100.0));
}

TEST(TypicalityTest, JointWindowsUseTheJointCells) {
    const Pmf half({0.5, 0.5});
    const Dmc w = bsc(0.25);
    // x = all zeros leaves the x=1 cells empty; their mass is 1/2 each of
    // (1/4, 3/8), so the relative deviation is exactly 1.
    const Sequence x = seq({0, 0, 0, 0});
    const Sequence y = seq({0, 0, 0, 1});
    EXPECT_TRUE(is_jointly_typical(x, y, half, w, 1.0));
    EXPECT_FALSE(is_jointly_typical(x, y, half, w, 0.99));
}

TEST(TypicalityTest, ZeroProbabilityTransitionsDisqualify) {
    const Dmc id(2, 2, {1.0, 0.0, 0.0, 1.0});
    const Pmf half({0.5, 0.5});
    EXPECT_TRUE(is_jointly_typical(seq({0, 1}), seq({0, 1}), half, id, 0.0));
    EXPECT_FALSE(is_jointly_typical(seq({0, 1}), seq({1, 0}), half, id, 100.0));
}

TEST(TypeClassTest, SizesMatchTheMultinomials) {
    EXPECT_EQ(type_class_size({6, {3, 3}}), 20);
    EXPECT_EQ(type_class_size({6, {2, 2, 2}}), 90);
    EXPECT_EQ(type_class_size({20, {5, 7, 8}}), 99768240);
    EXPECT_EQ(type_class_size({6, {6, 0}}), 1);
}

TEST(TypeClassTest, SizesPartitionTheSequenceSpace) {
    big_int total = 0;
    for (std::int64_t k = 0; k <= 10; ++k)
        total += type_class_size({10, {k, 10 - k}});
    EXPECT_EQ(total, 1024);
}

TEST(TypeClassTest, LogSizeMatchesTheExactCount) {
    EXPECT_NEAR(log_type_class_size({20, {5, 7, 8}}), std::log(99768240.0), 1e-9);
    EXPECT_EQ(log_type_class_size({6, {6, 0}}), 0.0);
}

TEST(TypeClassTest, EnumerationIsLexicographicAndBudgeted) {
    const TypeVector t{3, {2, 1}};
    const auto members = enumerate_type_class(t);
    ASSERT_EQ(members.size(), 3u);
    EXPECT_EQ(members[0].sym, (std::vector<std::uint8_t>{0, 0, 1}));
    EXPECT_EQ(members[1].sym, (std::vector<std::uint8_t>{0, 1, 0}));
    EXPECT_EQ(members[2].sym, (std::vector<std::uint8_t>{1, 0, 0}));
    EXPECT_THROW(enumerate_type_class(t, 2), BudgetError);
}

TEST(EquitypeTest, NoiselessChannelHasASingleUnitTerm) {
    const Dmc id(2, 2, {1.0, 0.0, 0.0, 1.0});
    const auto terms = equitype_decompose(id, {3, {2, 1}});
    ASSERT_EQ(terms.size(), 1u);
    EXPECT_EQ(terms[0].c, 1.0);
    EXPECT_EQ(terms[0].l, 1);
    EXPECT_EQ(terms[0].counts, (std::vector<std::int64_t>{2, 0, 0, 1}));
}

TEST(EquitypeTest, CoefficientsSumToOne) {
    const auto terms = equitype_decompose(bsc(0.25), {6, {3, 3}});
    double total = 0.0;
    for (const EquitypeTerm& t : terms) total += t.c;
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(EquitypeTest, ReconstructsDyadicChannelProbabilitiesExactly) {
    // All entries are dyadic rationals with tiny numerators, so every c, l
    // and n-fold product is an exact double and the comparison is bitwise.
    const Dmc w(2, 2, {0.5, 0.5, 0.75, 0.25});
    const Sequence x = seq({0, 0, 0, 1, 1, 1});
    const auto terms = equitype_decompose(w, empirical_type(x, 2));

    big_int covered = 0;
    for (const EquitypeTerm& t : terms) covered += t.l;
    EXPECT_EQ(covered, 64);

    for (int mask = 0; mask < 64; ++mask) {
        std::vector<std::uint8_t> y(6);
        for (int i = 0; i < 6; ++i) y[i] = static_cast<std::uint8_t>((mask >> i) & 1);
        std::vector<std::int64_t> k(4, 0);
        for (int i = 0; i < 6; ++i) ++k[static_cast<std::size_t>(x.sym[i] * 2 + y[i])];
        bool found = false;
        for (const EquitypeTerm& t : terms) {
            if (t.counts != k) continue;
            found = true;
            EXPECT_EQ(t.c / t.l.convert_to<double>(), nfold_prob(w, x, Sequence(y)));
        }
        EXPECT_TRUE(found) << "output mask " << mask;
    }
}

TEST(EquitypeTest, RespectsTheTermBudget) {
    EXPECT_THROW(equitype_decompose(bsc(0.25), {6, {3, 3}}, 2), BudgetError);
}

TEST(LTypeTest, PointMassAndLawConvergence) {
    Crng g = make_stream(41, StreamTag::misc, {0});
    const LType point = l_type_approximate(Pmf({1.0}), 1000, g);
    EXPECT_EQ(point.counts, (std::vector<std::int64_t>{1000}));
    EXPECT_EQ(point.weights(), (std::vector<double>{1.0}));

    const Pmf q({0.3, 0.7});
    const LType big = l_type_approximate(q, 1000000, g);
    EXPECT_EQ(big.counts[0] + big.counts[1], 1000000);
    EXPECT_LE(oracle::total_variation(big.weights(), q.probs()), 0.01);
}

TEST(TypicalSetTest, MassObeysTheConcentrationBound) {
    // P(typical) >= 1 - 2 |X| exp(-n eps^2 p_min / 3); skip blocklengths
    // where the right side is vacuous.
    const Pmf p({0.5, 0.5});
    const double eps = 0.25;
    const int trials = 2000;
    for (const int n : {50, 100, 200, 400}) {
        const double bound = 1.0 - 4.0 * std::exp(-n * eps * eps * 0.5 / 3.0);
        if (bound <= 0.0) continue;
        Crng g = make_stream(43, StreamTag::misc, {static_cast<std::uint64_t>(n)});
        int hits = 0;
        for (int t = 0; t < trials; ++t)
            if (is_typical(sample_iid(p, n, g), p, eps)) ++hits;
        const double freq = static_cast<double>(hits) / trials;
        EXPECT_GE(freq, bound - 3.0 * std::sqrt(0.25 / trials)) << "n = " << n;
    }
}

TEST(SlackBudgetTest, DeltaAndTheEpsCheck) {
    const Pmf u = Pmf::uniform(2);
    const Dmc w = bsc(0.05);
    EXPECT_NEAR(typicality_delta(0.25, u, w), 0.25 * 0.891662423905818, 1e-12);
    // Threshold (I - rate) / (2 H(P x W)) sits near 0.109 for rate 0.3.
    EXPECT_TRUE(check_eps(u, w, 0.3, 0.1));
    EXPECT_FALSE(check_eps(u, w, 0.3, 0.12));
    EXPECT_THROW(check_eps(u, w, 0.3, 0.0), std::invalid_argument);
}

}  // namespace
}  // namespace idbc
