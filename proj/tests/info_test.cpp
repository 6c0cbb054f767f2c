#include "idbc/info.hpp"

#include <cmath>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <gtest/gtest.h>

#include "idbc/channel.hpp"
#include "idbc/pmf.hpp"
#include "idbc/rng.hpp"
#include "oracles.hpp"

namespace idbc {
namespace {

constexpr double k_ln2 = 0.6931471805599453;

Dmc bsc(double p) { return Dmc(2, 2, {1.0 - p, p, p, 1.0 - p}); }

// Binary erasure channel with outputs (0, erasure, 1).
Dmc bec(double e) { return Dmc(2, 3, {1.0 - e, e, 0.0, 0.0, e, 1.0 - e}); }

// Crossover only from input 1.
Dmc zch(double p) { return Dmc(2, 2, {1.0, 0.0, p, 1.0 - p}); }

Dmc noiseless(int k) {
    std::vector<double> rows(static_cast<std::size_t>(k) * static_cast<std::size_t>(k),
                             0.0);
    for (int i = 0; i < k; ++i)
        rows[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) +
             static_cast<std::size_t>(i)] = 1.0;
    return Dmc(k, k, std::move(rows));
}

Pmf random_pmf(int k, std::uint64_t salt) {
    Crng g = make_stream(salt, StreamTag::misc, {99});
    std::vector<double> v(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (double& x : v) {
        x = 1e-3 + g.next_double();
        sum += x;
    }
    for (double& x : v) x /= sum;
    return Pmf(v);
}

TEST(EntropyTest, MatchesClosedForms) {
    EXPECT_NEAR(entropy(Pmf({0.25, 0.75})), 0.562335144618808, 1e-12);
    EXPECT_NEAR(entropy(Pmf::uniform(4)), std::log(4.0), 1e-12);
    EXPECT_EQ(entropy(Pmf({0.0, 1.0})), 0.0);
}

TEST(EntropyTest, OutputAndJointLawsSplitTheInformation) {
    const Pmf u = Pmf::uniform(2);
    EXPECT_NEAR(output_entropy(u, bsc(0.05)), k_ln2, 1e-12);
    EXPECT_NEAR(joint_input_output_entropy(u, bsc(0.05)), 0.891662423905818, 1e-12);
    EXPECT_NEAR(joint_input_output_entropy(u, bsc(0.2)), 1.193549604098133, 1e-12);
    EXPECT_NEAR(entropy(u) + output_entropy(u, bsc(0.2)) -
                    joint_input_output_entropy(u, bsc(0.2)),
                mutual_information(u, bsc(0.2)), 1e-12);
}

TEST(MutualInformationTest, MatchesClosedForms) {
    const Pmf u = Pmf::uniform(2);
    EXPECT_NEAR(mutual_information(u, noiseless(2)), k_ln2, 1e-12);
    EXPECT_NEAR(mutual_information(u, bsc(0.5)), 0.0, 1e-12);
    EXPECT_NEAR(mutual_information(u, bsc(0.11)), 0.346631843641279, 1e-12);
    EXPECT_NEAR(mutual_information(u, bec(0.3)), 0.485203026391962, 1e-12);
}

TEST(MutualInformationTest, ConcaveInTheInputLaw) {
    const Dmc w = zch(0.3);
    for (std::uint64_t s = 1; s <= 6; ++s) {
        const Pmf a = random_pmf(2, s);
        const Pmf b = random_pmf(2, s + 100);
        const Pmf mid({0.5 * (a.at(0) + b.at(0)), 0.5 * (a.at(1) + b.at(1))});
        EXPECT_GE(mutual_information(mid, w) + 1e-12,
                  0.5 * (mutual_information(a, w) + mutual_information(b, w)));
    }
}

TEST(PairInputInformationTest, ReducesToTheSecondMarginalWhenOutputsAreIndependent) {
    const Dmc wy = bsc(0.05);
    const Dmc wz = bsc(0.2);
    const Bc2 bc = make_product_bc(wy, wz);
    const ConditionalZ cz = conditional_z_given_xy(bc);
    const Pmf p({0.35, 0.65});
    EXPECT_NEAR(pair_input_mutual_information(p, wy, cz),
                mutual_information(p, wz), 1e-12);
}

TEST(PairInputInformationTest, CopyChannelGivesTheOutputEntropy) {
    const Dmc wy = bsc(0.1);
    const int ny = wy.output_size();
    std::vector<double> rows(static_cast<std::size_t>(2 * ny * ny), 0.0);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < ny; ++y)
            rows[(static_cast<std::size_t>(x) * ny + y) * ny + y] = wy.at(x, y);
    const Bc2 bc(2, ny, ny, std::move(rows));
    const ConditionalZ cz = conditional_z_given_xy(bc);
    const Pmf p({0.35, 0.65});
    EXPECT_NEAR(pair_input_mutual_information(p, wy, cz), output_entropy(p, wy),
                1e-12);
}

TEST(CapacityTest, BinarySymmetricClosedForms) {
    const double expected[][2] = {{0.05, 0.494631937214073},
                                  {0.1, 0.368064207168497},
                                  {0.2, 0.192744757021757}};
    for (const auto& [p, cap] : expected) {
        const CapacityResult res = capacity(bsc(p));
        EXPECT_NEAR(res.value, cap, 1e-8) << "crossover " << p;
        EXPECT_TRUE(res.converged);
        EXPECT_LE(res.gap, 1e-9);
        EXPECT_LE(res.lower, res.value);
        EXPECT_LE(res.value, res.upper);
        EXPECT_NEAR(res.maximizer.at(0), 0.5, 1e-3);
    }
}

TEST(CapacityTest, NoiselessTernaryChannel) {
    EXPECT_NEAR(capacity(noiseless(3)).value, std::log(3.0), 1e-9);
}

TEST(CapacityTest, AsymmetricChannelShiftsTheMaximizer) {
    const CapacityResult res = capacity(zch(0.3));
    EXPECT_NEAR(res.value, 0.349132643565789, 1e-8);
    EXPECT_TRUE(res.converged);
    EXPECT_NEAR(res.maximizer.at(1), 0.421, 0.01);
}

TEST(CapacityTest, DominatesEveryInputLaw) {
    const Dmc w = bec(0.3);
    const double cap = capacity(w).value;
    EXPECT_NEAR(cap, 0.485203026391962, 1e-8);
    for (std::uint64_t s = 1; s <= 8; ++s)
        EXPECT_LE(mutual_information(random_pmf(2, s), w), cap + 1e-9);
}

TEST(RegionKindTest, NamesRoundTripAndFixTheArity) {
    const struct {
        std::string_view name;
        int rates;
    } kinds[] = {{"dmc-capacity", 1},   {"bc-avg", 2},
                 {"bc3-inner", 3},      {"bc3-outer", 3},
                 {"bc-common", 3},      {"fb-two-sided", 2},
                 {"fb-one-sided-inner", 2}, {"fb-one-sided-outer", 2},
                 {"common-randomness", 2}};
    for (const auto& k : kinds) {
        const RegionKind kind = parse_region_kind(k.name);
        EXPECT_EQ(region_kind_name(kind), k.name);
        EXPECT_EQ(region_rate_count(kind), k.rates);
    }
    EXPECT_THROW(parse_region_kind("no-such-region"), std::invalid_argument);
}

TEST(RegionTest, SingleReceiverVerdictsTrackTheInformationMaximum) {
    const Channel ch{bsc(0.1)};
    const double cap = 0.368064207168497;
    RegionQuery q;
    q.kind = RegionKind::dmc_capacity;

    q.rates = {0.9 * cap};
    const RegionAnswer in = region_membership(ch, q);
    EXPECT_TRUE(in.inside);
    EXPECT_EQ(in.verdict, Verdict::inside);
    EXPECT_NEAR(in.slack, 0.1 * cap, 2e-6);
    ASSERT_EQ(in.constraint_values.size(), 1u);
    EXPECT_NEAR(in.constraint_values[0], cap, 2e-6);

    q.rates = {1.1 * cap};
    const RegionAnswer out = region_membership(ch, q);
    EXPECT_FALSE(out.inside);
    EXPECT_EQ(out.verdict, Verdict::outside);
    EXPECT_NEAR(out.slack, -0.1 * cap, 2e-6);

    q.rates = {cap};
    EXPECT_EQ(region_membership(ch, q).verdict, Verdict::boundary);

    q.rates = {0.1, 0.1};
    EXPECT_THROW(region_membership(ch, q), std::invalid_argument);
}

TEST(RegionTest, TwoReceiverAverageRegion) {
    const Channel ch{make_product_bc(bsc(0.05), bsc(0.2))};
    RegionQuery q;
    q.kind = RegionKind::bc_avg;

    q.rates = {0.45, 0.15};
    const RegionAnswer in = region_membership(ch, q);
    EXPECT_TRUE(in.inside);
    EXPECT_GT(in.slack, 0.03);
    ASSERT_EQ(in.witness.size(), 2u);
    EXPECT_NEAR(in.witness[0] + in.witness[1], 1.0, 1e-9);

    q.rates = {0.55, 0.25};
    const RegionAnswer out = region_membership(ch, q);
    EXPECT_FALSE(out.inside);
    EXPECT_LT(out.slack, -0.05);

    // Shrinking both rates preserves membership.
    q.rates = {0.30, 0.10};
    EXPECT_TRUE(region_membership(ch, q).inside);
}

TEST(RegionTest, ZeroRatesSitInsideEveryKind) {
    const Channel dmc{bsc(0.1)};
    const Channel bc{make_product_bc(bsc(0.05), bsc(0.2))};
    const Channel bc3{make_product_bc3(bsc(0.05), bsc(0.1), bsc(0.2))};
    const struct {
        const Channel* ch;
        RegionKind kind;
    } cases[] = {{&dmc, RegionKind::dmc_capacity},
                 {&bc, RegionKind::bc_avg},
                 {&bc, RegionKind::bc_common},
                 {&bc, RegionKind::fb_two_sided},
                 {&bc, RegionKind::fb_one_sided_inner},
                 {&bc, RegionKind::fb_one_sided_outer},
                 {&bc, RegionKind::common_randomness},
                 {&bc3, RegionKind::bc3_inner},
                 {&bc3, RegionKind::bc3_outer}};
    for (const auto& c : cases) {
        RegionQuery q;
        q.kind = c.kind;
        q.rates.assign(static_cast<std::size_t>(region_rate_count(c.kind)), 0.0);
        RegionOptions opt;
        if (c.kind == RegionKind::common_randomness) opt.u_size = 2;
        EXPECT_TRUE(region_membership(*c.ch, q, opt).inside)
            << region_kind_name(c.kind);
    }
}

TEST(RegionTest, ThreeReceiverInnerRegionSitsWithinTheOuter) {
    const Channel ch{make_product_bc3(bsc(0.05), bsc(0.1), bsc(0.2))};
    const double probe[] = {0.05, 0.15, 0.3};
    for (const double r1 : probe)
        for (const double r2 : probe)
            for (const double r3 : probe) {
                RegionQuery q;
                q.rates = {r1, r2, r3};
                q.kind = RegionKind::bc3_inner;
                const RegionAnswer inner = region_membership(ch, q);
                q.kind = RegionKind::bc3_outer;
                const RegionAnswer outer = region_membership(ch, q);
                if (inner.inside) {
                    EXPECT_TRUE(outer.inside) << r1 << "," << r2 << "," << r3;
                }
                EXPECT_LE(inner.slack, outer.slack + 1e-6);
            }
}

TEST(RegionTest, OneSidedVariantsCoincideWhenOutputsAreIndependent) {
    const Channel ch{make_product_bc(bsc(0.05), bsc(0.2))};
    const double queries[][2] = {{0.5, 0.1}, {0.8, 0.15}, {0.3, 0.19}, {1.0, 0.3}};
    for (const auto& r : queries) {
        RegionQuery q;
        q.rates = {r[0], r[1]};
        q.kind = RegionKind::fb_one_sided_inner;
        const RegionAnswer inner = region_membership(ch, q);
        q.kind = RegionKind::fb_one_sided_outer;
        const RegionAnswer outer = region_membership(ch, q);
        EXPECT_NEAR(inner.slack, outer.slack, 1e-7) << r[0] << "," << r[1];
        if (std::fabs(inner.slack) > 1e-4) {
            EXPECT_EQ(inner.inside, outer.inside);
        }
    }
}

TEST(RegionTest, TwoSidedFeedbackIsCeiledByOutputEntropies) {
    const Channel ch{make_product_bc(bsc(0.05), bsc(0.2))};
    RegionQuery q;
    q.kind = RegionKind::fb_two_sided;
    q.rates = {0.69, 0.69};
    EXPECT_TRUE(region_membership(ch, q).inside);
    q.rates = {0.70, 0.10};
    EXPECT_FALSE(region_membership(ch, q).inside);

    // A useless y marginal zeroes that coordinate entirely.
    const Channel flat{make_product_bc(bsc(0.5), bsc(0.2))};
    q.rates = {0.01, 0.10};
    EXPECT_FALSE(region_membership(flat, q).inside);
    q.rates = {0.0, 0.10};
    const RegionAnswer edge = region_membership(flat, q);
    EXPECT_TRUE(edge.inside);
    EXPECT_EQ(edge.verdict, Verdict::boundary);
}

TEST(RegionTest, BoundaryPointsAreMembers) {
    const Channel ch{make_product_bc(bsc(0.1), bsc(0.1))};
    const auto points = region_boundary(ch, RegionKind::bc_avg, 5);
    ASSERT_FALSE(points.empty());
    const double cap = 0.368064207168497;
    for (const BoundaryPoint& pt : points) {
        ASSERT_EQ(pt.rates.size(), 2u);
        // Identical marginals square off the region at the shared maximum.
        EXPECT_NEAR(pt.rates[0], cap, 1e-6);
        EXPECT_NEAR(pt.rates[1], cap, 1e-6);
        RegionQuery q;
        q.kind = RegionKind::bc_avg;
        q.rates = pt.rates;
        EXPECT_GE(region_membership(ch, q).slack, -1e-6);
    }
}

TEST(RegionTest, BoundaryOrdersDegradedReceivers) {
    const Channel ch{make_product_bc(bsc(0.05), bsc(0.2))};
    const auto points = region_boundary(ch, RegionKind::bc_avg, 7);
    ASSERT_FALSE(points.empty());
    for (const BoundaryPoint& pt : points) {
        EXPECT_GE(pt.rates[0], pt.rates[1] - 1e-9);
        RegionQuery q;
        q.kind = RegionKind::bc_avg;
        q.rates = pt.rates;
        EXPECT_GE(region_membership(ch, q).slack, -1e-6);
    }
}

TEST(CommonRandomnessTest, RequiresAnAuxiliaryAlphabet) {
    const Channel ch{make_product_bc(bsc(0.05), bsc(0.2))};
    RegionQuery q;
    q.kind = RegionKind::common_randomness;
    q.rates = {0.1, 0.1};
    EXPECT_THROW(region_membership(ch, q, RegionOptions{}), std::invalid_argument);
    const Bc2& bc = std::get<Bc2>(ch);
    EXPECT_THROW(cr_region_membership(bc, {0.1}, 2), std::invalid_argument);
    EXPECT_THROW(cr_region_membership(bc, {0.1, 0.1}, 0), std::invalid_argument);
}

TEST(CommonRandomnessTest, SingletonAuxiliaryCollapsesToTheAxes) {
    const Bc2 bc = make_product_bc(bsc(0.05), bsc(0.2));
    const double cy = 0.494631937214073;
    const double cz = 0.192744757021757;
    EXPECT_TRUE(cr_region_membership(bc, {0.0, 0.9 * cz}, 1).inside);
    EXPECT_TRUE(cr_region_membership(bc, {0.9 * cy, 0.0}, 1).inside);
    EXPECT_FALSE(cr_region_membership(bc, {0.05, 0.05}, 1).inside);
}

TEST(CommonRandomnessTest, GrowsWithTheAuxiliaryAlphabet) {
    const Bc2 bc = make_product_bc(bsc(0.05), bsc(0.2));
    const std::vector<double> rates{0.3, 0.15};
    const RegionAnswer two = cr_region_membership(bc, rates, 2);
    const RegionAnswer four = cr_region_membership(bc, rates, 4);
    EXPECT_TRUE(two.inside);
    EXPECT_TRUE(four.inside);
    EXPECT_GE(four.slack, two.slack - 1e-6);
}

TEST(CommonRandomnessTest, MatchesTheAverageRegionForIdenticalMarginals) {
    const Bc2 bc = make_product_bc(bsc(0.1), bsc(0.1));
    const Channel ch{bc};
    const double queries[][2] = {{0.3, 0.3}, {0.40, 0.10}, {0.1, 0.35}};
    for (const auto& r : queries) {
        RegionQuery q;
        q.kind = RegionKind::bc_avg;
        q.rates = {r[0], r[1]};
        const RegionAnswer avg = region_membership(ch, q);
        const RegionAnswer cr = cr_region_membership(bc, q.rates, 2);
        EXPECT_EQ(cr.inside, avg.inside) << r[0] << "," << r[1];
    }
}

}  // namespace
}  // namespace idbc
