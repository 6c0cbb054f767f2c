#include "idbc/id_ext.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "idbc/channel.hpp"
#include "idbc/errors.hpp"
#include "idbc/id_bc.hpp"
#include "idbc/id_dmc.hpp"
#include "idbc/pmf.hpp"
#include "idbc/rng.hpp"
#include "oracles.hpp"

namespace idbc {
namespace {

Dmc bsc(double p) { return Dmc(2, 2, {1.0 - p, p, p, 1.0 - p}); }

Dmc noiseless() { return Dmc(2, 2, {1.0, 0.0, 0.0, 1.0}); }

std::vector<int> to_ints(const Sequence& s) {
    return std::vector<int>(s.sym.begin(), s.sym.end());
}

std::vector<std::vector<double>> rows_of(const Dmc& w) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(w.input_size()));
    for (int x = 0; x < w.input_size(); ++x)
        for (int y = 0; y < w.output_size(); ++y) rows[x].push_back(w.at(x, y));
    return rows;
}

const PairEntry& find_pair(const ErrorReport& rep, std::int64_t m, std::int64_t mp) {
    for (const PairEntry& e : rep.wrong)
        if (e.m == m && e.m_prime == mp) return e;
    throw std::runtime_error("pair entry missing");
}

void expect_reports_identical(const ErrorReport& a, const ErrorReport& b) {
    EXPECT_EQ(a.missed, b.missed);
    ASSERT_EQ(a.wrong.size(), b.wrong.size());
    for (std::size_t i = 0; i < a.wrong.size(); ++i) {
        EXPECT_EQ(a.wrong[i].m, b.wrong[i].m);
        EXPECT_EQ(a.wrong[i].m_prime, b.wrong[i].m_prime);
        EXPECT_EQ(a.wrong[i].value, b.wrong[i].value);
    }
    EXPECT_EQ(a.max_missed, b.max_missed);
    EXPECT_EQ(a.max_wrong, b.max_wrong);
    EXPECT_EQ(a.method, b.method);
}

// The three-receiver channel assembles its marginals from the triple joint,
// so report weights can differ from the two-receiver path in the last bits.
void expect_reports_close(const ErrorReport& a, const ErrorReport& b) {
    ASSERT_EQ(a.missed.size(), b.missed.size());
    for (std::size_t m = 0; m < a.missed.size(); ++m)
        EXPECT_NEAR(a.missed[m], b.missed[m], 1e-12);
    ASSERT_EQ(a.wrong.size(), b.wrong.size());
    for (std::size_t i = 0; i < a.wrong.size(); ++i) {
        EXPECT_EQ(a.wrong[i].m, b.wrong[i].m);
        EXPECT_EQ(a.wrong[i].m_prime, b.wrong[i].m_prime);
        EXPECT_NEAR(a.wrong[i].value, b.wrong[i].value, 1e-12);
    }
    EXPECT_NEAR(a.max_missed, b.max_missed, 1e-12);
    EXPECT_NEAR(a.max_wrong, b.max_wrong, 1e-12);
    EXPECT_EQ(a.method, b.method);
}

BcIdParams bc_base_params() {
    BcIdParams p;
    p.n = 6;
    p.m_y_count = 3;
    p.m_z_count = 2;
    p.pool_rate = std::log(8.0) / 6.0;
    p.bin_rate_y = std::log(4.0) / 6.0;
    p.bin_rate_z = std::log(4.0) / 6.0;
    p.input_pmf = Pmf::uniform(2);
    p.eps = 0.6;
    p.seed = 31;
    return p;
}

FbIdParams fb_small_params() {
    FbIdParams p;
    p.n = 8;
    p.m_y_count = 3;
    p.m_z_count = 3;
    p.pool_rate = std::log(64.0) / 8.0;
    p.bin_rate_z = std::log(8.0) / 8.0;
    p.rate_y_hat = 0.3;
    p.input_pmf = Pmf::uniform(2);
    p.eps = 0.6;
    p.seed = 91;
    return p;
}

Bc2 fb_small_channel() { return make_product_bc(bsc(0.05), bsc(0.1)); }

// ---- three receivers ----

TEST(Bc3ValidationTest, FlagsNameTheReceiverAndTheBuilderRejection) {
    const Bc3 bc = make_product_bc3(bsc(0.05), bsc(0.05), bsc(0.05));
    Bc3IdParams p;
    p.n = 12;
    p.m_counts = {3, 3, 3};
    p.pool_rate = 0.4;
    p.bin_rates = {0.3, 0.3, 0.15};
    p.input_pmf = Pmf::uniform(2);
    p.eps = 0.01;
    p.seed = 5;
    const auto sum_flags = validate_bc3_params(p, bc);
    ASSERT_EQ(sum_flags.size(), 1u);
    EXPECT_NE(sum_flags[0].find("2 * pool_rate"), std::string::npos);
    EXPECT_NE(sum_flags[0].find("the builder rejects this outright"), std::string::npos);
    EXPECT_THROW(build_bc3_code(p), std::invalid_argument);

    p.bin_rates = {0.3, 0.5, 0.15};
    const auto recv_flags = validate_bc3_params(p, bc);
    ASSERT_EQ(recv_flags.size(), 3u);
    EXPECT_NE(recv_flags[0].find("for receiver 1 is not below I(P,W_1)"),
              std::string::npos);
    EXPECT_NE(recv_flags[1].find("is not below pool_rate"), std::string::npos);
    EXPECT_NE(recv_flags[2].find("typicality slack too large for receiver 1"),
              std::string::npos);
}

TEST(Bc3DegeneracyTest, FullThirdBinReproducesTheTwoReceiverCode) {
    const BcIdParams two = bc_base_params();
    const BcIdCode code2 = build_bc_code(two);

    Bc3IdParams three;
    three.n = two.n;
    three.m_counts = {two.m_y_count, two.m_z_count, 1};
    three.pool_rate = two.pool_rate;
    three.bin_rates = {two.bin_rate_y, two.bin_rate_z, two.pool_rate};
    three.input_pmf = two.input_pmf;
    three.eps = two.eps;
    three.seed = two.seed;
    const Bc3IdCode code3 = build_bc3_code(three);

    ASSERT_EQ(code3.pool.size(), code2.pool.size());
    for (std::size_t v = 0; v < code2.pool.size(); ++v)
        EXPECT_EQ(code3.pool[v].sym, code2.pool[v].sym);
    EXPECT_EQ(code3.index_sets[0], code2.index_sets_y);
    EXPECT_EQ(code3.index_sets[1], code2.index_sets_z);
    ASSERT_EQ(code3.index_sets[2].size(), 1u);
    EXPECT_EQ(code3.index_sets[2][0].size(), code3.pool.size());

    for (std::int64_t my = 0; my < two.m_y_count; ++my)
        for (std::int64_t mz = 0; mz < two.m_z_count; ++mz)
            EXPECT_EQ(codeword_index_bc3(code3, my, mz, 0),
                      codeword_index(code2, my, mz));

    const Bc2 bc = make_product_bc(bsc(0.15), bsc(0.25));
    const Bc3 bc3 = make_product_bc3(bsc(0.15), bsc(0.25), bsc(0.25));
    const BcSideReports two_rep = avg_error_report_bc(code2, bc);
    const Bc3Reports three_rep = evaluate_bc3(code3, bc3);
    expect_reports_close(three_rep.receiver[0], two_rep.y);
    expect_reports_close(three_rep.receiver[1], two_rep.z);
}

TEST(Bc3EvalTest, MatchesTheBruteForceEnumerationForEveryReceiver) {
    Bc3IdParams p;
    p.n = 4;
    p.m_counts = {2, 2, 2};
    p.pool_rate = std::log(6.0) / 4.0;
    p.bin_rates = {std::log(4.0) / 4.0, std::log(4.0) / 4.0, std::log(4.0) / 4.0};
    p.input_pmf = Pmf::uniform(2);
    p.eps = 0.6;
    p.seed = 77;
    const Bc3IdCode code = build_bc3_code(p);
    const Bc3 bc = make_product_bc3(bsc(0.1), bsc(0.2), bsc(0.3));
    const Bc3Reports rep = evaluate_bc3(code, bc);

    for (int k = 0; k < 3; ++k) {
        const int a = k == 0 ? 1 : 0;
        const int b = k == 2 ? 1 : 2;
        const std::int64_t mb = p.m_counts[static_cast<std::size_t>(b)];
        const std::int64_t other_count =
            p.m_counts[static_cast<std::size_t>(a)] * mb;

        oracle::BruteDetCode view;
        for (const Sequence& s : code.pool) view.pool.push_back(to_ints(s));
        for (const auto& bin : code.index_sets[static_cast<std::size_t>(k)])
            view.bins.emplace_back(bin.begin(), bin.end());
        view.vmat.assign(2, {});
        for (std::int64_t m = 0; m < 2; ++m)
            for (std::int64_t other = 0; other < other_count; ++other) {
                std::array<std::int64_t, 3> msg{};
                msg[static_cast<std::size_t>(k)] = m;
                msg[static_cast<std::size_t>(a)] = other / mb;
                msg[static_cast<std::size_t>(b)] = other % mb;
                view.vmat[static_cast<std::size_t>(m)].push_back(static_cast<int>(
                    codeword_index_bc3(code, msg[0], msg[1], msg[2])));
            }
        view.p = p.input_pmf.probs();
        view.w = rows_of(bc.marginal(k));
        view.eps = p.eps;
        const oracle::BruteReport expected = oracle::brute_force_det_errors(view);

        const ErrorReport& got = rep.receiver[static_cast<std::size_t>(k)];
        EXPECT_EQ(got.method, "exact");
        for (std::int64_t m = 0; m < 2; ++m)
            EXPECT_NEAR(got.missed[static_cast<std::size_t>(m)],
                        expected.missed[static_cast<std::size_t>(m)], 1e-12)
                << "receiver " << k;
        EXPECT_NEAR(find_pair(got, 0, 1).value, expected.wrong[0][1], 1e-12);
        EXPECT_NEAR(find_pair(got, 1, 0).value, expected.wrong[1][0], 1e-12);
    }
}

// ---- common message ----

TEST(CmDegeneracyTest, SingleCommonMessageReproducesTheTwoReceiverCode) {
    const BcIdParams two = bc_base_params();
    const BcIdCode code2 = build_bc_code(two);

    CmIdParams cm;
    cm.n = two.n;
    cm.m_count = 1;
    cm.m_y_count = two.m_y_count;
    cm.m_z_count = two.m_z_count;
    cm.pool_rate = two.pool_rate;
    cm.bin_rate_y = two.bin_rate_y;
    cm.bin_rate_z = two.bin_rate_z;
    cm.input_pmf = two.input_pmf;
    cm.eps = two.eps;
    cm.seed = two.seed;
    const CmIdCode code = build_cm_code(cm);

    ASSERT_EQ(code.pool.size(), code2.pool.size());
    for (std::size_t v = 0; v < code2.pool.size(); ++v)
        EXPECT_EQ(code.pool[v].sym, code2.pool[v].sym);
    EXPECT_EQ(code.index_sets_y, code2.index_sets_y);
    EXPECT_EQ(code.index_sets_z, code2.index_sets_z);
    for (std::int64_t my = 0; my < two.m_y_count; ++my)
        for (std::int64_t mz = 0; mz < two.m_z_count; ++mz)
            EXPECT_EQ(codeword_index_cm(code, 0, my, mz),
                      codeword_index(code2, my, mz));

    const Bc2 bc = make_product_bc(bsc(0.15), bsc(0.25));
    const BcSideReports two_rep = avg_error_report_bc(code2, bc);
    const BcSideReports cm_rep = evaluate_cm(code, bc);
    expect_reports_identical(cm_rep.y, two_rep.y);
    expect_reports_identical(cm_rep.z, two_rep.z);
}

TEST(CmEvalTest, JointMessagesMatchTheBruteForceEnumeration) {
    CmIdParams cm;
    cm.n = 6;
    cm.m_count = 2;
    cm.m_y_count = 2;
    cm.m_z_count = 2;
    cm.pool_rate = std::log(8.0) / 6.0;
    cm.bin_rate_y = std::log(4.0) / 6.0;
    cm.bin_rate_z = std::log(4.0) / 6.0;
    cm.input_pmf = Pmf::uniform(2);
    cm.eps = 0.6;
    cm.seed = 33;
    const CmIdCode code = build_cm_code(cm);
    ASSERT_EQ(code.index_sets_y.size(), 4u);

    const Bc2 bc = make_product_bc(bsc(0.15), bsc(0.25));
    const BcSideReports rep = evaluate_cm(code, bc);
    EXPECT_EQ(rep.y.method, "exact");

    oracle::BruteDetCode view;
    for (const Sequence& s : code.pool) view.pool.push_back(to_ints(s));
    for (const auto& bin : code.index_sets_y) view.bins.emplace_back(bin.begin(), bin.end());
    view.vmat.assign(4, {});
    for (std::int64_t own = 0; own < 4; ++own)
        for (std::int64_t other = 0; other < 2; ++other)
            view.vmat[static_cast<std::size_t>(own)].push_back(static_cast<int>(
                codeword_index_cm(code, own / 2, own % 2, other)));
    view.p = cm.input_pmf.probs();
    view.w = rows_of(bc.marginal_y());
    view.eps = cm.eps;
    const oracle::BruteReport expected = oracle::brute_force_det_errors(view);

    for (std::int64_t own = 0; own < 4; ++own)
        EXPECT_NEAR(rep.y.missed[static_cast<std::size_t>(own)],
                    expected.missed[static_cast<std::size_t>(own)], 1e-12);
    for (std::int64_t own = 0; own < 4; ++own)
        for (std::int64_t mp = 0; mp < 4; ++mp) {
            if (own == mp) continue;
            EXPECT_NEAR(find_pair(rep.y, own, mp).value,
                        expected.wrong[static_cast<std::size_t>(own)]
                                      [static_cast<std::size_t>(mp)],
                        1e-12);
        }
}

TEST(CmValidationTest, JointEmpiricalRatesAreChecked) {
    CmIdParams cm;
    cm.n = 2;
    cm.m_count = 4;
    cm.m_y_count = 4;
    cm.m_z_count = 1;
    cm.pool_rate = 0.45;
    cm.bin_rate_y = 0.3;
    cm.bin_rate_z = 0.2;
    cm.input_pmf = Pmf::uniform(2);
    cm.eps = 0.01;
    const auto flags = validate_cm_params(cm, make_product_bc(bsc(0.05), bsc(0.05)));
    ASSERT_EQ(flags.size(), 1u);
    EXPECT_NE(flags[0].find("joint (common, y) messages"), std::string::npos);
}

// ---- transmission subcode ----

TEST(TransmissionTest, NoiselessChannelDecodesEveryMessage) {
    const TransmissionCode code =
        build_transmission_code(noiseless(), 8, std::log(4.0) / 8.0, 5);
    ASSERT_EQ(code.u_count, 4);
    for (std::int64_t u = 0; u < 4; ++u)
        for (std::int64_t up = u + 1; up < 4; ++up)
            ASSERT_NE(code.codebook[static_cast<std::size_t>(u)].sym,
                      code.codebook[static_cast<std::size_t>(up)].sym);
    EXPECT_EQ(code.eps_k, 0.0);
    for (std::int64_t u = 0; u < 4; ++u)
        EXPECT_EQ(transmission_decode(code, noiseless(),
                                      code.codebook[static_cast<std::size_t>(u)]),
                  u);
}

TEST(TransmissionTest, NoisyChannelKeepsTheWorstMessageErrorSmall) {
    const TransmissionCode code =
        build_transmission_code(bsc(0.05), 64, 0.05, 19, 2.0, 800);
    EXPECT_EQ(code.u_count, 25);
    EXPECT_LE(code.eps_k, 0.2);
    EXPECT_GT(code.eps_k_halfwidth, 0.0);
    const Sequence& clean = code.codebook[3];
    EXPECT_EQ(transmission_decode(code, bsc(0.05), clean), 3);
}

TEST(TransmissionTest, RejectsRatesAtTheInformationMaximum) {
    EXPECT_THROW(build_transmission_code(bsc(0.11), 8, 0.35, 1), std::invalid_argument);
    EXPECT_THROW(build_transmission_code(bsc(0.11), 0, 0.1, 1), std::invalid_argument);
}

TEST(TransmissionTest, VanishingRateCollapsesToOneMessage) {
    const TransmissionCode code = build_transmission_code(bsc(0.05), 4, 1e-3, 3, 2.0, 500);
    EXPECT_EQ(code.u_count, 1);
    EXPECT_EQ(code.eps_k, 0.0);
}

// ---- one-sided feedback ----

TEST(FbValidationTest, FlagsNameTheViolatedCondition) {
    const Bc2 bc = make_product_bc(bsc(0.05), bsc(0.2));
    FbIdParams p;
    p.n = 16;
    p.m_y_count = 2;
    p.m_z_count = 4;
    p.pool_rate = 0.6;
    p.bin_rate_z = 0.15;
    p.rate_y_hat = 0.3;
    p.input_pmf = Pmf::uniform(2);
    p.eps = 0.01;
    EXPECT_TRUE(validate_fb_params(p, bc).empty());

    FbIdParams bad = p;
    bad.pool_rate = 0.45;
    auto flags = validate_fb_params(bad, bc);
    ASSERT_EQ(flags.size(), 1u);
    EXPECT_NE(flags[0].find("is not above I(P,W_y)"), std::string::npos);

    bad = p;
    bad.rate_y_hat = 0.0;
    flags = validate_fb_params(bad, bc);
    ASSERT_EQ(flags.size(), 1u);
    EXPECT_NE(flags[0].find("is not positive"), std::string::npos);

    bad = p;
    bad.rate_y_hat = 0.6;
    flags = validate_fb_params(bad, bc);
    ASSERT_EQ(flags.size(), 1u);
    EXPECT_NE(flags[0].find("is not below the y information maximum"),
              std::string::npos);

    bad = p;
    bad.bin_rate_z = 0.2;
    flags = validate_fb_params(bad, bc);
    ASSERT_EQ(flags.size(), 2u);
    EXPECT_NE(flags[0].find("bin_rate_z"), std::string::npos);
    EXPECT_NE(flags[0].find("is not below I(P,W_z)"), std::string::npos);

    bad = p;
    bad.eps = 0.05;
    flags = validate_fb_params(bad, bc);
    ASSERT_EQ(flags.size(), 1u);
    EXPECT_NE(flags[0].find("typicality slack too large on side z"), std::string::npos);

    bad = p;
    bad.n = 2;
    bad.m_z_count = 300;
    flags = validate_fb_params(bad, bc);
    ASSERT_EQ(flags.size(), 1u);
    EXPECT_NE(flags[0].find("empirical ID rate"), std::string::npos);

    bad = p;
    bad.input_pmf = Pmf::uniform(3);
    flags = validate_fb_params(bad, bc);
    ASSERT_EQ(flags.size(), 1u);
    EXPECT_NE(flags[0].find("does not match the channel input alphabet"),
              std::string::npos);
}

TEST(FbBuildTest, MaterializedPoolMatchesTheSingleUserConstruction) {
    const FbIdParams p = fb_small_params();
    const FbIdCode code = build_fb_code(p, fb_small_channel());
    ASSERT_TRUE(code.pool_materialized);
    ASSERT_EQ(code.pool.size(), 64u);
    EXPECT_EQ(code.pool_size, 64);
    EXPECT_EQ(code.k, 3);
    EXPECT_EQ(code.tcode.u_count, 2);
    EXPECT_EQ(code.v_star, 0u);
    EXPECT_EQ(code.v_star_sequence.sym, code.pool[0].sym);

    IdParams single;
    single.n = p.n;
    single.m_count = p.m_z_count;
    single.pool_rate = p.pool_rate;
    single.bin_rate = p.bin_rate_z;
    single.input_pmf = p.input_pmf;
    single.eps = p.eps;
    single.seed = p.seed;
    const IdCodeDmc dmc = build_dmc_code(single);
    ASSERT_EQ(dmc.pool.size(), code.pool.size());
    for (std::size_t v = 0; v < dmc.pool.size(); ++v)
        EXPECT_EQ(code.pool[v].sym, dmc.pool[v].sym);
    ASSERT_EQ(code.index_sets_z.size(), dmc.index_sets.size());
    for (std::size_t m = 0; m < dmc.index_sets.size(); ++m) {
        ASSERT_EQ(code.index_sets_z[m].size(), dmc.index_sets[m].size());
        for (std::size_t i = 0; i < dmc.index_sets[m].size(); ++i)
            EXPECT_EQ(code.index_sets_z[m][i], dmc.index_sets[m][i]);
    }
    for (std::size_t m = 0; m < code.index_sets_z.size(); ++m) {
        ASSERT_EQ(code.bin_sequences[m].size(), code.index_sets_z[m].size());
        for (std::size_t i = 0; i < code.index_sets_z[m].size(); ++i)
            EXPECT_EQ(code.bin_sequences[m][i].sym,
                      code.pool[code.index_sets_z[m][i]].sym);
    }
}

TEST(FbBuildTest, OversizedPoolStaysLazyAndDerivesElementsOnDemand) {
    FbIdParams p;
    p.n = 40;
    p.m_y_count = 3;
    p.m_z_count = 3;
    p.pool_rate = 0.5;
    p.bin_rate_z = 0.1;
    p.rate_y_hat = 0.3;
    p.input_pmf = Pmf::uniform(2);
    p.eps = 0.1;
    p.seed = 101;
    const Bc2 bc = make_product_bc(bsc(0.05), bsc(0.2));
    const FbIdCode code = build_fb_code(p, bc);
    EXPECT_FALSE(code.pool_materialized);
    EXPECT_TRUE(code.pool.empty());
    EXPECT_EQ(code.pool_size, 485165195);
    EXPECT_EQ(code.k, 7);
    EXPECT_EQ(code.tcode.u_count, 8);

    // Poisson(54.6) bin sizes, five sigma wide.
    for (std::size_t m = 0; m < 3; ++m) {
        const std::size_t size = code.index_sets_z[m].size();
        EXPECT_GE(size, 18u);
        EXPECT_LE(size, 92u);
        ASSERT_EQ(code.bin_sequences[m].size(), size);
        EXPECT_TRUE(std::is_sorted(code.index_sets_z[m].begin(),
                                   code.index_sets_z[m].end()));
        for (std::size_t i = 0; i < std::min<std::size_t>(size, 3); ++i)
            EXPECT_EQ(fb_pool_element(code, code.index_sets_z[m][i]).sym,
                      code.bin_sequences[m][i].sym);
    }
    EXPECT_THROW(pool_output_tv(code, bc.marginal_y()), BudgetError);

    EvalOptions opt;
    opt.trials = 1500;
    const BcSideReports rep = evaluate_fb(code, bc, opt);
    EXPECT_EQ(rep.y.method, "monte-carlo(1500)");
    EXPECT_EQ(rep.y.caveat,
              "exact y evaluation infeasible at these sizes; Monte Carlo used");
    EXPECT_EQ(rep.z.method, "monte-carlo(1500)");
    EXPECT_EQ(rep.z.caveat, "pool held lazy; z side sampled");
    for (const double v : rep.z.missed) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(FbPhiTest, KeyedMapIsDeterministicNearUniformAndMessageSensitive) {
    const FbIdCode code = build_fb_code(fb_small_params(), fb_small_channel());
    ASSERT_EQ(code.tcode.u_count, 2);

    int zeros = 0;
    int differs = 0;
    for (int mask = 0; mask < 256; ++mask) {
        Sequence y;
        for (int i = 0; i < 8; ++i)
            y.sym.push_back(static_cast<std::uint8_t>((mask >> i) & 1));
        const std::int64_t u0 = fb_phi(code, y, 0);
        EXPECT_EQ(fb_phi(code, y, 0), u0);
        if (u0 == 0) ++zeros;
        if (fb_phi(code, y, 1) != u0) ++differs;
    }
    // Binomial(256, 1/2), five sigma.
    EXPECT_NEAR(zeros, 128.0, 40.0);
    EXPECT_GT(differs, 0);

    Sequence short_y;
    short_y.sym.assign(7, 0);
    EXPECT_THROW(fb_phi(code, short_y, 0), std::invalid_argument);
}

TEST(FbEncodeTest, TranscriptTiesTheTwoPhasesTogether) {
    const FbIdCode code = build_fb_code(fb_small_params(), fb_small_channel());
    const Bc2 bc = fb_small_channel();
    ASSERT_FALSE(code.index_sets_z[2].empty());

    Crng g = make_stream(999, StreamTag::trial, {42});
    const FbTranscript t = encode_fb(code, 1, 2, g, bc);
    const int n = code.params.n;
    ASSERT_EQ(t.x.n(), n + code.k);
    ASSERT_EQ(t.y.n(), n + code.k);
    ASSERT_EQ(t.z.n(), n + code.k);

    const auto& bin = code.index_sets_z[2];
    const auto pos = std::find(bin.begin(), bin.end(), t.v);
    ASSERT_NE(pos, bin.end());
    const Sequence& head = code.bin_sequences[2][static_cast<std::size_t>(
        std::distance(bin.begin(), pos))];
    for (int i = 0; i < n; ++i)
        EXPECT_EQ(t.x.sym[static_cast<std::size_t>(i)],
                  head.sym[static_cast<std::size_t>(i)]);
    const Sequence& tail = code.tcode.codebook[static_cast<std::size_t>(t.u)];
    for (int i = 0; i < code.k; ++i)
        EXPECT_EQ(t.x.sym[static_cast<std::size_t>(n + i)],
                  tail.sym[static_cast<std::size_t>(i)]);

    Sequence y_head;
    y_head.sym.assign(t.y.sym.begin(), t.y.sym.begin() + n);
    EXPECT_EQ(t.u, fb_phi(code, y_head, 1));

    Crng g2 = make_stream(999, StreamTag::trial, {42});
    const FbTranscript t2 = encode_fb(code, 1, 2, g2, bc);
    EXPECT_EQ(t2.x.sym, t.x.sym);
    EXPECT_EQ(t2.y.sym, t.y.sym);
    EXPECT_EQ(t2.z.sym, t.z.sym);
    EXPECT_EQ(t2.v, t.v);
    EXPECT_EQ(t2.u, t.u);
}

TEST(FbDecoderTest, NoiselessFeedbackLinkNeverMissesTheOwnMessage) {
    FbIdParams p;
    p.n = 4;
    p.m_y_count = 4;
    p.m_z_count = 2;
    p.pool_rate = 0.75;
    p.bin_rate_z = 0.2;
    p.rate_y_hat = 0.4;
    p.input_pmf = Pmf::uniform(2);
    p.eps = 0.25;
    p.seed = 7;
    const Bc2 bc = make_product_bc(noiseless(), bsc(0.1));
    const FbIdCode code = build_fb_code(p, bc);
    ASSERT_EQ(code.tcode.u_count, 2);
    ASSERT_NE(code.tcode.codebook[0].sym, code.tcode.codebook[1].sym);
    EXPECT_EQ(code.tcode.eps_k, 0.0);

    bool rejects_somewhere = false;
    Crng g = make_stream(5, StreamTag::trial, {1});
    for (std::int64_t m = 0; m < 4; ++m) {
        const FbTranscript t = encode_fb(code, m, m % 2, g, bc);
        EXPECT_TRUE(fb_decoder_accepts_y(code, noiseless(), m, t.y));
        for (std::int64_t mp = 0; mp < 4; ++mp)
            if (mp != m && !fb_decoder_accepts_y(code, noiseless(), mp, t.y))
                rejects_somewhere = true;
    }
    EXPECT_TRUE(rejects_somewhere);

    Sequence short_obs;
    short_obs.sym.assign(static_cast<std::size_t>(code.params.n + code.k - 1), 0);
    EXPECT_THROW(fb_decoder_accepts_y(code, noiseless(), 0, short_obs),
                 std::invalid_argument);
}

TEST(FbDecoderTest, ZVerdictIgnoresTheSecondPhase) {
    const FbIdCode code = build_fb_code(fb_small_params(), fb_small_channel());
    const Bc2 bc = fb_small_channel();
    const Dmc wz = bc.marginal_z();
    Crng g = make_stream(13, StreamTag::trial, {2});
    const FbTranscript t = encode_fb(code, 0, 1, g, bc);

    Sequence scrambled = t.z;
    for (int i = 0; i < code.k; ++i) {
        auto& s = scrambled.sym[static_cast<std::size_t>(code.params.n + i)];
        s = static_cast<std::uint8_t>(1 - s);
    }
    for (std::int64_t m = 0; m < code.params.m_z_count; ++m)
        EXPECT_EQ(fb_decoder_accepts_z(code, wz, m, t.z),
                  fb_decoder_accepts_z(code, wz, m, scrambled));

    Sequence too_short;
    too_short.sym.assign(static_cast<std::size_t>(code.params.n - 1), 0);
    EXPECT_THROW(fb_decoder_accepts_z(code, wz, 0, too_short), std::invalid_argument);
}

TEST(FbIndexDiagTest, EncoderLawEqualsTheUniformReference) {
    FbIdCode code = build_fb_code(fb_small_params(), fb_small_channel());
    for (std::int64_t m = 0; m < code.params.m_z_count; ++m) {
        const FbIndexDiag diag = fb_index_distribution(code, m);
        EXPECT_EQ(diag.tv, 0.0);
        ASSERT_EQ(diag.support.size(), code.index_sets_z[static_cast<std::size_t>(m)].size());
        EXPECT_EQ(diag.support, code.index_sets_z[static_cast<std::size_t>(m)]);
        for (const double q : diag.p_v)
            EXPECT_DOUBLE_EQ(q, 1.0 / static_cast<double>(diag.support.size()));
    }

    code.index_sets_z[0].clear();
    code.bin_sequences[0].clear();
    const FbIndexDiag empty = fb_index_distribution(code, 0);
    EXPECT_EQ(empty.tv, 0.0);
    ASSERT_EQ(empty.support.size(), 1u);
    EXPECT_EQ(empty.support[0], code.v_star);
    EXPECT_EQ(empty.p_v[0], 1.0);
}

TEST(FbOutputLawTest, LargerPoolsPushTheOutputTowardTheSingleLetterLaw) {
    const Bc2 bc = make_product_bc(bsc(0.1), bsc(0.1));
    const auto tv_at = [&bc](int n) {
        FbIdParams p;
        p.n = n;
        p.m_y_count = 2;
        p.m_z_count = 2;
        p.pool_rate = 1.0;
        p.bin_rate_z = 0.3;
        p.rate_y_hat = 0.2;
        p.input_pmf = Pmf::uniform(2);
        p.eps = 0.25;
        p.seed = 11;
        const FbIdCode code = build_fb_code(p, bc);
        return pool_output_tv(code, bc.marginal_y());
    };
    const double tv4 = tv_at(4);
    const double tv6 = tv_at(6);
    const double tv8 = tv_at(8);
    EXPECT_GT(tv4, tv6);
    EXPECT_GT(tv6, tv8);
    EXPECT_GT(tv8, 0.0);
    EXPECT_LT(tv8, 0.15);
}

TEST(FbEvalTest, ZSideMatchesTheBruteForceEnumeration) {
    const FbIdCode code = build_fb_code(fb_small_params(), fb_small_channel());
    const Bc2 bc = fb_small_channel();
    const BcSideReports rep = evaluate_fb(code, bc);
    ASSERT_EQ(rep.z.method, "exact");

    oracle::BruteCode view;
    for (const Sequence& s : code.pool) view.pool.push_back(to_ints(s));
    for (const auto& bin : code.index_sets_z)
        view.bins.emplace_back(bin.begin(), bin.end());
    view.p = code.params.input_pmf.probs();
    view.w = rows_of(bc.marginal_z());
    view.eps = code.params.eps;
    view.v_star = static_cast<int>(code.v_star);
    const oracle::BruteReport expected = oracle::brute_force_id_errors(view);

    for (std::int64_t m = 0; m < code.params.m_z_count; ++m)
        EXPECT_NEAR(rep.z.missed[static_cast<std::size_t>(m)],
                    expected.missed[static_cast<std::size_t>(m)], 1e-12);
    for (std::int64_t m = 0; m < code.params.m_z_count; ++m)
        for (std::int64_t mp = 0; mp < code.params.m_z_count; ++mp) {
            if (m == mp) continue;
            EXPECT_NEAR(find_pair(rep.z, m, mp).value,
                        expected.wrong[static_cast<std::size_t>(m)]
                                      [static_cast<std::size_t>(mp)],
                        1e-12);
        }
}

TEST(FbEvalTest, ExactAndMonteCarloYReportsAgree) {
    const FbIdCode code = build_fb_code(fb_small_params(), fb_small_channel());
    const Bc2 bc = fb_small_channel();
    const BcSideReports exact = evaluate_fb(code, bc);
    ASSERT_EQ(exact.y.method, "exact");

    EvalOptions opt;
    opt.mode = EvalMode::monte_carlo;
    opt.trials = 20000;
    const BcSideReports mc = evaluate_fb(code, bc, opt);
    ASSERT_EQ(mc.y.method, "monte-carlo(20000)");

    for (std::int64_t m = 0; m < code.params.m_y_count; ++m) {
        const auto mu = static_cast<std::size_t>(m);
        EXPECT_NEAR(mc.y.missed[mu], exact.y.missed[mu],
                    3.0 * mc.y.missed_halfwidth[mu] + 2e-3);
    }
    for (const PairEntry& e : mc.y.wrong)
        EXPECT_NEAR(e.value, find_pair(exact.y, e.m, e.m_prime).value,
                    3.0 * e.halfwidth + 2e-3);
}

// ---- causal-encoder type concentration ----

TEST(ConcentrationTest, MemorylessAndAdaptiveEncodersBothConcentrate) {
    const Dmc w = bsc(0.05);
    const CausalEncoder memoryless = [](const Sequence&, const Sequence&) {
        return Pmf::uniform(2);
    };
    const CausalEncoder echo = [](const Sequence&, const Sequence& y_past) {
        if (y_past.sym.empty()) return Pmf::uniform(2);
        std::vector<double> q(2, 0.05);
        q[y_past.sym.back()] = 0.95;
        return Pmf(q);
    };
    const ConcentrationReport a = fb_type_concentration_check(memoryless, w, 100, 0.3,
                                                              1500, 17);
    EXPECT_DOUBLE_EQ(a.bound, 4.0 / 9.0);
    EXPECT_EQ(a.trials, 1500u);
    EXPECT_LE(a.frequency, 0.05);
    EXPECT_TRUE(a.pass);

    const ConcentrationReport b = fb_type_concentration_check(echo, w, 100, 0.3,
                                                              1500, 18);
    EXPECT_LE(b.frequency, 0.05);
    EXPECT_TRUE(b.pass);
}

TEST(ConcentrationTest, LooseParametersClipTheBoundAtOne) {
    const CausalEncoder memoryless = [](const Sequence&, const Sequence&) {
        return Pmf::uniform(2);
    };
    const ConcentrationReport rep =
        fb_type_concentration_check(memoryless, bsc(0.05), 1, 0.1, 50, 3);
    EXPECT_DOUBLE_EQ(rep.bound, 1.0);
    EXPECT_TRUE(rep.pass);
}

TEST(ConcentrationTest, RejectsDegenerateArguments) {
    const CausalEncoder memoryless = [](const Sequence&, const Sequence&) {
        return Pmf::uniform(2);
    };
    EXPECT_THROW(fb_type_concentration_check(memoryless, bsc(0.05), 10, 0.0, 10, 1),
                 std::invalid_argument);
    EXPECT_THROW(fb_type_concentration_check(CausalEncoder{}, bsc(0.05), 10, 0.1, 10, 1),
                 std::invalid_argument);
}

}  // namespace
}  // namespace idbc
