#include "idbc/id_ext.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "idbc/errors.hpp"
#include "idbc/info.hpp"
#include "idbc/typeskit.hpp"
#include "exact_eval.hpp"
#include "report_common.hpp"

namespace idbc {

namespace {

void require_arg(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

std::vector<std::uint32_t> sorted_intersection(const std::vector<std::uint32_t>& a,
                                               const std::vector<std::uint32_t>& b) {
    std::vector<std::uint32_t> out;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) ++i;
        else if (a[i] > b[j]) ++j;
        else { out.push_back(a[i]); ++i; ++j; }
    }
    return out;
}

IdParams pool_view(int n, double pool_rate, double bin_rate, const Pmf& pmf,
                   double eps, std::uint64_t seed) {
    IdParams q;
    q.n = n;
    q.m_count = 1;
    q.pool_rate = pool_rate;
    q.bin_rate = bin_rate;
    q.input_pmf = pmf;
    q.eps = eps;
    q.seed = seed;
    return q;
}

// Index-set fill shared with the single-user builder: identical stream words
// so collapsed message axes reproduce the smaller codes bit for bit.
void fill_bernoulli_bins(std::vector<std::vector<std::uint32_t>>& sets,
                         std::int64_t bin_count, std::int64_t pool_size, double p_sel,
                         std::uint64_t seed, std::uint64_t side,
                         std::uint64_t common_base, std::int64_t common_stride) {
    sets.resize(static_cast<std::size_t>(bin_count));
    for (std::int64_t b = 0; b < bin_count; ++b) {
        auto& bin = sets[static_cast<std::size_t>(b)];
        if (p_sel >= 1.0) {
            bin.resize(static_cast<std::size_t>(pool_size));
            for (std::int64_t v = 0; v < pool_size; ++v)
                bin[static_cast<std::size_t>(v)] = static_cast<std::uint32_t>(v);
            continue;
        }
        const std::uint64_t common =
            common_base + static_cast<std::uint64_t>(common_stride > 0 ? b / common_stride : 0);
        const std::uint64_t m =
            static_cast<std::uint64_t>(common_stride > 0 ? b % common_stride : b);
        Crng g = make_stream(seed, StreamTag::bin, {side, common, m});
        for (std::int64_t v = 0; v < pool_size; ++v)
            if (g.bernoulli(p_sel)) bin.push_back(static_cast<std::uint32_t>(v));
    }
}

std::vector<Sequence> derive_pool(const Pmf& pmf, int n, std::int64_t pool_size,
                                  std::uint64_t seed) {
    std::vector<Sequence> pool;
    pool.reserve(static_cast<std::size_t>(pool_size));
    for (std::int64_t v = 0; v < pool_size; ++v) {
        Crng g = make_stream(seed, StreamTag::pool, {static_cast<std::uint64_t>(v)});
        pool.push_back(sample_iid(pmf, n, g));
    }
    return pool;
}

int sample_symbol(const Dmc& w, int x, Crng& g) {
    const double u = g.next_double();
    double acc = 0.0;
    const int ny = w.output_size();
    for (int b = 0; b < ny; ++b) {
        acc += w.at(x, b);
        if (u < acc) return b;
    }
    return ny - 1;
}

}  // namespace

// ---- three receivers ----

namespace {

void check_bc3_params(const Bc3IdParams& p) {
    require_arg(p.n >= 1, "bc3 params: n must be at least 1");
    for (const std::int64_t m : p.m_counts)
        require_arg(m >= 1, "bc3 params: message counts must be at least 1");
    require_arg(std::isfinite(p.pool_rate), "bc3 params: pool_rate must be finite");
    double rate_sum = 0.0;
    for (const double r : p.bin_rates) {
        require_arg(std::isfinite(r), "bc3 params: bin rates must be finite");
        rate_sum += r;
    }
    require_arg(std::isfinite(p.eps) && p.eps >= 0.0,
                "bc3 params: eps must be finite and nonnegative");
    require_arg(2.0 * p.pool_rate < rate_sum,
                "bc3 params: 2 * pool_rate must stay below the bin-rate sum, "
                "otherwise the triple intersections are empty in expectation");
}

}  // namespace

std::vector<std::string> validate_bc3_params(const Bc3IdParams& params, const Bc3& bc) {
    // Scalar validity is a hard error here like in the other validators; the
    // structural rate condition below stays an advisory flag so callers can
    // see it alongside the rest, while the builder rejects it outright.
    require_arg(params.n >= 1, "bc3 params: n must be at least 1");
    for (const std::int64_t m : params.m_counts)
        require_arg(m >= 1, "bc3 params: message counts must be at least 1");
    require_arg(std::isfinite(params.pool_rate), "bc3 params: pool_rate must be finite");
    for (const double r : params.bin_rates)
        require_arg(std::isfinite(r), "bc3 params: bin rates must be finite");
    require_arg(std::isfinite(params.eps) && params.eps >= 0.0,
                "bc3 params: eps must be finite and nonnegative");
    std::vector<std::string> flags;
    if (params.input_pmf.size() != bc.input_size()) {
        flags.push_back("input distribution size does not match the channel input alphabet");
        return flags;
    }
    std::ostringstream os;
    os.precision(12);
    const auto flag = [&flags, &os]() {
        flags.push_back(os.str());
        os.str("");
    };
    double rate_sum = 0.0;
    for (int k = 0; k < 3; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const Dmc wk = bc.marginal(k);
        const double ik = mutual_information(params.input_pmf, wk);
        rate_sum += params.bin_rates[ku];
        if (!(params.bin_rates[ku] < ik)) {
            os << "bin rate " << params.bin_rates[ku] << " for receiver " << k
               << " is not below I(P,W_" << k << ") = " << ik;
            flag();
        }
        if (!(params.bin_rates[ku] < params.pool_rate)) {
            os << "bin rate " << params.bin_rates[ku] << " for receiver " << k
               << " is not below pool_rate " << params.pool_rate;
            flag();
        }
        if (!check_eps(params.input_pmf, wk, params.bin_rates[ku], params.eps)) {
            os << "typicality slack too large for receiver " << k
               << ": 2 * delta(eps) = "
               << 2.0 * typicality_delta(params.eps, params.input_pmf, wk)
               << " does not leave room under " << ik - params.bin_rates[ku];
            flag();
        }
        const auto emp = empirical_id_rate(params.n, params.m_counts[ku]);
        if (emp && !(*emp < params.bin_rates[ku])) {
            os << "empirical ID rate " << *emp << " for receiver " << k
               << " is not below its bin rate " << params.bin_rates[ku];
            flag();
        }
    }
    if (!(2.0 * params.pool_rate < rate_sum)) {
        os << "2 * pool_rate = " << 2.0 * params.pool_rate
           << " is not below the bin-rate sum " << rate_sum
           << "; the builder rejects this outright";
        flag();
    }
    return flags;
}

Bc3IdCode build_bc3_code(const Bc3IdParams& params, std::int64_t memory_budget_bytes) {
    check_bc3_params(params);
    const IdParams view = pool_view(params.n, params.pool_rate, params.bin_rates[0],
                                    params.input_pmf, params.eps, params.seed);
    const std::int64_t pool_size = id_pool_size(view);

    std::array<double, 3> p_sel{};
    double bin_bytes = 0.0;
    for (int k = 0; k < 3; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        p_sel[ku] = id_p_sel(pool_view(params.n, params.pool_rate, params.bin_rates[ku],
                                       params.input_pmf, params.eps, params.seed));
        bin_bytes += static_cast<double>(params.m_counts[ku]) *
                     (p_sel[ku] * static_cast<double>(pool_size) * 4.0 + 24.0);
    }
    const double pool_bytes =
        static_cast<double>(pool_size) * (static_cast<double>(params.n) + 16.0);
    if (pool_bytes + bin_bytes > static_cast<double>(memory_budget_bytes))
        throw BudgetError("code memory estimate exceeds the budget");

    Bc3IdCode code;
    code.params = params;
    code.pool = derive_pool(params.input_pmf, params.n, pool_size, params.seed);
    for (int k = 0; k < 3; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        fill_bernoulli_bins(code.index_sets[ku], params.m_counts[ku], pool_size,
                            p_sel[ku], params.seed, static_cast<std::uint64_t>(k), 0, 0);
    }
    return code;
}

std::uint32_t codeword_index_bc3(const Bc3IdCode& code, std::int64_t m1,
                                 std::int64_t m2, std::int64_t m3) {
    const std::array<std::int64_t, 3> m{m1, m2, m3};
    for (int k = 0; k < 3; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        require_arg(m[ku] >= 0 && m[ku] < code.params.m_counts[ku],
                    "codeword index: message out of range");
    }
    Crng g = make_stream(code.params.seed, StreamTag::vsel,
                         {0, static_cast<std::uint64_t>(m1),
                          static_cast<std::uint64_t>(m2),
                          static_cast<std::uint64_t>(m3)});
    const auto inter = sorted_intersection(
        sorted_intersection(code.index_sets[0][static_cast<std::size_t>(m1)],
                            code.index_sets[1][static_cast<std::size_t>(m2)]),
        code.index_sets[2][static_cast<std::size_t>(m3)]);
    if (!inter.empty()) return inter[g.uniform_u64(inter.size())];
    return static_cast<std::uint32_t>(g.uniform_u64(code.pool.size()));
}

Sequence encode_bc3(const Bc3IdCode& code, std::int64_t m1, std::int64_t m2,
                    std::int64_t m3) {
    return code.pool[codeword_index_bc3(code, m1, m2, m3)];
}

bool decoder_accepts_bc3(const Bc3IdCode& code, const Dmc& marginal, int receiver,
                         std::int64_t m_prime, const Sequence& observed) {
    require_arg(receiver >= 0 && receiver < 3, "decoder: receiver out of range");
    const auto ku = static_cast<std::size_t>(receiver);
    require_arg(m_prime >= 0 && m_prime < code.params.m_counts[ku],
                "decoder: message out of range");
    for (const std::uint32_t v : code.index_sets[ku][static_cast<std::size_t>(m_prime)])
        if (is_jointly_typical(code.pool[v], observed, code.params.input_pmf, marginal,
                               code.params.eps))
            return true;
    return false;
}

Bc3Reports evaluate_bc3(const Bc3IdCode& code, const Bc3& bc, const EvalOptions& opt,
                        std::int64_t other_cap) {
    require_arg(code.params.input_pmf.size() == bc.input_size(),
                "error report: input distribution does not match the channel");
    Bc3Reports out;
    for (int k = 0; k < 3; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const int a = k == 0 ? 1 : 0;
        const int b = k == 2 ? 1 : 2;
        const std::int64_t ma = code.params.m_counts[static_cast<std::size_t>(a)];
        const std::int64_t mb = code.params.m_counts[static_cast<std::size_t>(b)];
        require_arg(static_cast<double>(ma) * static_cast<double>(mb) < 9.0e18,
                    "error report: other-message product overflows");

        detail::SideEvalSpec spec;
        spec.n = code.params.n;
        spec.eps = code.params.eps;
        spec.input_pmf = &code.params.input_pmf;
        spec.pool = &code.pool;
        spec.own_bins = &code.index_sets[ku];
        spec.own_count = code.params.m_counts[ku];
        spec.other_count = ma * mb;
        spec.root = opt.seed != 0 ? opt.seed : code.params.seed;
        spec.side_word = static_cast<std::uint64_t>(k);
        spec.pair_index = [&code, k, a, b, mb](std::int64_t own, std::int64_t other) {
            std::array<std::int64_t, 3> m{};
            m[static_cast<std::size_t>(k)] = own;
            m[static_cast<std::size_t>(a)] = other / mb;
            m[static_cast<std::size_t>(b)] = other % mb;
            return codeword_index_bc3(code, m[0], m[1], m[2]);
        };
        out.receiver[ku] =
            detail::deterministic_side_report(spec, bc.marginal(k), opt, other_cap, false);
    }
    return out;
}

// ---- common message ----

namespace {

void check_cm_params(const CmIdParams& p) {
    require_arg(p.n >= 1, "cm params: n must be at least 1");
    require_arg(p.m_count >= 1 && p.m_y_count >= 1 && p.m_z_count >= 1,
                "cm params: message counts must be at least 1");
    require_arg(std::isfinite(p.pool_rate) && std::isfinite(p.bin_rate_y) &&
                    std::isfinite(p.bin_rate_z),
                "cm params: rates must be finite");
    require_arg(std::isfinite(p.eps) && p.eps >= 0.0,
                "cm params: eps must be finite and nonnegative");
    require_arg(static_cast<double>(p.m_count) * static_cast<double>(p.m_y_count) <
                        2147483647.0 &&
                    static_cast<double>(p.m_count) * static_cast<double>(p.m_z_count) <
                        2147483647.0,
                "cm params: joint message counts must stay below 2^31");
}

}  // namespace

std::vector<std::string> validate_cm_params(const CmIdParams& params, const Bc2& bc) {
    check_cm_params(params);
    std::vector<std::string> flags;
    if (params.input_pmf.size() != bc.input_size()) {
        flags.push_back("input distribution size does not match the channel input alphabet");
        return flags;
    }
    const Dmc wy = bc.marginal_y();
    const Dmc wz = bc.marginal_z();
    const double iy = mutual_information(params.input_pmf, wy);
    const double iz = mutual_information(params.input_pmf, wz);
    std::ostringstream os;
    os.precision(12);
    const auto flag = [&flags, &os]() {
        flags.push_back(os.str());
        os.str("");
    };
    if (!(params.bin_rate_y < iy)) {
        os << "bin_rate_y " << params.bin_rate_y << " is not below I(P,W_y) = " << iy;
        flag();
    }
    if (!(params.bin_rate_z < iz)) {
        os << "bin_rate_z " << params.bin_rate_z << " is not below I(P,W_z) = " << iz;
        flag();
    }
    if (!(params.bin_rate_y < params.pool_rate)) {
        os << "bin_rate_y " << params.bin_rate_y << " is not below pool_rate "
           << params.pool_rate;
        flag();
    }
    if (!(params.bin_rate_z < params.pool_rate)) {
        os << "bin_rate_z " << params.bin_rate_z << " is not below pool_rate "
           << params.pool_rate;
        flag();
    }
    if (!(params.pool_rate < params.bin_rate_y + params.bin_rate_z)) {
        os << "pool_rate " << params.pool_rate
           << " is not below bin_rate_y + bin_rate_z = "
           << params.bin_rate_y + params.bin_rate_z;
        flag();
    }
    if (!check_eps(params.input_pmf, wy, params.bin_rate_y, params.eps)) {
        os << "typicality slack too large on side y: 2 * delta(eps) = "
           << 2.0 * typicality_delta(params.eps, params.input_pmf, wy)
           << " does not leave room under I(P,W_y) - bin_rate_y = "
           << iy - params.bin_rate_y;
        flag();
    }
    if (!check_eps(params.input_pmf, wz, params.bin_rate_z, params.eps)) {
        os << "typicality slack too large on side z: 2 * delta(eps) = "
           << 2.0 * typicality_delta(params.eps, params.input_pmf, wz)
           << " does not leave room under I(P,W_z) - bin_rate_z = "
           << iz - params.bin_rate_z;
        flag();
    }
    const auto emp_y = empirical_id_rate(params.n, params.m_count * params.m_y_count);
    if (emp_y && !(*emp_y < params.bin_rate_y)) {
        os << "empirical ID rate " << *emp_y
           << " of the joint (common, y) messages is not below bin_rate_y "
           << params.bin_rate_y;
        flag();
    }
    const auto emp_z = empirical_id_rate(params.n, params.m_count * params.m_z_count);
    if (emp_z && !(*emp_z < params.bin_rate_z)) {
        os << "empirical ID rate " << *emp_z
           << " of the joint (common, z) messages is not below bin_rate_z "
           << params.bin_rate_z;
        flag();
    }
    return flags;
}

CmIdCode build_cm_code(const CmIdParams& params, std::int64_t memory_budget_bytes) {
    check_cm_params(params);
    const std::int64_t pool_size =
        id_pool_size(pool_view(params.n, params.pool_rate, params.bin_rate_y,
                               params.input_pmf, params.eps, params.seed));
    const double p_sel_y =
        id_p_sel(pool_view(params.n, params.pool_rate, params.bin_rate_y,
                           params.input_pmf, params.eps, params.seed));
    const double p_sel_z =
        id_p_sel(pool_view(params.n, params.pool_rate, params.bin_rate_z,
                           params.input_pmf, params.eps, params.seed));

    const double joint_y = static_cast<double>(params.m_count * params.m_y_count);
    const double joint_z = static_cast<double>(params.m_count * params.m_z_count);
    const double pool_bytes =
        static_cast<double>(pool_size) * (static_cast<double>(params.n) + 16.0);
    const double bin_bytes =
        joint_y * (p_sel_y * static_cast<double>(pool_size) * 4.0 + 24.0) +
        joint_z * (p_sel_z * static_cast<double>(pool_size) * 4.0 + 24.0);
    if (pool_bytes + bin_bytes > static_cast<double>(memory_budget_bytes))
        throw BudgetError("code memory estimate exceeds the budget");

    CmIdCode code;
    code.params = params;
    code.pool = derive_pool(params.input_pmf, params.n, pool_size, params.seed);
    // Stream words (side, common message, private message): with one common
    // message this reproduces the two-receiver bins bit for bit.
    fill_bernoulli_bins(code.index_sets_y, params.m_count * params.m_y_count, pool_size,
                        p_sel_y, params.seed, 0, 0, params.m_y_count);
    fill_bernoulli_bins(code.index_sets_z, params.m_count * params.m_z_count, pool_size,
                        p_sel_z, params.seed, 1, 0, params.m_z_count);
    return code;
}

std::uint32_t codeword_index_cm(const CmIdCode& code, std::int64_t m, std::int64_t m_y,
                                std::int64_t m_z) {
    require_arg(m >= 0 && m < code.params.m_count, "codeword index: m out of range");
    require_arg(m_y >= 0 && m_y < code.params.m_y_count,
                "codeword index: m_y out of range");
    require_arg(m_z >= 0 && m_z < code.params.m_z_count,
                "codeword index: m_z out of range");
    Crng g = make_stream(code.params.seed, StreamTag::vsel,
                         {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(m_y),
                          static_cast<std::uint64_t>(m_z), 0});
    const auto& bin_y =
        code.index_sets_y[static_cast<std::size_t>(m * code.params.m_y_count + m_y)];
    const auto& bin_z =
        code.index_sets_z[static_cast<std::size_t>(m * code.params.m_z_count + m_z)];
    const auto inter = sorted_intersection(bin_y, bin_z);
    if (!inter.empty()) return inter[g.uniform_u64(inter.size())];
    return static_cast<std::uint32_t>(g.uniform_u64(code.pool.size()));
}

Sequence encode_cm(const CmIdCode& code, std::int64_t m, std::int64_t m_y,
                   std::int64_t m_z) {
    return code.pool[codeword_index_cm(code, m, m_y, m_z)];
}

bool decoder_accepts_cm(const CmIdCode& code, const Dmc& marginal, Side side,
                        std::int64_t m_prime, std::int64_t m_side_prime,
                        const Sequence& observed) {
    require_arg(m_prime >= 0 && m_prime < code.params.m_count,
                "decoder: common message out of range");
    const std::int64_t side_count =
        side == Side::y ? code.params.m_y_count : code.params.m_z_count;
    require_arg(m_side_prime >= 0 && m_side_prime < side_count,
                "decoder: private message out of range");
    const auto& sets = side == Side::y ? code.index_sets_y : code.index_sets_z;
    const auto& bin = sets[static_cast<std::size_t>(m_prime * side_count + m_side_prime)];
    for (const std::uint32_t v : bin)
        if (is_jointly_typical(code.pool[v], observed, code.params.input_pmf, marginal,
                               code.params.eps))
            return true;
    return false;
}

BcSideReports evaluate_cm(const CmIdCode& code, const Bc2& bc, const EvalOptions& opt,
                          std::int64_t other_cap) {
    require_arg(code.params.input_pmf.size() == bc.input_size(),
                "error report: input distribution does not match the channel");
    const auto side_eval = [&](Side side) {
        const std::int64_t side_count =
            side == Side::y ? code.params.m_y_count : code.params.m_z_count;
        detail::SideEvalSpec spec;
        spec.n = code.params.n;
        spec.eps = code.params.eps;
        spec.input_pmf = &code.params.input_pmf;
        spec.pool = &code.pool;
        spec.own_bins = side == Side::y ? &code.index_sets_y : &code.index_sets_z;
        spec.own_count = code.params.m_count * side_count;
        spec.other_count =
            side == Side::y ? code.params.m_z_count : code.params.m_y_count;
        spec.root = opt.seed != 0 ? opt.seed : code.params.seed;
        spec.side_word = static_cast<std::uint64_t>(side);
        // own is the flattened joint message; the common part is shared with
        // the other side's private draw.
        spec.pair_index = [&code, side, side_count](std::int64_t own, std::int64_t other) {
            const std::int64_t m = own / side_count;
            const std::int64_t m_own = own % side_count;
            return side == Side::y ? codeword_index_cm(code, m, m_own, other)
                                   : codeword_index_cm(code, m, other, m_own);
        };
        const Dmc marginal = side == Side::y ? bc.marginal_y() : bc.marginal_z();
        return detail::deterministic_side_report(spec, marginal, opt, other_cap, false);
    };
    BcSideReports out;
    out.y = side_eval(Side::y);
    out.z = side_eval(Side::z);
    return out;
}

// ---- transmission subcode ----

TransmissionCode build_transmission_code(const Dmc& w, int k, double rate,
                                         std::uint64_t seed, double eps_tc,
                                         std::uint64_t trials) {
    require_arg(k >= 1, "transmission code: blocklength must be at least 1");
    require_arg(std::isfinite(rate) && rate >= 0.0,
                "transmission code: rate must be finite and nonnegative");
    require_arg(std::isfinite(eps_tc) && eps_tc >= 0.0,
                "transmission code: slack must be finite and nonnegative");
    const CapacityResult cap = capacity(w);
    require_arg(rate < cap.value,
                "transmission code: rate must stay below the channel's information maximum");
    const double count = std::exp(static_cast<double>(k) * rate);
    if (count >= 4.0e18) throw BudgetError("transmission code: message count overflows");

    TransmissionCode code;
    code.k = k;
    code.u_count = std::max<std::int64_t>(1, std::llround(count));
    code.input_pmf = cap.maximizer;
    code.eps_tc = eps_tc;
    code.codebook.reserve(static_cast<std::size_t>(code.u_count));
    for (std::int64_t u = 0; u < code.u_count; ++u) {
        Crng g = make_stream(seed, StreamTag::tcode, {static_cast<std::uint64_t>(u)});
        code.codebook.push_back(sample_iid(code.input_pmf, k, g));
    }

    if (trials > 0) {
        for (std::int64_t u = 0; u < code.u_count; ++u) {
            Crng g = make_stream(seed, StreamTag::tcode,
                                 {1, static_cast<std::uint64_t>(u)});
            std::uint64_t errors = 0;
            for (std::uint64_t t = 0; t < trials; ++t) {
                const Sequence y =
                    sample_output(w, code.codebook[static_cast<std::size_t>(u)], g);
                if (transmission_decode(code, w, y) != u) ++errors;
            }
            const double rate_u =
                static_cast<double>(errors) / static_cast<double>(trials);
            if (rate_u >= code.eps_k) {
                code.eps_k = rate_u;
                code.eps_k_halfwidth = detail::wilson_halfwidth(errors, trials, 1.96);
            }
        }
    }
    return code;
}

std::int64_t transmission_decode(const TransmissionCode& code, const Dmc& w,
                                 const Sequence& y) {
    require_arg(y.n() == code.k, "transmission decode: wrong blocklength");
    std::int64_t found = -1;
    for (std::int64_t u = 0; u < code.u_count; ++u) {
        if (is_jointly_typical(code.codebook[static_cast<std::size_t>(u)], y,
                               code.input_pmf, w, code.eps_tc)) {
            if (found >= 0) return 0;  // ambiguous decodes count as failures
            found = u;
        }
    }
    return found >= 0 ? found : 0;
}

// ---- one-sided feedback ----

namespace {

void check_fb_params(const FbIdParams& p) {
    require_arg(p.n >= 1, "fb params: n must be at least 1");
    require_arg(p.m_y_count >= 1 && p.m_z_count >= 1,
                "fb params: message counts must be at least 1");
    require_arg(std::isfinite(p.pool_rate) && std::isfinite(p.bin_rate_z) &&
                    std::isfinite(p.rate_y_hat) && p.rate_y_hat >= 0.0,
                "fb params: rates must be finite, the transmission rate nonnegative");
    require_arg(std::isfinite(p.eps) && p.eps >= 0.0,
                "fb params: eps must be finite and nonnegative");
    require_arg(std::isfinite(p.eps_tc) && p.eps_tc >= 0.0,
                "fb params: eps_tc must be finite and nonnegative");
}

std::uint64_t fold_sequence(const Sequence& s) {
    std::uint64_t h = 0;
    for (const std::uint8_t b : s.sym) h = key_combine(h, b);
    return h;
}

// Uniform slot draw from the cached bin, falling back to the fixed index.
const Sequence& draw_bin_sequence(const FbIdCode& code, std::int64_t m_z, Crng& g,
                                  std::uint64_t* v_out) {
    const auto& bin = code.bin_sequences[static_cast<std::size_t>(m_z)];
    if (bin.empty()) {
        if (v_out) *v_out = code.v_star;
        return code.v_star_sequence;
    }
    const std::uint64_t s = g.uniform_u64(bin.size());
    if (v_out) *v_out = code.index_sets_z[static_cast<std::size_t>(m_z)][s];
    return bin[s];
}

Sequence concat(const Sequence& head, const Sequence& tail) {
    Sequence out;
    out.sym.reserve(head.sym.size() + tail.sym.size());
    out.sym.insert(out.sym.end(), head.sym.begin(), head.sym.end());
    out.sym.insert(out.sym.end(), tail.sym.begin(), tail.sym.end());
    return out;
}

Sequence head_of(const Sequence& s, int n) {
    Sequence out;
    out.sym.assign(s.sym.begin(), s.sym.begin() + n);
    return out;
}

Sequence tail_of(const Sequence& s, int n) {
    Sequence out;
    out.sym.assign(s.sym.begin() + n, s.sym.end());
    return out;
}

}  // namespace

std::vector<std::string> validate_fb_params(const FbIdParams& params, const Bc2& bc) {
    check_fb_params(params);
    std::vector<std::string> flags;
    if (params.input_pmf.size() != bc.input_size()) {
        flags.push_back("input distribution size does not match the channel input alphabet");
        return flags;
    }
    const Dmc wy = bc.marginal_y();
    const Dmc wz = bc.marginal_z();
    const double iy = mutual_information(params.input_pmf, wy);
    const double iz = mutual_information(params.input_pmf, wz);
    const double cap_y = capacity(wy).value;
    std::ostringstream os;
    os.precision(12);
    const auto flag = [&flags, &os]() {
        flags.push_back(os.str());
        os.str("");
    };
    if (!(iy < params.pool_rate)) {
        os << "pool_rate " << params.pool_rate << " is not above I(P,W_y) = " << iy
           << "; the pool cannot saturate the y output law";
        flag();
    }
    if (!(params.rate_y_hat > 0.0)) {
        os << "transmission rate " << params.rate_y_hat << " is not positive";
        flag();
    }
    if (!(params.rate_y_hat < cap_y)) {
        os << "transmission rate " << params.rate_y_hat
           << " is not below the y information maximum " << cap_y;
        flag();
    }
    if (!(params.bin_rate_z < iz)) {
        os << "bin_rate_z " << params.bin_rate_z << " is not below I(P,W_z) = " << iz;
        flag();
    }
    if (!(params.bin_rate_z < params.pool_rate)) {
        os << "bin_rate_z " << params.bin_rate_z << " is not below pool_rate "
           << params.pool_rate;
        flag();
    }
    if (!check_eps(params.input_pmf, wz, params.bin_rate_z, params.eps)) {
        os << "typicality slack too large on side z: 2 * delta(eps) = "
           << 2.0 * typicality_delta(params.eps, params.input_pmf, wz)
           << " does not leave room under I(P,W_z) - bin_rate_z = "
           << iz - params.bin_rate_z;
        flag();
    }
    const auto emp_z = empirical_id_rate(params.n, params.m_z_count);
    if (emp_z && !(*emp_z < params.bin_rate_z)) {
        os << "empirical ID rate " << *emp_z << " on side z is not below bin_rate_z "
           << params.bin_rate_z;
        flag();
    }
    return flags;
}

FbIdCode build_fb_code(const FbIdParams& params, const Bc2& bc,
                       std::int64_t memory_budget_bytes) {
    check_fb_params(params);
    require_arg(params.input_pmf.size() == bc.input_size(),
                "fb params: input distribution does not match the channel");
    const IdParams view = pool_view(params.n, params.pool_rate, params.bin_rate_z,
                                    params.input_pmf, params.eps, params.seed);
    const std::int64_t pool_size = id_pool_size(view);
    const double p_sel_z = id_p_sel(view);

    const double expected_bin = p_sel_z * static_cast<double>(pool_size);
    const double bin_bytes =
        static_cast<double>(params.m_z_count) *
        (expected_bin * (8.0 + static_cast<double>(params.n) + 24.0) + 48.0);
    if (bin_bytes > static_cast<double>(memory_budget_bytes))
        throw BudgetError("index sets and cached bin codewords exceed the budget");
    const double pool_bytes =
        static_cast<double>(pool_size) * (static_cast<double>(params.n) + 16.0);

    FbIdCode code;
    code.params = params;
    code.pool_size = pool_size;
    code.pool_materialized =
        pool_bytes + bin_bytes <= static_cast<double>(memory_budget_bytes);
    if (code.pool_materialized)
        code.pool = derive_pool(params.input_pmf, params.n, pool_size, params.seed);

    code.index_sets_z.resize(static_cast<std::size_t>(params.m_z_count));
    const std::int64_t scan_cap = std::int64_t{1} << 22;
    for (std::int64_t m = 0; m < params.m_z_count; ++m) {
        auto& bin = code.index_sets_z[static_cast<std::size_t>(m)];
        Crng g = make_stream(params.seed, StreamTag::bin,
                             {0, 0, static_cast<std::uint64_t>(m)});
        if (p_sel_z >= 1.0) {
            bin.resize(static_cast<std::size_t>(pool_size));
            std::iota(bin.begin(), bin.end(), std::uint64_t{0});
        } else if (pool_size <= scan_cap) {
            // Same scan as the single-user builder, so a materialized pool
            // yields the identical code.
            for (std::int64_t v = 0; v < pool_size; ++v)
                if (g.bernoulli(p_sel_z)) bin.push_back(static_cast<std::uint64_t>(v));
        } else {
            // Pools too large to scan: the bin size is drawn from the
            // matching Poisson law and the members are distinct uniform
            // indices. Statistically interchangeable, not bit-identical.
            std::int64_t count = g.poisson(expected_bin);
            count = std::min(count, pool_size);
            std::unordered_set<std::uint64_t> seen;
            while (static_cast<std::int64_t>(seen.size()) < count)
                seen.insert(g.uniform_u64(static_cast<std::uint64_t>(pool_size)));
            bin.assign(seen.begin(), seen.end());
            std::sort(bin.begin(), bin.end());
        }
    }

    code.bin_sequences.resize(static_cast<std::size_t>(params.m_z_count));
    for (std::int64_t m = 0; m < params.m_z_count; ++m) {
        const auto& bin = code.index_sets_z[static_cast<std::size_t>(m)];
        auto& seqs = code.bin_sequences[static_cast<std::size_t>(m)];
        seqs.reserve(bin.size());
        for (const std::uint64_t v : bin) {
            if (code.pool_materialized) {
                seqs.push_back(code.pool[static_cast<std::size_t>(v)]);
            } else {
                Crng g = make_stream(params.seed, StreamTag::pool, {v});
                seqs.push_back(sample_iid(params.input_pmf, params.n, g));
            }
        }
    }

    code.v_star = 0;
    {
        Crng g = make_stream(params.seed, StreamTag::pool, {0});
        code.v_star_sequence = sample_iid(params.input_pmf, params.n, g);
    }
    code.k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(params.n))));
    code.tcode = build_transmission_code(bc.marginal_y(), code.k, params.rate_y_hat,
                                         params.seed, params.eps_tc);
    return code;
}

Sequence fb_pool_element(const FbIdCode& code, std::uint64_t v) {
    require_arg(v < static_cast<std::uint64_t>(code.pool_size),
                "pool element: index out of range");
    if (code.pool_materialized) return code.pool[static_cast<std::size_t>(v)];
    Crng g = make_stream(code.params.seed, StreamTag::pool, {v});
    return sample_iid(code.params.input_pmf, code.params.n, g);
}

std::int64_t fb_phi(const FbIdCode& code, const Sequence& y_head, std::int64_t m_y) {
    require_arg(y_head.n() == code.params.n, "phi: observation has the wrong length");
    require_arg(m_y >= 0 && m_y < code.params.m_y_count, "phi: message out of range");
    Crng g = make_stream(code.params.seed, StreamTag::phi,
                         {static_cast<std::uint64_t>(m_y), fold_sequence(y_head)});
    return static_cast<std::int64_t>(
        g.uniform_u64(static_cast<std::uint64_t>(code.tcode.u_count)));
}

FbTranscript encode_fb(const FbIdCode& code, std::int64_t m_y, std::int64_t m_z,
                       Crng& g, const Bc2& bc) {
    require_arg(m_y >= 0 && m_y < code.params.m_y_count, "encode: m_y out of range");
    require_arg(m_z >= 0 && m_z < code.params.m_z_count, "encode: m_z out of range");
    require_arg(code.params.input_pmf.size() == bc.input_size(),
                "encode: input distribution does not match the channel");
    FbTranscript t;
    const Sequence& x_head = draw_bin_sequence(code, m_z, g, &t.v);
    const auto head_out = bc.sample_outputs(x_head, g);
    t.u = fb_phi(code, head_out.first, m_y);
    const Sequence& x_tail = code.tcode.codebook[static_cast<std::size_t>(t.u)];
    const auto tail_out = bc.sample_outputs(x_tail, g);
    t.x = concat(x_head, x_tail);
    t.y = concat(head_out.first, tail_out.first);
    t.z = concat(head_out.second, tail_out.second);
    return t;
}

bool fb_decoder_accepts_y(const FbIdCode& code, const Dmc& w_y, std::int64_t m_prime,
                          const Sequence& observed) {
    require_arg(observed.n() == code.params.n + code.k,
                "y decoder: observation has the wrong length");
    const Sequence head = head_of(observed, code.params.n);
    const Sequence tail = tail_of(observed, code.params.n);
    const std::int64_t decoded = transmission_decode(code.tcode, w_y, tail);
    return decoded == fb_phi(code, head, m_prime);
}

bool fb_decoder_accepts_z(const FbIdCode& code, const Dmc& w_z, std::int64_t m_prime,
                          const Sequence& observed) {
    require_arg(m_prime >= 0 && m_prime < code.params.m_z_count,
                "z decoder: message out of range");
    require_arg(observed.n() >= code.params.n,
                "z decoder: observation shorter than the first phase");
    const Sequence head = head_of(observed, code.params.n);
    for (const Sequence& x : code.bin_sequences[static_cast<std::size_t>(m_prime)])
        if (is_jointly_typical(x, head, code.params.input_pmf, w_z, code.params.eps))
            return true;
    return false;
}

namespace {

// z side of the feedback code when the pool is materialized: the first phase
// is exactly the single-user code with the same seed, so the report is
// delegated and matches it bit for bit.
ErrorReport fb_z_report_via_view(const FbIdCode& code, const Dmc& wz,
                                 const EvalOptions& opt) {
    IdCodeDmc view;
    view.params.n = code.params.n;
    view.params.m_count = code.params.m_z_count;
    view.params.pool_rate = code.params.pool_rate;
    view.params.bin_rate = code.params.bin_rate_z;
    view.params.input_pmf = code.params.input_pmf;
    view.params.eps = code.params.eps;
    view.params.seed = code.params.seed;
    view.pool = code.pool;
    view.index_sets.reserve(code.index_sets_z.size());
    for (const auto& bin : code.index_sets_z) {
        std::vector<std::uint32_t> b32;
        b32.reserve(bin.size());
        for (const std::uint64_t v : bin) b32.push_back(static_cast<std::uint32_t>(v));
        view.index_sets.push_back(std::move(b32));
    }
    view.v_star = static_cast<std::uint32_t>(code.v_star);
    return error_report_dmc(view, wz, opt);
}

ErrorReport fb_z_report_mc(const FbIdCode& code, const Dmc& wz, const EvalOptions& opt,
                           std::uint64_t root) {
    const std::int64_t m_count = code.params.m_z_count;
    ErrorReport rep;
    rep.method = "monte-carlo(" + std::to_string(opt.trials) + ")";
    rep.trials = opt.trials;
    rep.caveat = "pool held lazy; z side sampled";
    rep.empirical_rate = empirical_id_rate(code.params.n, m_count);
    rep.missed.assign(static_cast<std::size_t>(m_count), 0.0);
    rep.missed_halfwidth.assign(static_cast<std::size_t>(m_count), 0.0);

    const auto pairs = detail::choose_ordered_pairs(m_count, opt, root, rep.pair_sampled);
    std::vector<std::vector<std::size_t>> pairs_by_source(
        static_cast<std::size_t>(m_count));
    for (std::size_t i = 0; i < pairs.size(); ++i)
        pairs_by_source[static_cast<std::size_t>(pairs[i].first)].push_back(i);
    std::vector<std::uint64_t> pair_hits(pairs.size(), 0);

    const auto accepts = [&](std::int64_t m_prime, const Sequence& z) {
        for (const Sequence& x : code.bin_sequences[static_cast<std::size_t>(m_prime)])
            if (is_jointly_typical(x, z, code.params.input_pmf, wz, code.params.eps))
                return true;
        return false;
    };

    for (std::int64_t m = 0; m < m_count; ++m) {
        Crng g = make_stream(root, StreamTag::trial, {1, static_cast<std::uint64_t>(m)});
        std::uint64_t miss = 0;
        for (std::uint64_t t = 0; t < opt.trials; ++t) {
            const Sequence& x = draw_bin_sequence(code, m, g, nullptr);
            const Sequence z = sample_output(wz, x, g);
            if (!accepts(m, z)) ++miss;
            for (const std::size_t i : pairs_by_source[static_cast<std::size_t>(m)])
                if (accepts(pairs[i].second, z)) ++pair_hits[i];
        }
        rep.missed[static_cast<std::size_t>(m)] =
            static_cast<double>(miss) / static_cast<double>(opt.trials);
        rep.missed_halfwidth[static_cast<std::size_t>(m)] =
            detail::wilson_halfwidth(miss, opt.trials, opt.z);
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        PairEntry e;
        e.m = pairs[i].first;
        e.m_prime = pairs[i].second;
        e.value = static_cast<double>(pair_hits[i]) / static_cast<double>(opt.trials);
        e.halfwidth = detail::wilson_halfwidth(pair_hits[i], opt.trials, opt.z);
        rep.wrong.push_back(e);
    }
    for (const double v : rep.missed) rep.max_missed = std::max(rep.max_missed, v);
    for (const PairEntry& e : rep.wrong) rep.max_wrong = std::max(rep.max_wrong, e.value);
    return rep;
}

// Exact y side: the decoder sees only the keyed map of the head observation
// and the decoded tail, so acceptance probabilities factor through
// T[u][u'] = P(tail decodes to u' | codeword u sent) and the head output law.
ErrorReport fb_y_report_exact(const FbIdCode& code, const Dmc& wy,
                              const EvalOptions& opt, std::uint64_t root) {
    const std::int64_t m_count = code.params.m_y_count;
    const std::int64_t u_count = code.tcode.u_count;
    const int n = code.params.n;
    const int k = code.k;
    const int ny = wy.output_size();

    // T by enumeration of the tail output space.
    std::vector<std::vector<double>> t_mat(
        static_cast<std::size_t>(u_count),
        std::vector<double>(static_cast<std::size_t>(u_count), 0.0));
    {
        Sequence y;
        y.sym.assign(static_cast<std::size_t>(k), 0);
        while (true) {
            const std::int64_t dec = transmission_decode(code.tcode, wy, y);
            for (std::int64_t u = 0; u < u_count; ++u)
                t_mat[static_cast<std::size_t>(u)][static_cast<std::size_t>(dec)] +=
                    nfold_prob(wy, code.tcode.codebook[static_cast<std::size_t>(u)], y);
            int pos = k - 1;
            while (pos >= 0 && y.sym[static_cast<std::size_t>(pos)] ==
                                   static_cast<std::uint8_t>(ny - 1)) {
                y.sym[static_cast<std::size_t>(pos)] = 0;
                --pos;
            }
            if (pos < 0) break;
            ++y.sym[static_cast<std::size_t>(pos)];
        }
    }

    // Head input mixture induced by a uniform z message and a uniform draw
    // from its bin; the y decoder never resolves the pool index, so only the
    // mixture output law matters.
    std::vector<detail::Atom> atoms;
    {
        std::vector<std::pair<std::uint64_t, double>> weights;
        const double per_message = 1.0 / static_cast<double>(code.params.m_z_count);
        for (std::int64_t m = 0; m < code.params.m_z_count; ++m) {
            const auto& bin = code.index_sets_z[static_cast<std::size_t>(m)];
            if (bin.empty()) {
                weights.emplace_back(code.v_star, per_message);
                continue;
            }
            const double per_slot = per_message / static_cast<double>(bin.size());
            for (const std::uint64_t v : bin) weights.emplace_back(v, per_slot);
        }
        std::sort(weights.begin(), weights.end());
        for (const auto& [v, wgt] : weights) {
            if (!atoms.empty() && atoms.back().v == v) atoms.back().weight += wgt;
            else atoms.push_back({v, wgt});
        }
    }
    std::vector<Sequence> atom_seqs;
    atom_seqs.reserve(atoms.size());
    for (const auto& a : atoms) atom_seqs.push_back(fb_pool_element(code, a.v));

    ErrorReport rep;
    rep.method = "exact";
    rep.empirical_rate = empirical_id_rate(n, m_count);
    rep.missed.assign(static_cast<std::size_t>(m_count), 0.0);
    rep.missed_halfwidth.assign(static_cast<std::size_t>(m_count), 0.0);
    const auto pairs = detail::choose_ordered_pairs(m_count, opt, root, rep.pair_sampled);

    std::vector<double> acc_own(static_cast<std::size_t>(m_count), 0.0);
    std::vector<double> acc_pair(pairs.size(), 0.0);
    std::vector<std::int64_t> keys(static_cast<std::size_t>(m_count), 0);

    Sequence y;
    y.sym.assign(static_cast<std::size_t>(n), 0);
    while (true) {
        double py = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            py += atoms[i].weight * nfold_prob(wy, atom_seqs[i], y);
        if (py > 0.0) {
            for (std::int64_t m = 0; m < m_count; ++m)
                keys[static_cast<std::size_t>(m)] = fb_phi(code, y, m);
            for (std::int64_t m = 0; m < m_count; ++m) {
                const auto u = static_cast<std::size_t>(keys[static_cast<std::size_t>(m)]);
                acc_own[static_cast<std::size_t>(m)] += py * t_mat[u][u];
            }
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                const auto u = static_cast<std::size_t>(
                    keys[static_cast<std::size_t>(pairs[i].first)]);
                const auto up = static_cast<std::size_t>(
                    keys[static_cast<std::size_t>(pairs[i].second)]);
                acc_pair[i] += py * t_mat[u][up];
            }
        }
        int pos = n - 1;
        while (pos >= 0 &&
               y.sym[static_cast<std::size_t>(pos)] == static_cast<std::uint8_t>(ny - 1)) {
            y.sym[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++y.sym[static_cast<std::size_t>(pos)];
    }

    for (std::int64_t m = 0; m < m_count; ++m)
        rep.missed[static_cast<std::size_t>(m)] =
            detail::clamp01(1.0 - acc_own[static_cast<std::size_t>(m)]);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        PairEntry e;
        e.m = pairs[i].first;
        e.m_prime = pairs[i].second;
        e.value = detail::clamp01(acc_pair[i]);
        rep.wrong.push_back(e);
    }
    for (const double v : rep.missed) rep.max_missed = std::max(rep.max_missed, v);
    for (const PairEntry& e : rep.wrong) rep.max_wrong = std::max(rep.max_wrong, e.value);
    return rep;
}

ErrorReport fb_y_report_mc(const FbIdCode& code, const Dmc& wy, const EvalOptions& opt,
                           std::uint64_t root) {
    const std::int64_t m_count = code.params.m_y_count;
    ErrorReport rep;
    rep.method = "monte-carlo(" + std::to_string(opt.trials) + ")";
    rep.trials = opt.trials;
    rep.empirical_rate = empirical_id_rate(code.params.n, m_count);
    rep.missed.assign(static_cast<std::size_t>(m_count), 0.0);
    rep.missed_halfwidth.assign(static_cast<std::size_t>(m_count), 0.0);

    const auto pairs = detail::choose_ordered_pairs(m_count, opt, root, rep.pair_sampled);
    std::vector<std::vector<std::size_t>> pairs_by_source(
        static_cast<std::size_t>(m_count));
    for (std::size_t i = 0; i < pairs.size(); ++i)
        pairs_by_source[static_cast<std::size_t>(pairs[i].first)].push_back(i);
    std::vector<std::uint64_t> pair_hits(pairs.size(), 0);

    for (std::int64_t m = 0; m < m_count; ++m) {
        Crng g = make_stream(root, StreamTag::trial, {0, static_cast<std::uint64_t>(m)});
        std::uint64_t miss = 0;
        for (std::uint64_t t = 0; t < opt.trials; ++t) {
            const std::int64_t j = static_cast<std::int64_t>(
                g.uniform_u64(static_cast<std::uint64_t>(code.params.m_z_count)));
            const Sequence& x_head = draw_bin_sequence(code, j, g, nullptr);
            const Sequence y_head = sample_output(wy, x_head, g);
            const std::int64_t u = fb_phi(code, y_head, m);
            const Sequence y_tail = sample_output(
                wy, code.tcode.codebook[static_cast<std::size_t>(u)], g);
            const std::int64_t dec = transmission_decode(code.tcode, wy, y_tail);
            if (dec != u) ++miss;
            for (const std::size_t i : pairs_by_source[static_cast<std::size_t>(m)])
                if (dec == fb_phi(code, y_head, pairs[i].second)) ++pair_hits[i];
        }
        rep.missed[static_cast<std::size_t>(m)] =
            static_cast<double>(miss) / static_cast<double>(opt.trials);
        rep.missed_halfwidth[static_cast<std::size_t>(m)] =
            detail::wilson_halfwidth(miss, opt.trials, opt.z);
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        PairEntry e;
        e.m = pairs[i].first;
        e.m_prime = pairs[i].second;
        e.value = static_cast<double>(pair_hits[i]) / static_cast<double>(opt.trials);
        e.halfwidth = detail::wilson_halfwidth(pair_hits[i], opt.trials, opt.z);
        rep.wrong.push_back(e);
    }
    for (const double v : rep.missed) rep.max_missed = std::max(rep.max_missed, v);
    for (const PairEntry& e : rep.wrong) rep.max_wrong = std::max(rep.max_wrong, e.value);
    return rep;
}

}  // namespace

BcSideReports evaluate_fb(const FbIdCode& code, const Bc2& bc, const EvalOptions& opt,
                          std::int64_t other_cap) {
    (void)other_cap;  // the z average over bins is exact; nothing to cap
    require_arg(code.params.input_pmf.size() == bc.input_size(),
                "error report: input distribution does not match the channel");
    const Dmc wy = bc.marginal_y();
    const Dmc wz = bc.marginal_z();
    const std::uint64_t root = opt.seed != 0 ? opt.seed : code.params.seed;

    BcSideReports out;
    const bool y_exact =
        opt.mode == EvalMode::exact && code.pool_materialized &&
        detail::output_space_size(wy.output_size(), code.params.n, opt.state_budget) <=
            opt.state_budget &&
        detail::output_space_size(wy.output_size(), code.k, opt.state_budget) <=
            opt.state_budget;
    out.y = y_exact ? fb_y_report_exact(code, wy, opt, root)
                    : fb_y_report_mc(code, wy, opt, root);
    if (!y_exact && opt.mode == EvalMode::exact)
        out.y.caveat = "exact y evaluation infeasible at these sizes; Monte Carlo used";

    if (code.pool_materialized) {
        out.z = fb_z_report_via_view(code, wz, opt);
    } else {
        out.z = fb_z_report_mc(code, wz, opt, root);
    }
    return out;
}

FbIndexDiag fb_index_distribution(const FbIdCode& code, std::int64_t m_z) {
    require_arg(m_z >= 0 && m_z < code.params.m_z_count,
                "index diagnostic: message out of range");
    FbIndexDiag diag;
    const auto& bin = code.index_sets_z[static_cast<std::size_t>(m_z)];
    if (bin.empty()) {
        diag.support.push_back(code.v_star);
        diag.p_v.push_back(1.0);
        diag.p_ref.push_back(1.0);
    } else {
        const double u = 1.0 / static_cast<double>(bin.size());
        for (const std::uint64_t v : bin) {
            diag.support.push_back(v);
            diag.p_v.push_back(u);
            diag.p_ref.push_back(u);
        }
    }
    double tv = 0.0;
    for (std::size_t i = 0; i < diag.support.size(); ++i)
        tv += std::fabs(diag.p_v[i] - diag.p_ref[i]);
    diag.tv = tv / 2.0;
    return diag;
}

double pool_output_tv(const FbIdCode& code, const Dmc& w_y, std::int64_t state_budget) {
    if (!code.pool_materialized)
        throw BudgetError("output-law probe needs a materialized pool");
    const int n = code.params.n;
    const int ny = w_y.output_size();
    if (detail::output_space_size(ny, n, state_budget) > state_budget)
        throw BudgetError("output-law probe exceeds the state budget");
    require_arg(code.params.input_pmf.size() == w_y.input_size(),
                "output-law probe: input distribution does not match the channel");

    std::vector<double> q(static_cast<std::size_t>(ny), 0.0);
    for (int a = 0; a < code.params.input_pmf.size(); ++a)
        for (int b = 0; b < ny; ++b)
            q[static_cast<std::size_t>(b)] += code.params.input_pmf.at(a) * w_y.at(a, b);

    const double inv_pool = 1.0 / static_cast<double>(code.pool.size());
    double tv = 0.0;
    Sequence y;
    y.sym.assign(static_cast<std::size_t>(n), 0);
    while (true) {
        double mix = 0.0;
        for (const Sequence& x : code.pool) mix += nfold_prob(w_y, x, y);
        mix *= inv_pool;
        double iid = 1.0;
        for (const std::uint8_t b : y.sym) iid *= q[b];
        tv += std::fabs(mix - iid);
        int pos = n - 1;
        while (pos >= 0 &&
               y.sym[static_cast<std::size_t>(pos)] == static_cast<std::uint8_t>(ny - 1)) {
            y.sym[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++y.sym[static_cast<std::size_t>(pos)];
    }
    return tv / 2.0;
}

// ---- causal-encoder type concentration ----

ConcentrationReport fb_type_concentration_check(const CausalEncoder& encoder,
                                                const Dmc& w, int n, double nu,
                                                std::uint64_t trials,
                                                std::uint64_t seed) {
    require_arg(static_cast<bool>(encoder), "concentration check: encoder is empty");
    require_arg(n >= 1, "concentration check: n must be at least 1");
    require_arg(std::isfinite(nu) && nu > 0.0,
                "concentration check: nu must be positive");
    require_arg(trials >= 1, "concentration check: trials must be at least 1");

    const int nx = w.input_size();
    const int ny = w.output_size();
    ConcentrationReport rep;
    rep.trials = trials;
    rep.bound = std::min(
        1.0, static_cast<double>(nx) * static_cast<double>(ny) /
                 (static_cast<double>(n) * nu * nu));
    rep.slack = 3.0 * std::sqrt(0.25 / static_cast<double>(trials));

    std::uint64_t deviated = 0;
    std::vector<std::int64_t> joint(static_cast<std::size_t>(nx * ny), 0);
    for (std::uint64_t t = 0; t < trials; ++t) {
        Crng g = make_stream(seed, StreamTag::trial, {t});
        Sequence x, y;
        x.sym.reserve(static_cast<std::size_t>(n));
        y.sym.reserve(static_cast<std::size_t>(n));
        std::fill(joint.begin(), joint.end(), 0);
        for (int i = 0; i < n; ++i) {
            const Pmf q = encoder(x, y);
            require_arg(q.size() == nx,
                        "concentration check: encoder law has the wrong size");
            const int a = g.sample_cdf(q.cdf());
            const int b = sample_symbol(w, a, g);
            x.sym.push_back(static_cast<std::uint8_t>(a));
            y.sym.push_back(static_cast<std::uint8_t>(b));
            ++joint[static_cast<std::size_t>(a * ny + b)];
        }
        std::vector<std::int64_t> nx_counts(static_cast<std::size_t>(nx), 0);
        for (int a = 0; a < nx; ++a)
            for (int b = 0; b < ny; ++b)
                nx_counts[static_cast<std::size_t>(a)] +=
                    joint[static_cast<std::size_t>(a * ny + b)];
        bool dev = false;
        for (int a = 0; a < nx && !dev; ++a) {
            for (int b = 0; b < ny; ++b) {
                const double wv = w.at(a, b);
                if (wv <= 0.0) continue;  // empty cells cannot deviate
                const double lhs = std::fabs(
                    static_cast<double>(joint[static_cast<std::size_t>(a * ny + b)]) /
                        static_cast<double>(n) -
                    static_cast<double>(nx_counts[static_cast<std::size_t>(a)]) /
                        static_cast<double>(n) * wv);
                if (lhs >= std::sqrt(wv) * nu) {
                    dev = true;
                    break;
                }
            }
        }
        if (dev) ++deviated;
    }
    rep.frequency = static_cast<double>(deviated) / static_cast<double>(trials);
    rep.pass = rep.frequency <= rep.bound + rep.slack;
    return rep;
}

}  // namespace idbc
