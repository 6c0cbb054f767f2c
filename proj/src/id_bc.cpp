#include "idbc/id_bc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "idbc/errors.hpp"
#include "idbc/info.hpp"
#include "idbc/typeskit.hpp"
#include "container_common.hpp"
#include "exact_eval.hpp"
#include "report_common.hpp"

namespace idbc {

namespace {

void require_arg(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void check_params(const BcIdParams& p) {
    require_arg(p.n >= 1, "bc params: n must be at least 1");
    require_arg(p.m_y_count >= 1 && p.m_z_count >= 1,
                "bc params: message counts must be at least 1");
    require_arg(std::isfinite(p.pool_rate) && std::isfinite(p.bin_rate_y) &&
                    std::isfinite(p.bin_rate_z),
                "bc params: rates must be finite");
    require_arg(std::isfinite(p.eps) && p.eps >= 0.0,
                "bc params: eps must be finite and nonnegative");
}

IdParams single_user_view(const BcIdParams& p, double bin_rate) {
    IdParams q;
    q.n = p.n;
    q.m_count = 1;
    q.pool_rate = p.pool_rate;
    q.bin_rate = bin_rate;
    q.input_pmf = p.input_pmf;
    q.eps = p.eps;
    q.seed = p.seed;
    return q;
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

struct SideView {
    Side side;
    std::int64_t own_count = 0;
    std::int64_t other_count = 0;
    const std::vector<std::vector<std::uint32_t>>* own_bins = nullptr;
};

SideView side_view(const BcIdCode& code, Side side) {
    SideView v;
    v.side = side;
    if (side == Side::y) {
        v.own_count = code.params.m_y_count;
        v.other_count = code.params.m_z_count;
        v.own_bins = &code.index_sets_y;
    } else {
        v.own_count = code.params.m_z_count;
        v.other_count = code.params.m_y_count;
        v.own_bins = &code.index_sets_z;
    }
    return v;
}

std::uint32_t pair_index(const BcIdCode& code, Side side, std::int64_t own,
                         std::int64_t other) {
    return side == Side::y ? codeword_index(code, own, other)
                           : codeword_index(code, other, own);
}

// One side, one mode, through the shared deterministic-encoder evaluator.
ErrorReport side_report(const BcIdCode& code, const Dmc& marginal, Side side,
                        const EvalOptions& opt, std::int64_t other_cap,
                        bool max_mode) {
    const SideView view = side_view(code, side);
    detail::SideEvalSpec spec;
    spec.n = code.params.n;
    spec.eps = code.params.eps;
    spec.input_pmf = &code.params.input_pmf;
    spec.pool = &code.pool;
    spec.own_bins = view.own_bins;
    spec.own_count = view.own_count;
    spec.other_count = view.other_count;
    spec.root = opt.seed != 0 ? opt.seed : code.params.seed;
    spec.side_word = static_cast<std::uint64_t>(side);
    spec.pair_index = [&code, side](std::int64_t own, std::int64_t other) {
        return pair_index(code, side, own, other);
    };
    return detail::deterministic_side_report(spec, marginal, opt, other_cap, max_mode);
}

}  // namespace

std::vector<std::string> validate_bc_params(const BcIdParams& params, const Bc2& bc) {
    check_params(params);
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
        os << "pool_rate " << params.pool_rate << " is not below bin_rate_y + bin_rate_z = "
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
    const auto emp_y = empirical_id_rate(params.n, params.m_y_count);
    if (emp_y && !(*emp_y < params.bin_rate_y)) {
        os << "empirical ID rate " << *emp_y << " on side y is not below bin_rate_y "
           << params.bin_rate_y;
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

BcIdCode build_bc_code(const BcIdParams& params, std::int64_t memory_budget_bytes) {
    check_params(params);
    const IdParams view_y = single_user_view(params, params.bin_rate_y);
    const IdParams view_z = single_user_view(params, params.bin_rate_z);
    const std::int64_t pool_size = id_pool_size(view_y);
    const double p_sel_y = id_p_sel(view_y);
    const double p_sel_z = id_p_sel(view_z);

    const double pool_bytes =
        static_cast<double>(pool_size) * (static_cast<double>(params.n) + 16.0);
    const double bin_bytes =
        static_cast<double>(params.m_y_count) *
            (p_sel_y * static_cast<double>(pool_size) * 4.0 + 24.0) +
        static_cast<double>(params.m_z_count) *
            (p_sel_z * static_cast<double>(pool_size) * 4.0 + 24.0);
    if (pool_bytes + bin_bytes > static_cast<double>(memory_budget_bytes))
        throw BudgetError("code memory estimate exceeds the budget");

    BcIdCode code;
    code.params = params;
    code.pool.reserve(static_cast<std::size_t>(pool_size));
    for (std::int64_t v = 0; v < pool_size; ++v) {
        Crng g = make_stream(params.seed, StreamTag::pool, {static_cast<std::uint64_t>(v)});
        code.pool.push_back(sample_iid(params.input_pmf, params.n, g));
    }

    const auto fill_bins = [&](std::vector<std::vector<std::uint32_t>>& sets,
                               std::int64_t m_count, double p_sel, std::uint64_t side) {
        sets.resize(static_cast<std::size_t>(m_count));
        for (std::int64_t m = 0; m < m_count; ++m) {
            auto& bin = sets[static_cast<std::size_t>(m)];
            if (p_sel >= 1.0) {
                bin.resize(static_cast<std::size_t>(pool_size));
                for (std::int64_t v = 0; v < pool_size; ++v)
                    bin[static_cast<std::size_t>(v)] = static_cast<std::uint32_t>(v);
                continue;
            }
            Crng g = make_stream(params.seed, StreamTag::bin,
                                 {side, 0, static_cast<std::uint64_t>(m)});
            for (std::int64_t v = 0; v < pool_size; ++v)
                if (g.bernoulli(p_sel)) bin.push_back(static_cast<std::uint32_t>(v));
        }
    };
    fill_bins(code.index_sets_y, params.m_y_count, p_sel_y, 0);
    fill_bins(code.index_sets_z, params.m_z_count, p_sel_z, 1);
    return code;
}

std::uint32_t codeword_index(const BcIdCode& code, std::int64_t m_y, std::int64_t m_z) {
    require_arg(m_y >= 0 && m_y < code.params.m_y_count,
                "codeword index: m_y out of range");
    require_arg(m_z >= 0 && m_z < code.params.m_z_count,
                "codeword index: m_z out of range");
    Crng g = make_stream(code.params.seed, StreamTag::vsel,
                         {0, static_cast<std::uint64_t>(m_y),
                          static_cast<std::uint64_t>(m_z), 0});
    const auto inter =
        sorted_intersection(code.index_sets_y[static_cast<std::size_t>(m_y)],
                            code.index_sets_z[static_cast<std::size_t>(m_z)]);
    if (!inter.empty()) return inter[g.uniform_u64(inter.size())];
    return static_cast<std::uint32_t>(g.uniform_u64(code.pool.size()));
}

Sequence encode_bc(const BcIdCode& code, std::int64_t m_y, std::int64_t m_z) {
    return code.pool[codeword_index(code, m_y, m_z)];
}

bool decoder_accepts(const BcIdCode& code, const Dmc& marginal, Side side,
                     std::int64_t m_prime, const Sequence& observed) {
    const SideView view = side_view(code, side);
    require_arg(m_prime >= 0 && m_prime < view.own_count,
                "decoder: message out of range");
    const auto& bin = (*view.own_bins)[static_cast<std::size_t>(m_prime)];
    for (const std::uint32_t v : bin)
        if (is_jointly_typical(code.pool[v], observed, code.params.input_pmf, marginal,
                               code.params.eps))
            return true;
    return false;
}

BcSideReports avg_error_report_bc(const BcIdCode& code, const Bc2& bc,
                                  const EvalOptions& opt, std::int64_t other_cap) {
    require_arg(code.params.input_pmf.size() == bc.input_size(),
                "error report: input distribution does not match the channel");
    BcSideReports out;
    out.y = side_report(code, bc.marginal_y(), Side::y, opt, other_cap, false);
    out.z = side_report(code, bc.marginal_z(), Side::z, opt, other_cap, false);
    return out;
}

BcSideReports max_error_report_bc(const BcIdCode& code, const Bc2& bc,
                                  const EvalOptions& opt, std::int64_t other_cap) {
    require_arg(code.params.input_pmf.size() == bc.input_size(),
                "error report: input distribution does not match the channel");
    BcSideReports out;
    out.y = side_report(code, bc.marginal_y(), Side::y, opt, other_cap, true);
    out.z = side_report(code, bc.marginal_z(), Side::z, opt, other_cap, true);
    return out;
}

IndexDistributionDiag index_distribution_diag(const BcIdCode& code, Side side,
                                              std::int64_t m,
                                              std::int64_t enumeration_budget) {
    const SideView view = side_view(code, side);
    require_arg(m >= 0 && m < view.own_count, "index diagnostic: message out of range");

    IndexDistributionDiag diag;
    diag.p_v.assign(code.pool.size(), 0.0);
    diag.p_ref.assign(code.pool.size(), 0.0);

    std::vector<std::int64_t> others;
    if (view.other_count <= enumeration_budget) {
        others.resize(static_cast<std::size_t>(view.other_count));
        std::iota(others.begin(), others.end(), std::int64_t{0});
    } else {
        diag.sampled = true;
        Crng g = make_stream(code.params.seed, StreamTag::misc,
                             {5, static_cast<std::uint64_t>(side),
                              static_cast<std::uint64_t>(m)});
        others.reserve(static_cast<std::size_t>(enumeration_budget));
        for (std::int64_t i = 0; i < enumeration_budget; ++i)
            others.push_back(static_cast<std::int64_t>(
                g.uniform_u64(static_cast<std::uint64_t>(view.other_count))));
    }
    diag.other_checked = static_cast<std::int64_t>(others.size());
    const double w = 1.0 / static_cast<double>(others.size());
    for (const std::int64_t j : others) diag.p_v[pair_index(code, side, m, j)] += w;

    const auto& bin = (*view.own_bins)[static_cast<std::size_t>(m)];
    if (bin.empty()) {
        diag.p_ref[0] = 1.0;
    } else {
        const double u = 1.0 / static_cast<double>(bin.size());
        for (const std::uint32_t v : bin) diag.p_ref[v] = u;
    }
    double tv = 0.0;
    for (std::size_t v = 0; v < code.pool.size(); ++v)
        tv += std::fabs(diag.p_v[v] - diag.p_ref[v]);
    diag.tv = tv / 2.0;
    return diag;
}

void save_bc_code(const BcIdCode& code, const std::string& path) {
    nlohmann::json j;
    j["format"] = "idbc-bc-code";
    j["version"] = 1;
    j["params"] = {{"n", code.params.n},
                   {"m_y_count", code.params.m_y_count},
                   {"m_z_count", code.params.m_z_count},
                   {"pool_rate", code.params.pool_rate},
                   {"bin_rate_y", code.params.bin_rate_y},
                   {"bin_rate_z", code.params.bin_rate_z},
                   {"eps", code.params.eps},
                   {"seed", code.params.seed},
                   {"input_pmf", code.params.input_pmf.probs()}};
    nlohmann::json pool = nlohmann::json::array();
    for (const auto& seq : code.pool) pool.push_back(seq.sym);
    j["pool"] = std::move(pool);
    j["index_sets_y"] = detail::index_sets_to_json(code.index_sets_y);
    j["index_sets_z"] = detail::index_sets_to_json(code.index_sets_z);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write code container: " + path);
    out << j.dump();
    if (!out) throw std::runtime_error("short write on code container: " + path);
}

BcIdCode load_bc_code(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read code container: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const nlohmann::json j = nlohmann::json::parse(buf.str());
    if (j.value("format", "") != "idbc-bc-code")
        throw std::runtime_error("code container: unexpected format tag");
    if (j.value("version", 0) != 1)
        throw std::runtime_error("code container: unsupported version");

    BcIdCode code;
    const auto& p = j.at("params");
    code.params.n = p.at("n").get<int>();
    code.params.m_y_count = p.at("m_y_count").get<std::int64_t>();
    code.params.m_z_count = p.at("m_z_count").get<std::int64_t>();
    code.params.pool_rate = p.at("pool_rate").get<double>();
    code.params.bin_rate_y = p.at("bin_rate_y").get<double>();
    code.params.bin_rate_z = p.at("bin_rate_z").get<double>();
    code.params.eps = p.at("eps").get<double>();
    code.params.seed = p.at("seed").get<std::uint64_t>();
    code.params.input_pmf = Pmf(p.at("input_pmf").get<std::vector<double>>());

    for (const auto& row : j.at("pool")) {
        Sequence seq(row.get<std::vector<std::uint8_t>>());
        if (seq.n() != code.params.n)
            throw std::runtime_error("code container: pool entry length mismatch");
        code.pool.push_back(std::move(seq));
    }
    const std::int64_t pool_size = static_cast<std::int64_t>(code.pool.size());
    code.index_sets_y = detail::index_sets_from_json(j.at("index_sets_y"), pool_size);
    code.index_sets_z = detail::index_sets_from_json(j.at("index_sets_z"), pool_size);
    if (static_cast<std::int64_t>(code.index_sets_y.size()) != code.params.m_y_count ||
        static_cast<std::int64_t>(code.index_sets_z.size()) != code.params.m_z_count)
        throw std::runtime_error("code container: index set count mismatch");
    return code;
}

}  // namespace idbc
