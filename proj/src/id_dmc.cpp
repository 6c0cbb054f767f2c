#include "idbc/id_dmc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

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

void check_params(const IdParams& params) {
    require_arg(params.n >= 1, "id params: n must be at least 1");
    require_arg(params.m_count >= 1, "id params: m_count must be at least 1");
    require_arg(std::isfinite(params.pool_rate) && std::isfinite(params.bin_rate),
                "id params: rates must be finite");
    require_arg(std::isfinite(params.eps) && params.eps >= 0.0,
                "id params: eps must be finite and nonnegative");
}

using detail::choose_ordered_pairs;
using detail::clamp01;

// Monte Carlo pass shared by the plain and typed fallbacks: per-source trial
// streams, one output draw reused against every target, own-codeword check
// first since acceptance of the true message is the common case.
struct McCounts {
    std::vector<std::uint64_t> miss;                 // per message
    std::vector<std::uint64_t> pair_hits;            // aligned with pairs
};

McCounts run_mc(const IdCodeDmc& code, const Dmc& w,
                const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs,
                const EvalOptions& opt, std::uint64_t root, bool want_missed) {
    const IdParams& prm = code.params;
    McCounts out;
    out.miss.assign(static_cast<std::size_t>(prm.m_count), 0);
    out.pair_hits.assign(pairs.size(), 0);

    std::vector<std::vector<std::pair<std::int64_t, std::size_t>>> targets_by_source(
        static_cast<std::size_t>(prm.m_count));
    for (std::size_t i = 0; i < pairs.size(); ++i)
        targets_by_source[static_cast<std::size_t>(pairs[i].first)].emplace_back(
            pairs[i].second, i);

    for (std::int64_t m = 0; m < prm.m_count; ++m) {
        const auto& targets = targets_by_source[static_cast<std::size_t>(m)];
        if (!want_missed && targets.empty()) continue;
        // An empty bin falls back to the star element, which the decoder's
        // union never contains, so the typicality shortcut must stay off.
        const bool own_in_bin = !code.index_sets[static_cast<std::size_t>(m)].empty();
        Crng g = make_stream(root, StreamTag::trial, {static_cast<std::uint64_t>(m)});
        for (std::uint64_t t = 0; t < opt.trials; ++t) {
            const Sequence x = encode_dmc(code, m, g);
            const Sequence y = sample_output(w, x, g);
            if (want_missed) {
                const bool own =
                    own_in_bin && is_jointly_typical(x, y, prm.input_pmf, w, prm.eps);
                if (!own && !decode_accepts(code, w, m, y))
                    ++out.miss[static_cast<std::size_t>(m)];
            }
            for (const auto& [mp, slot] : targets)
                if (decode_accepts(code, w, mp, y)) ++out.pair_hits[slot];
        }
    }
    return out;
}

}  // namespace

std::int64_t id_pool_size(const IdParams& params) {
    check_params(params);
    const double raw = std::exp(static_cast<double>(params.n) * params.pool_rate);
    if (!(raw < 4.0e18)) throw BudgetError("pool size exceeds the 64-bit range");
    return std::max<std::int64_t>(1, std::llround(raw));
}

double id_p_sel(const IdParams& params) {
    check_params(params);
    return std::min(
        1.0, std::exp(-static_cast<double>(params.n) * (params.pool_rate - params.bin_rate)));
}

std::optional<double> empirical_id_rate(int n, std::int64_t m_count) {
    if (n < 1 || m_count < 3) return std::nullopt;
    return std::log(std::log(static_cast<double>(m_count))) / static_cast<double>(n);
}

double default_eps(const Pmf& p, const Dmc& w, double bin_rate) {
    const double margin = mutual_information(p, w) - bin_rate;
    const double joint = joint_input_output_entropy(p, w);
    if (margin <= 0.0 || joint <= 0.0) return 0.0;
    return margin / (4.0 * joint);
}

std::vector<std::string> validate_dmc_params(const IdParams& params, const Dmc& w) {
    check_params(params);
    std::vector<std::string> flags;
    if (params.input_pmf.size() != w.input_size()) {
        flags.push_back("input distribution size does not match the channel input alphabet");
        return flags;
    }
    const double info = mutual_information(params.input_pmf, w);
    std::ostringstream os;
    os.precision(12);
    if (!(params.bin_rate < info)) {
        os.str("");
        os << "bin_rate " << params.bin_rate << " is not below I(P,W) = " << info;
        flags.push_back(os.str());
    }
    if (!(params.bin_rate < params.pool_rate)) {
        os.str("");
        os << "bin_rate " << params.bin_rate << " is not below pool_rate "
           << params.pool_rate;
        flags.push_back(os.str());
    }
    const auto emp = empirical_id_rate(params.n, params.m_count);
    if (emp && !(*emp < params.bin_rate)) {
        os.str("");
        os << "empirical ID rate " << *emp << " is not below bin_rate "
           << params.bin_rate;
        flags.push_back(os.str());
    }
    if (!check_eps(params.input_pmf, w, params.bin_rate, params.eps)) {
        os.str("");
        os << "typicality slack too large: 2 * delta(eps) = "
           << 2.0 * typicality_delta(params.eps, params.input_pmf, w)
           << " does not leave room under I(P,W) - bin_rate = "
           << info - params.bin_rate;
        flags.push_back(os.str());
    }
    return flags;
}

IdCodeDmc build_dmc_code(const IdParams& params, std::int64_t memory_budget_bytes) {
    check_params(params);
    const std::int64_t pool_size = id_pool_size(params);
    const double p_sel = id_p_sel(params);

    const double pool_bytes =
        static_cast<double>(pool_size) * (static_cast<double>(params.n) + 16.0);
    const double bin_bytes = static_cast<double>(params.m_count) *
                             (p_sel * static_cast<double>(pool_size) * 4.0 + 24.0);
    if (pool_bytes + bin_bytes > static_cast<double>(memory_budget_bytes))
        throw BudgetError("code memory estimate exceeds the budget");

    IdCodeDmc code;
    code.params = params;
    code.v_star = 0;
    code.pool.reserve(static_cast<std::size_t>(pool_size));
    for (std::int64_t v = 0; v < pool_size; ++v) {
        Crng g = make_stream(params.seed, StreamTag::pool, {static_cast<std::uint64_t>(v)});
        code.pool.push_back(sample_iid(params.input_pmf, params.n, g));
    }

    code.index_sets.resize(static_cast<std::size_t>(params.m_count));
    for (std::int64_t m = 0; m < params.m_count; ++m) {
        auto& bin = code.index_sets[static_cast<std::size_t>(m)];
        if (p_sel >= 1.0) {
            // Full bins stay on the Bernoulli derivation path so collapsed
            // parameterizations reproduce bit for bit.
            bin.resize(static_cast<std::size_t>(pool_size));
            for (std::int64_t v = 0; v < pool_size; ++v)
                bin[static_cast<std::size_t>(v)] = static_cast<std::uint32_t>(v);
            continue;
        }
        Crng g = make_stream(params.seed, StreamTag::bin, {0, 0, static_cast<std::uint64_t>(m)});
        for (std::int64_t v = 0; v < pool_size; ++v)
            if (g.bernoulli(p_sel)) bin.push_back(static_cast<std::uint32_t>(v));
    }
    return code;
}

Sequence encode_dmc(const IdCodeDmc& code, std::int64_t m, Crng& g) {
    require_arg(m >= 0 && m < code.params.m_count, "encode: message out of range");
    const auto& bin = code.index_sets[static_cast<std::size_t>(m)];
    if (bin.empty()) return code.pool[code.v_star];
    const std::uint32_t v = bin[g.uniform_u64(bin.size())];
    return code.pool[v];
}

bool decode_accepts(const IdCodeDmc& code, const Dmc& w, std::int64_t m_prime,
                    const Sequence& y) {
    require_arg(m_prime >= 0 && m_prime < code.params.m_count,
                "decode: message out of range");
    const auto& bin = code.index_sets[static_cast<std::size_t>(m_prime)];
    for (const std::uint32_t v : bin)
        if (is_jointly_typical(code.pool[v], y, code.params.input_pmf, w,
                               code.params.eps))
            return true;
    return false;
}

ErrorReport error_report_dmc(const IdCodeDmc& code, const Dmc& w,
                             const EvalOptions& opt) {
    const IdParams& prm = code.params;
    require_arg(prm.input_pmf.size() == w.input_size(),
                "error report: input distribution does not match the channel");
    const std::uint64_t root = opt.seed != 0 ? opt.seed : prm.seed;

    ErrorReport rep;
    rep.empirical_rate = empirical_id_rate(prm.n, prm.m_count);
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs =
        choose_ordered_pairs(prm.m_count, opt, root, rep.pair_sampled);
    if (rep.pair_sampled)
        rep.caveat = "wrong-identification values cover a seeded sample of ordered pairs";

    const bool enumerable =
        detail::output_space_size(w.output_size(), prm.n, opt.state_budget) <=
        opt.state_budget;

    if (opt.mode == EvalMode::exact && enumerable) {
        std::vector<std::vector<detail::Atom>> sources(
            static_cast<std::size_t>(prm.m_count));
        std::vector<const std::vector<std::uint32_t>*> targets;
        targets.reserve(static_cast<std::size_t>(prm.m_count));
        for (std::int64_t m = 0; m < prm.m_count; ++m) {
            const auto& bin = code.index_sets[static_cast<std::size_t>(m)];
            auto& src = sources[static_cast<std::size_t>(m)];
            if (bin.empty()) {
                src.push_back({code.v_star, 1.0});
            } else {
                const double wgt = 1.0 / static_cast<double>(bin.size());
                for (const std::uint32_t v : bin) src.push_back({v, wgt});
            }
            targets.push_back(&bin);
        }
        const auto accept = detail::exact_accept_matrix(
            code.pool, sources, targets, prm.input_pmf, w, prm.eps, prm.n,
            opt.state_budget);
        rep.method = "exact";
        rep.missed.resize(static_cast<std::size_t>(prm.m_count));
        rep.missed_halfwidth.assign(static_cast<std::size_t>(prm.m_count), 0.0);
        for (std::int64_t m = 0; m < prm.m_count; ++m)
            rep.missed[static_cast<std::size_t>(m)] = clamp01(
                1.0 - accept[static_cast<std::size_t>(m)][static_cast<std::size_t>(m)]);
        for (const auto& [m, mp] : pairs)
            rep.wrong.push_back({m, mp,
                                 clamp01(accept[static_cast<std::size_t>(m)]
                                               [static_cast<std::size_t>(mp)]),
                                 0.0});
    } else if (opt.mode == EvalMode::exact) {
        // Output space too large to enumerate: the own-codeword typicality
        // probability is exact and bounds missed identification from above
        // (the decoding set contains the own-codeword ball); wrong
        // identification falls back to sampling.
        rep.method = "typed+mc";
        rep.missed_upper_bound = true;
        rep.trials = opt.trials;
        rep.missed.resize(static_cast<std::size_t>(prm.m_count));
        rep.missed_halfwidth.assign(static_cast<std::size_t>(prm.m_count), 0.0);
        std::map<std::vector<std::int64_t>, double> cache;
        for (std::int64_t m = 0; m < prm.m_count; ++m) {
            const auto& bin = code.index_sets[static_cast<std::size_t>(m)];
            if (bin.empty()) {
                rep.missed[static_cast<std::size_t>(m)] = 1.0;
                continue;
            }
            double acc = 0.0;
            for (const std::uint32_t v : bin) {
                const TypeVector tv = empirical_type(code.pool[v], prm.input_pmf.size());
                auto it = cache.find(tv.counts);
                if (it == cache.end())
                    it = cache
                             .emplace(tv.counts,
                                      detail::own_typicality_prob(
                                          code.pool[v], prm.input_pmf, w, prm.eps))
                             .first;
                acc += it->second;
            }
            rep.missed[static_cast<std::size_t>(m)] =
                clamp01(1.0 - acc / static_cast<double>(bin.size()));
        }
        if (!rep.caveat.empty()) rep.caveat += "; ";
        rep.caveat += "missed values are own-codeword upper bounds";
        const McCounts counts = run_mc(code, w, pairs, opt, root, false);
        for (std::size_t i = 0; i < pairs.size(); ++i)
            rep.wrong.push_back(
                {pairs[i].first, pairs[i].second,
                 static_cast<double>(counts.pair_hits[i]) / static_cast<double>(opt.trials),
                 detail::wilson_halfwidth(counts.pair_hits[i], opt.trials, opt.z)});
    } else {
        rep.method = "monte-carlo(" + std::to_string(opt.trials) + ")";
        rep.trials = opt.trials;
        const McCounts counts = run_mc(code, w, pairs, opt, root, true);
        rep.missed.resize(static_cast<std::size_t>(prm.m_count));
        rep.missed_halfwidth.resize(static_cast<std::size_t>(prm.m_count));
        for (std::int64_t m = 0; m < prm.m_count; ++m) {
            const std::uint64_t k = counts.miss[static_cast<std::size_t>(m)];
            rep.missed[static_cast<std::size_t>(m)] =
                static_cast<double>(k) / static_cast<double>(opt.trials);
            rep.missed_halfwidth[static_cast<std::size_t>(m)] =
                detail::wilson_halfwidth(k, opt.trials, opt.z);
        }
        for (std::size_t i = 0; i < pairs.size(); ++i)
            rep.wrong.push_back(
                {pairs[i].first, pairs[i].second,
                 static_cast<double>(counts.pair_hits[i]) / static_cast<double>(opt.trials),
                 detail::wilson_halfwidth(counts.pair_hits[i], opt.trials, opt.z)});
    }

    rep.max_missed = rep.missed.empty()
                         ? 0.0
                         : *std::max_element(rep.missed.begin(), rep.missed.end());
    rep.max_wrong = 0.0;
    for (const auto& e : rep.wrong) rep.max_wrong = std::max(rep.max_wrong, e.value);
    return rep;
}

GMuDiagnostics check_G_mu(const IdCodeDmc& code, double mu, std::int64_t pair_budget) {
    const IdParams& prm = code.params;
    require_arg(std::isfinite(mu) && mu > 0.0, "G_mu: mu must be positive");
    const auto emp = empirical_id_rate(prm.n, prm.m_count);
    double upper = prm.bin_rate - std::max(0.0, emp.value_or(0.0));
    if (id_p_sel(prm) < 1.0)
        upper = std::min(upper, prm.pool_rate - prm.bin_rate);
    require_arg(mu < upper, "G_mu: mu must stay below the rate gaps");

    GMuDiagnostics d;
    d.mu = mu;
    d.delta_n = std::exp(-static_cast<double>(prm.n) * mu / 2.0);
    const double nominal = std::exp(static_cast<double>(prm.n) * prm.bin_rate);
    d.size_lower_bound = (1.0 - d.delta_n) * nominal;
    d.size_upper_bound = (1.0 + d.delta_n) * nominal;
    d.intersection_bound =
        2.0 * std::exp(static_cast<double>(prm.n) * (prm.bin_rate - mu / 2.0));

    d.messages_checked = prm.m_count;
    for (const auto& bin : code.index_sets) {
        const double sz = static_cast<double>(bin.size());
        if (!(sz > d.size_lower_bound)) ++d.size_lower_violations;
        if (!(sz < d.size_upper_bound)) ++d.size_upper_violations;
    }

    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    const std::int64_t total = prm.m_count * (prm.m_count - 1) / 2;
    if (total <= pair_budget) {
        for (std::int64_t m = 0; m < prm.m_count; ++m)
            for (std::int64_t mp = m + 1; mp < prm.m_count; ++mp)
                pairs.emplace_back(m, mp);
    } else {
        d.pair_sampled = true;
        Crng g = make_stream(prm.seed, StreamTag::misc, {2});
        std::unordered_set<std::uint64_t> seen;
        while (static_cast<std::int64_t>(pairs.size()) < pair_budget) {
            std::int64_t m = static_cast<std::int64_t>(
                g.uniform_u64(static_cast<std::uint64_t>(prm.m_count)));
            std::int64_t mp = static_cast<std::int64_t>(
                g.uniform_u64(static_cast<std::uint64_t>(prm.m_count)));
            if (m == mp) continue;
            if (m > mp) std::swap(m, mp);
            const std::uint64_t key =
                static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(prm.m_count) +
                static_cast<std::uint64_t>(mp);
            if (seen.insert(key).second) pairs.emplace_back(m, mp);
        }
    }
    d.pairs_checked = static_cast<std::int64_t>(pairs.size());
    for (const auto& [m, mp] : pairs) {
        const auto& a = code.index_sets[static_cast<std::size_t>(m)];
        const auto& b = code.index_sets[static_cast<std::size_t>(mp)];
        std::size_t i = 0, j = 0, inter = 0;
        while (i < a.size() && j < b.size()) {
            if (a[i] < b[j]) ++i;
            else if (a[i] > b[j]) ++j;
            else { ++inter; ++i; ++j; }
        }
        if (!(static_cast<double>(inter) < d.intersection_bound))
            ++d.intersection_violations;
    }
    d.pass = d.size_lower_violations == 0 && d.size_upper_violations == 0 &&
             d.intersection_violations == 0;
    return d;
}

void save_dmc_code(const IdCodeDmc& code, const std::string& path) {
    nlohmann::json j;
    j["format"] = "idbc-dmc-code";
    j["version"] = 1;
    j["params"] = {{"n", code.params.n},
                   {"m_count", code.params.m_count},
                   {"pool_rate", code.params.pool_rate},
                   {"bin_rate", code.params.bin_rate},
                   {"eps", code.params.eps},
                   {"seed", code.params.seed},
                   {"input_pmf", code.params.input_pmf.probs()}};
    j["v_star"] = code.v_star;
    nlohmann::json pool = nlohmann::json::array();
    for (const auto& seq : code.pool) pool.push_back(seq.sym);
    j["pool"] = std::move(pool);
    j["index_sets"] = detail::index_sets_to_json(code.index_sets);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write code container: " + path);
    out << j.dump();
    if (!out) throw std::runtime_error("short write on code container: " + path);
}

IdCodeDmc load_dmc_code(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read code container: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const nlohmann::json j = nlohmann::json::parse(buf.str());
    if (j.value("format", "") != "idbc-dmc-code")
        throw std::runtime_error("code container: unexpected format tag");
    if (j.value("version", 0) != 1)
        throw std::runtime_error("code container: unsupported version");

    IdCodeDmc code;
    const auto& p = j.at("params");
    code.params.n = p.at("n").get<int>();
    code.params.m_count = p.at("m_count").get<std::int64_t>();
    code.params.pool_rate = p.at("pool_rate").get<double>();
    code.params.bin_rate = p.at("bin_rate").get<double>();
    code.params.eps = p.at("eps").get<double>();
    code.params.seed = p.at("seed").get<std::uint64_t>();
    code.params.input_pmf = Pmf(p.at("input_pmf").get<std::vector<double>>());
    code.v_star = j.at("v_star").get<std::uint32_t>();

    for (const auto& row : j.at("pool")) {
        Sequence seq(row.get<std::vector<std::uint8_t>>());
        if (seq.n() != code.params.n)
            throw std::runtime_error("code container: pool entry length mismatch");
        code.pool.push_back(std::move(seq));
    }
    code.index_sets = detail::index_sets_from_json(
        j.at("index_sets"), static_cast<std::int64_t>(code.pool.size()));
    if (static_cast<std::int64_t>(code.index_sets.size()) != code.params.m_count)
        throw std::runtime_error("code container: index set count mismatch");
    if (code.v_star >= code.pool.size())
        throw std::runtime_error("code container: fallback index beyond the pool");
    return code;
}

}  // namespace idbc
