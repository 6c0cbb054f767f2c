#include "report_common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "idbc/errors.hpp"
#include "idbc/typeskit.hpp"
#include "exact_eval.hpp"

namespace idbc::detail {

namespace {

// Other-side message list for one own-side message: full enumeration up to
// the cap, then a seeded with-replacement sample (unbiased for the average).
std::vector<std::int64_t> other_indices(const SideEvalSpec& spec, std::int64_t cap,
                                        std::int64_t m, bool& sampled) {
    std::vector<std::int64_t> out;
    if (spec.other_count <= cap) {
        out.resize(static_cast<std::size_t>(spec.other_count));
        std::iota(out.begin(), out.end(), std::int64_t{0});
        return out;
    }
    sampled = true;
    Crng g = make_stream(spec.root, StreamTag::misc,
                         {4, spec.side_word, static_cast<std::uint64_t>(m)});
    out.reserve(static_cast<std::size_t>(cap));
    for (std::int64_t i = 0; i < cap; ++i)
        out.push_back(static_cast<std::int64_t>(
            g.uniform_u64(static_cast<std::uint64_t>(spec.other_count))));
    return out;
}

double sample_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double mean_halfwidth(const std::vector<double>& v, double z) {
    if (v.size() < 2) return 0.0;
    const double mean = sample_mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double var = ss / static_cast<double>(v.size() - 1);
    return z * std::sqrt(var / static_cast<double>(v.size()));
}

bool accepts(const SideEvalSpec& spec, const Dmc& marginal, std::int64_t m_prime,
             const Sequence& observed) {
    for (const std::uint32_t v : (*spec.own_bins)[static_cast<std::size_t>(m_prime)])
        if (is_jointly_typical((*spec.pool)[v], observed, *spec.input_pmf, marginal,
                               spec.eps))
            return true;
    return false;
}

}  // namespace

ErrorReport deterministic_side_report(const SideEvalSpec& spec, const Dmc& marginal,
                                      const EvalOptions& opt, std::int64_t other_cap,
                                      bool max_mode) {
    ErrorReport rep;
    rep.empirical_rate = empirical_id_rate(spec.n, spec.own_count);
    const auto pairs = choose_ordered_pairs(spec.own_count, opt, spec.root,
                                            rep.pair_sampled);
    if (rep.pair_sampled)
        rep.caveat = "wrong-identification values cover a seeded sample of ordered pairs";
    const auto add_caveat = [&rep](const std::string& msg) {
        if (!rep.caveat.empty()) rep.caveat += "; ";
        rep.caveat += msg;
    };

    rep.missed.assign(static_cast<std::size_t>(spec.own_count), 0.0);
    rep.missed_halfwidth.assign(static_cast<std::size_t>(spec.own_count), 0.0);

    if (opt.mode == EvalMode::exact) {
        if (output_space_size(marginal.output_size(), spec.n, opt.state_budget) >
            opt.state_budget)
            throw BudgetError("output space enumeration budget exceeded");
        bool other_sampled = false;
        std::vector<std::vector<std::uint32_t>> vmat(
            static_cast<std::size_t>(spec.own_count));
        std::unordered_map<std::uint32_t, std::size_t> vrow;
        std::vector<std::vector<Atom>> sources;
        for (std::int64_t m = 0; m < spec.own_count; ++m) {
            const auto others = other_indices(spec, other_cap, m, other_sampled);
            auto& row = vmat[static_cast<std::size_t>(m)];
            row.reserve(others.size());
            for (const std::int64_t j : others) {
                const std::uint32_t v = spec.pair_index(m, j);
                row.push_back(v);
                if (vrow.emplace(v, sources.size()).second)
                    sources.push_back({{v, 1.0}});
            }
        }
        std::vector<const std::vector<std::uint32_t>*> targets;
        targets.reserve(static_cast<std::size_t>(spec.own_count));
        for (const auto& bin : *spec.own_bins) targets.push_back(&bin);
        const auto accept =
            exact_accept_matrix(*spec.pool, sources, targets, *spec.input_pmf,
                                marginal, spec.eps, spec.n, opt.state_budget);

        const auto fold = [&](std::int64_t m, std::int64_t target, double& out,
                              double& hw) {
            std::vector<double> vals;
            vals.reserve(vmat[static_cast<std::size_t>(m)].size());
            for (const std::uint32_t v : vmat[static_cast<std::size_t>(m)])
                vals.push_back(accept[vrow.at(v)][static_cast<std::size_t>(target)]);
            if (max_mode) {
                out = target == m ? *std::min_element(vals.begin(), vals.end())
                                  : *std::max_element(vals.begin(), vals.end());
                hw = 0.0;
            } else {
                out = sample_mean(vals);
                hw = other_sampled ? mean_halfwidth(vals, opt.z) : 0.0;
            }
        };
        for (std::int64_t m = 0; m < spec.own_count; ++m) {
            double acc = 0.0, hw = 0.0;
            fold(m, m, acc, hw);
            rep.missed[static_cast<std::size_t>(m)] = clamp01(1.0 - acc);
            rep.missed_halfwidth[static_cast<std::size_t>(m)] = hw;
        }
        for (const auto& [m, mp] : pairs) {
            double acc = 0.0, hw = 0.0;
            fold(m, mp, acc, hw);
            rep.wrong.push_back({m, mp, clamp01(acc), hw});
        }
        rep.method = "exact";
        if (other_sampled)
            add_caveat(max_mode
                           ? "worst case taken over a seeded subsample of the other side"
                           : "other-side averages use a seeded subsample");
    } else if (!max_mode) {
        rep.method = "monte-carlo(" + std::to_string(opt.trials) + ")";
        rep.trials = opt.trials;
        std::vector<std::vector<std::pair<std::int64_t, std::size_t>>> targets_by_source(
            static_cast<std::size_t>(spec.own_count));
        for (std::size_t i = 0; i < pairs.size(); ++i)
            targets_by_source[static_cast<std::size_t>(pairs[i].first)].emplace_back(
                pairs[i].second, i);
        std::vector<std::uint64_t> pair_hits(pairs.size(), 0);
        for (std::int64_t m = 0; m < spec.own_count; ++m) {
            Crng g = make_stream(spec.root, StreamTag::trial,
                                 {spec.side_word, static_cast<std::uint64_t>(m)});
            const auto& own_bin = (*spec.own_bins)[static_cast<std::size_t>(m)];
            std::uint64_t miss = 0;
            for (std::uint64_t t = 0; t < opt.trials; ++t) {
                const std::int64_t j = static_cast<std::int64_t>(
                    g.uniform_u64(static_cast<std::uint64_t>(spec.other_count)));
                const std::uint32_t v = spec.pair_index(m, j);
                const Sequence& x = (*spec.pool)[v];
                const Sequence obs = sample_output(marginal, x, g);
                // The typicality shortcut is valid only when the encoder's
                // element sits in the decoder's bin; a fallback draw may not.
                const bool own =
                    std::binary_search(own_bin.begin(), own_bin.end(), v) &&
                    is_jointly_typical(x, obs, *spec.input_pmf, marginal, spec.eps);
                if (!own && !accepts(spec, marginal, m, obs)) ++miss;
                for (const auto& [mp, slot] : targets_by_source[static_cast<std::size_t>(m)])
                    if (accepts(spec, marginal, mp, obs)) ++pair_hits[slot];
            }
            rep.missed[static_cast<std::size_t>(m)] =
                static_cast<double>(miss) / static_cast<double>(opt.trials);
            rep.missed_halfwidth[static_cast<std::size_t>(m)] =
                wilson_halfwidth(miss, opt.trials, opt.z);
        }
        for (std::size_t i = 0; i < pairs.size(); ++i)
            rep.wrong.push_back(
                {pairs[i].first, pairs[i].second,
                 static_cast<double>(pair_hits[i]) / static_cast<double>(opt.trials),
                 wilson_halfwidth(pair_hits[i], opt.trials, opt.z)});
    } else {
        rep.method = "monte-carlo(" + std::to_string(opt.trials) + ")";
        rep.trials = opt.trials;
        bool other_sampled = false;
        std::vector<std::vector<std::pair<std::int64_t, std::size_t>>> targets_by_source(
            static_cast<std::size_t>(spec.own_count));
        for (std::size_t i = 0; i < pairs.size(); ++i)
            targets_by_source[static_cast<std::size_t>(pairs[i].first)].emplace_back(
                pairs[i].second, i);
        std::vector<std::uint64_t> pair_best(pairs.size(), 0);
        for (std::int64_t m = 0; m < spec.own_count; ++m) {
            const auto others = other_indices(spec, other_cap, m, other_sampled);
            const auto& own_bin = (*spec.own_bins)[static_cast<std::size_t>(m)];
            std::uint64_t worst_miss = 0;
            std::vector<std::uint64_t> hits(pairs.size(), 0);
            for (const std::int64_t j : others) {
                Crng g = make_stream(spec.root, StreamTag::trial,
                                     {spec.side_word, static_cast<std::uint64_t>(m),
                                      static_cast<std::uint64_t>(j)});
                const std::uint32_t v = spec.pair_index(m, j);
                const Sequence& x = (*spec.pool)[v];
                const bool in_own_bin =
                    std::binary_search(own_bin.begin(), own_bin.end(), v);
                std::uint64_t miss = 0;
                std::fill(hits.begin(), hits.end(), 0);
                for (std::uint64_t t = 0; t < opt.trials; ++t) {
                    const Sequence obs = sample_output(marginal, x, g);
                    const bool own =
                        in_own_bin &&
                        is_jointly_typical(x, obs, *spec.input_pmf, marginal, spec.eps);
                    if (!own && !accepts(spec, marginal, m, obs)) ++miss;
                    for (const auto& [mp, slot] :
                         targets_by_source[static_cast<std::size_t>(m)])
                        if (accepts(spec, marginal, mp, obs)) ++hits[slot];
                }
                worst_miss = std::max(worst_miss, miss);
                for (const auto& [mp, slot] :
                     targets_by_source[static_cast<std::size_t>(m)])
                    pair_best[slot] = std::max(pair_best[slot], hits[slot]);
            }
            rep.missed[static_cast<std::size_t>(m)] =
                static_cast<double>(worst_miss) / static_cast<double>(opt.trials);
            rep.missed_halfwidth[static_cast<std::size_t>(m)] =
                wilson_halfwidth(worst_miss, opt.trials, opt.z);
        }
        for (std::size_t i = 0; i < pairs.size(); ++i)
            rep.wrong.push_back(
                {pairs[i].first, pairs[i].second,
                 static_cast<double>(pair_best[i]) / static_cast<double>(opt.trials),
                 wilson_halfwidth(pair_best[i], opt.trials, opt.z)});
        if (other_sampled)
            add_caveat("worst case taken over a seeded subsample of the other side");
    }

    rep.max_missed = rep.missed.empty()
                         ? 0.0
                         : *std::max_element(rep.missed.begin(), rep.missed.end());
    rep.max_wrong = 0.0;
    for (const auto& e : rep.wrong) rep.max_wrong = std::max(rep.max_wrong, e.value);
    return rep;
}

}  // namespace idbc::detail
