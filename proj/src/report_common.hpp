#pragma once

// Internal helpers shared by the error-report builders. Not part of the
// public headers.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <unordered_set>
#include <utility>
#include <vector>

#include "idbc/channel.hpp"
#include "idbc/id_dmc.hpp"
#include "idbc/pmf.hpp"
#include "idbc/rng.hpp"

namespace idbc::detail {

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// One receiver of a deterministic-encoder code: the codeword for (own
// message, other message) is pool[pair_index(own, other)], the decoder is the
// typicality union over own_bins[own]. Covers the two- and three-receiver
// codes and the common-message code (own = flattened joint message there).
struct SideEvalSpec {
    int n = 0;
    double eps = 0.0;
    const Pmf* input_pmf = nullptr;
    const std::vector<Sequence>* pool = nullptr;
    const std::vector<std::vector<std::uint32_t>>* own_bins = nullptr;
    std::int64_t own_count = 0;
    std::int64_t other_count = 0;
    std::uint64_t root = 0;       // evaluation stream root
    std::uint64_t side_word = 0;  // keeps per-side streams distinct
    std::function<std::uint32_t(std::int64_t, std::int64_t)> pair_index;
};

// Missed/wrong for one side, the other side's message either averaged out
// (uniform) or taken worst case. Exact mode enumerates the side's output
// space once over the distinct pair indices and throws BudgetError past the
// state budget; averaging enumerates the other side up to other_cap messages
// and switches to a seeded subsample with recorded half-widths beyond it.
ErrorReport deterministic_side_report(const SideEvalSpec& spec, const Dmc& marginal,
                                      const EvalOptions& opt, std::int64_t other_cap,
                                      bool max_mode);

// Ordered pairs (m, m') with m != m'; a seeded sample above the cap.
inline std::vector<std::pair<std::int64_t, std::int64_t>> choose_ordered_pairs(
    std::int64_t m_count, const EvalOptions& opt, std::uint64_t root, bool& sampled) {
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    sampled = false;
    if (m_count <= 1) return pairs;
    if (m_count <= opt.pair_cap) {
        for (std::int64_t m = 0; m < m_count; ++m)
            for (std::int64_t mp = 0; mp < m_count; ++mp)
                if (m != mp) pairs.emplace_back(m, mp);
        return pairs;
    }
    sampled = true;
    Crng g = make_stream(root, StreamTag::misc, {1});
    std::unordered_set<std::uint64_t> seen;
    const std::uint64_t want = static_cast<std::uint64_t>(opt.pair_sample);
    std::uint64_t attempts = 0;
    while (seen.size() < want && attempts < want * 32) {
        ++attempts;
        const std::int64_t m =
            static_cast<std::int64_t>(g.uniform_u64(static_cast<std::uint64_t>(m_count)));
        const std::int64_t mp =
            static_cast<std::int64_t>(g.uniform_u64(static_cast<std::uint64_t>(m_count)));
        if (m == mp) continue;
        const std::uint64_t key =
            static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(m_count) +
            static_cast<std::uint64_t>(mp);
        if (seen.insert(key).second) pairs.emplace_back(m, mp);
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

}  // namespace idbc::detail
