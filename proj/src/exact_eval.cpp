#include "exact_eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "idbc/errors.hpp"
#include "idbc/typeskit.hpp"

namespace idbc::detail {

namespace {

// Generic core over an index map from pool index to a dense slot.
template <typename Index>
std::vector<std::vector<double>> accept_matrix_core(
    const std::vector<Sequence>& pool, const std::vector<std::vector<Atom>>& sources,
    const std::vector<const std::vector<Index>*>& targets, const Pmf& p, const Dmc& w,
    double eps, int n, std::int64_t state_budget) {
    if (output_space_size(w.output_size(), n, state_budget) > state_budget)
        throw BudgetError("output space enumeration budget exceeded");

    // Dense slots for every pool index referenced by a source or a target.
    std::unordered_map<std::uint64_t, std::size_t> slot;
    std::vector<std::uint64_t> used;
    auto touch = [&](std::uint64_t v) {
        if (slot.emplace(v, used.size()).second) used.push_back(v);
    };
    for (const auto& atoms : sources)
        for (const Atom& a : atoms) touch(a.v);
    for (const auto* t : targets)
        for (Index v : *t) touch(static_cast<std::uint64_t>(v));

    const std::size_t ns = sources.size();
    const std::size_t nt = targets.size();
    std::vector<std::vector<double>> accept(ns, std::vector<double>(nt, 0.0));

    Sequence y;
    y.sym.assign(n, 0);
    std::vector<double> wn(used.size());
    std::vector<char> typ(used.size());
    std::vector<double> qs(ns);
    for (;;) {
        for (std::size_t i = 0; i < used.size(); ++i) {
            const Sequence& x = pool[used[i]];
            double prod = 1.0;
            for (int j = 0; j < n; ++j) prod *= w.at(x.sym[j], y.sym[j]);
            wn[i] = prod;
            typ[i] = is_jointly_typical(x, y, p, w, eps) ? 1 : 0;
        }
        for (std::size_t s = 0; s < ns; ++s) {
            double q = 0.0;
            for (const Atom& a : sources[s]) q += a.weight * wn[slot.at(a.v)];
            qs[s] = q;
        }
        for (std::size_t t = 0; t < nt; ++t) {
            bool acc = false;
            for (Index v : *targets[t])
                if (typ[slot.at(static_cast<std::uint64_t>(v))]) {
                    acc = true;
                    break;
                }
            if (!acc) continue;
            for (std::size_t s = 0; s < ns; ++s) accept[s][t] += qs[s];
        }
        int pos = n - 1;
        while (pos >= 0 && ++y.sym[pos] == w.output_size()) y.sym[pos--] = 0;
        if (pos < 0) break;
    }
    return accept;
}

}  // namespace

std::int64_t output_space_size(int output_size, int n, std::int64_t cap) {
    std::int64_t states = 1;
    for (int i = 0; i < n; ++i) {
        if (states > cap / output_size) return cap + 1;
        states *= output_size;
    }
    return states;
}

std::vector<std::vector<double>> exact_accept_matrix(
    const std::vector<Sequence>& pool, const std::vector<std::vector<Atom>>& sources,
    const std::vector<const std::vector<std::uint32_t>*>& targets, const Pmf& p,
    const Dmc& w, double eps, int n, std::int64_t state_budget) {
    return accept_matrix_core<std::uint32_t>(pool, sources, targets, p, w, eps, n,
                                             state_budget);
}

std::vector<std::vector<double>> exact_accept_matrix64(
    const std::vector<Sequence>& pool, const std::vector<std::vector<Atom>>& sources,
    const std::vector<const std::vector<std::uint64_t>*>& targets, const Pmf& p,
    const Dmc& w, double eps, int n, std::int64_t state_budget) {
    return accept_matrix_core<std::uint64_t>(pool, sources, targets, p, w, eps, n,
                                             state_budget);
}

double wilson_halfwidth(std::uint64_t k, std::uint64_t n, double z) {
    if (n == 0) return 1.0;
    const double kn = static_cast<double>(k);
    const double nn = static_cast<double>(n);
    return z * std::sqrt(kn * (nn - kn) / nn + z * z / 4.0) / (nn + z * z);
}

double own_typicality_prob(const Sequence& x, const Pmf& p, const Dmc& w, double eps) {
    const int n = x.n();
    const int ny = w.output_size();
    std::vector<std::int64_t> na(p.size(), 0);
    for (std::uint8_t s : x.sym) ++na[s];

    // Integer count windows per joint cell, matched against the same
    // floating predicate the decoder uses.
    auto window = [&](double q, std::int64_t limit, std::int64_t& lo, std::int64_t& hi) {
        lo = limit + 1;
        hi = -1;
        if (q <= 0.0) {
            lo = hi = 0;
            return;
        }
        for (std::int64_t k = 0; k <= limit; ++k)
            if (std::fabs(static_cast<double>(k) / n - q) <= eps * q) {
                if (lo > limit) lo = k;
                hi = k;
            }
    };

    double prob = 1.0;
    for (int a = 0; a < p.size(); ++a) {
        if (na[a] == 0) continue;
        if (p.at(a) <= 0.0) return 0.0;  // zero-support symbol present
        std::vector<std::int64_t> lo(ny), hi(ny);
        for (int b = 0; b < ny; ++b) window(p.at(a) * w.at(a, b), na[a], lo[b], hi[b]);

        // dp[s] = probability the first cells consumed s of the na[a]
        // positions while staying inside their windows.
        std::vector<double> dp(na[a] + 1, 0.0), next(na[a] + 1, 0.0);
        dp[0] = 1.0;
        std::vector<double> suffix(ny + 1, 0.0);
        for (int b = ny - 1; b >= 0; --b) suffix[b] = suffix[b + 1] + w.at(a, b);
        for (int b = 0; b < ny; ++b) {
            const double wb = w.at(a, b);
            const double cond = suffix[b] > 0.0 ? std::min(1.0, wb / suffix[b]) : 0.0;
            std::fill(next.begin(), next.end(), 0.0);
            for (std::int64_t s = 0; s <= na[a]; ++s) {
                if (dp[s] <= 0.0) continue;
                const std::int64_t room = na[a] - s;
                if (b == ny - 1) {
                    // Last cell takes everything that remains.
                    if (room >= lo[b] && room <= hi[b]) next[na[a]] += dp[s];
                    continue;
                }
                for (std::int64_t k = std::max<std::int64_t>(0, lo[b]);
                     k <= std::min(room, hi[b]); ++k) {
                    double term = dp[s];
                    // Binomial(room, cond) pmf at k via log-gamma.
                    if (cond <= 0.0) {
                        if (k != 0) continue;
                    } else if (cond >= 1.0) {
                        if (k != room) continue;
                    } else {
                        const double lg = std::lgamma(room + 1.0) - std::lgamma(k + 1.0) -
                                          std::lgamma(room - k + 1.0) +
                                          k * std::log(cond) +
                                          (room - k) * std::log1p(-cond);
                        term *= std::exp(lg);
                    }
                    next[s + k] += term;
                }
            }
            dp.swap(next);
        }
        prob *= dp[na[a]];
    }
    return prob;
}

}  // namespace idbc::detail
