#include "idbc/typeskit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "idbc/errors.hpp"
#include "idbc/info.hpp"

namespace idbc {

namespace {

void check_type(const TypeVector& t) {
    detail::require(t.n >= 1, "type blocklength must be positive");
    std::int64_t sum = 0;
    for (std::int64_t c : t.counts) {
        detail::require(c >= 0, "type counts must be non-negative");
        sum += c;
    }
    detail::require(sum == t.n, "type counts must sum to the blocklength");
}

big_int multinomial(std::int64_t n, const std::int64_t* counts, std::size_t k) {
    big_int r = 1;
    for (std::int64_t i = 2; i <= n; ++i) r *= i;
    for (std::size_t a = 0; a < k; ++a)
        for (std::int64_t i = 2; i <= counts[a]; ++i) r /= i;
    return r;
}

}  // namespace

TypeVector empirical_type(const Sequence& x, int alphabet_size) {
    detail::require(alphabet_size >= 1, "alphabet size must be positive");
    detail::require(x.n() >= 1, "empty sequence has no type");
    TypeVector t;
    t.n = x.n();
    t.counts.assign(alphabet_size, 0);
    for (std::uint8_t s : x.sym) {
        detail::require(s < alphabet_size, "symbol outside the alphabet");
        ++t.counts[s];
    }
    return t;
}

bool is_typical(const Sequence& x, const Pmf& p, double eps) {
    detail::require(eps >= 0.0 && std::isfinite(eps), "typicality slack must be non-negative");
    const TypeVector t = empirical_type(x, p.size());
    const double n = static_cast<double>(t.n);
    for (int a = 0; a < p.size(); ++a) {
        const double q = p.at(a);
        if (q <= 0.0) {
            if (t.counts[a] != 0) return false;
            continue;
        }
        if (std::fabs(static_cast<double>(t.counts[a]) / n - q) > eps * q) return false;
    }
    return true;
}

bool is_jointly_typical(const Sequence& x, const Sequence& y, const Pmf& p,
                        const Dmc& w, double eps) {
    detail::require(eps >= 0.0 && std::isfinite(eps), "typicality slack must be non-negative");
    detail::require(x.n() == y.n(), "sequence lengths differ");
    detail::require(x.n() >= 1, "empty sequence has no type");
    detail::require(p.size() == w.input_size(),
                    "input law dimension does not match channel input alphabet");
    const int ny = w.output_size();
    std::vector<std::int64_t> cnt(static_cast<std::size_t>(p.size()) * ny, 0);
    for (int i = 0; i < x.n(); ++i) {
        detail::require(x.sym[i] < p.size(), "symbol outside the input alphabet");
        detail::require(y.sym[i] < ny, "symbol outside the output alphabet");
        ++cnt[x.sym[i] * ny + y.sym[i]];
    }
    const double n = static_cast<double>(x.n());
    for (int a = 0; a < p.size(); ++a)
        for (int b = 0; b < ny; ++b) {
            const double q = p.at(a) * w.at(a, b);
            const std::int64_t c = cnt[a * ny + b];
            if (q <= 0.0) {
                if (c != 0) return false;
                continue;
            }
            if (std::fabs(static_cast<double>(c) / n - q) > eps * q) return false;
        }
    return true;
}

big_int type_class_size(const TypeVector& t) {
    check_type(t);
    return multinomial(t.n, t.counts.data(), t.counts.size());
}

double log_type_class_size(const TypeVector& t) {
    check_type(t);
    double r = std::lgamma(static_cast<double>(t.n) + 1.0);
    for (std::int64_t c : t.counts) r -= std::lgamma(static_cast<double>(c) + 1.0);
    return r;
}

std::vector<Sequence> enumerate_type_class(const TypeVector& t, std::int64_t max_elements) {
    check_type(t);
    detail::require(t.counts.size() <= 256, "alphabet too large for byte symbols");
    const big_int size = type_class_size(t);
    if (size > max_elements)
        throw BudgetError("type class enumeration budget exceeded");

    Sequence base;
    base.sym.reserve(t.n);
    for (std::size_t a = 0; a < t.counts.size(); ++a)
        for (std::int64_t r = 0; r < t.counts[a]; ++r)
            base.sym.push_back(static_cast<std::uint8_t>(a));

    std::vector<Sequence> out;
    out.reserve(size.convert_to<std::size_t>());
    do {
        out.push_back(base);
    } while (std::next_permutation(base.sym.begin(), base.sym.end()));
    return out;
}

std::vector<EquitypeTerm> equitype_decompose(const Dmc& w, const TypeVector& t,
                                             std::int64_t term_budget) {
    check_type(t);
    detail::require(static_cast<int>(t.counts.size()) == w.input_size(),
                    "type dimension does not match channel input alphabet");
    const int nx = w.input_size();
    const int ny = w.output_size();

    big_int total_terms = 1;
    for (int a = 0; a < nx; ++a) {
        std::vector<std::int64_t> comp{t.counts[a] + ny - 1, 0};
        comp[1] = ny - 1;
        comp[0] -= comp[1];
        total_terms *= multinomial(t.counts[a] + ny - 1, comp.data(), comp.size());
    }
    if (total_terms > term_budget)
        throw BudgetError("equitype decomposition budget exceeded");

    // Per input symbol, all compositions of its count into |Y| parts,
    // in lexicographic order.
    std::vector<std::vector<std::vector<std::int64_t>>> comps(nx);
    for (int a = 0; a < nx; ++a) {
        std::vector<std::int64_t> cur(ny, 0);
        std::function<void(int, std::int64_t)> rec = [&](int b, std::int64_t left) {
            if (b == ny - 1) {
                cur[b] = left;
                comps[a].push_back(cur);
                return;
            }
            for (std::int64_t k = 0; k <= left; ++k) {
                cur[b] = k;
                rec(b + 1, left - k);
            }
        };
        rec(0, t.counts[a]);
    }

    std::vector<EquitypeTerm> out;
    std::vector<std::size_t> pick(nx, 0);
    for (;;) {
        EquitypeTerm term;
        term.counts.assign(nx * ny, 0);
        term.v.assign(nx * ny, 0.0);
        term.l = 1;
        double prob = 1.0;
        for (int a = 0; a < nx; ++a) {
            const auto& k = comps[a][pick[a]];
            term.l *= multinomial(t.counts[a], k.data(), k.size());
            for (int b = 0; b < ny; ++b) {
                term.counts[a * ny + b] = k[b];
                if (t.counts[a] > 0)
                    term.v[a * ny + b] =
                        static_cast<double>(k[b]) / static_cast<double>(t.counts[a]);
                for (std::int64_t r = 0; r < k[b]; ++r) prob *= w.at(a, b);
            }
        }
        if (prob > 0.0) {
            term.c = term.l.convert_to<double>() * prob;
            out.push_back(std::move(term));
        }
        int a = nx - 1;
        while (a >= 0 && ++pick[a] == comps[a].size()) pick[a--] = 0;
        if (a < 0) break;
    }
    return out;
}

LType l_type_approximate(const Pmf& q, std::int64_t l, Crng& g) {
    detail::require(l >= 1, "draw count must be positive");
    LType t;
    t.l = l;
    t.counts.assign(q.size(), 0);
    for (std::int64_t i = 0; i < l; ++i) ++t.counts[g.sample_cdf(q.cdf())];
    return t;
}

double typicality_delta(double u, const Pmf& p, const Dmc& w) {
    return u * joint_input_output_entropy(p, w);
}

bool check_eps(const Pmf& p, const Dmc& w, double rate_bin, double eps) {
    detail::require(eps > 0.0 && std::isfinite(eps), "typicality slack must be positive");
    return 2.0 * typicality_delta(eps, p, w) < mutual_information(p, w) - rate_bin;
}

}  // namespace idbc
