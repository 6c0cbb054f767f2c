#pragma once

// Method-of-types machinery: empirical types, multiplicative eps-typicality,
// exact type-class combinatorics, the equitype channel decomposition, and the
// random L-type approximation.

#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "idbc/channel.hpp"
#include "idbc/pmf.hpp"
#include "idbc/rng.hpp"

namespace idbc {

using big_int = boost::multiprecision::cpp_int;

struct TypeVector {
    int n = 0;
    std::vector<std::int64_t> counts;
};

// Empirical distribution of L i.i.d. draws over a finite support;
// weights[i] = counts[i] / L.
struct LType {
    std::int64_t l = 0;
    std::vector<std::int64_t> counts;

    std::vector<double> weights() const {
        std::vector<double> w(counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i)
            w[i] = static_cast<double>(counts[i]) / static_cast<double>(l);
        return w;
    }
};

TypeVector empirical_type(const Sequence& x, int alphabet_size);

// |N(a|x)/n - p(a)| <= eps * p(a) for every symbol a; symbols with p(a) = 0
// must not occur. Note eps >= 1 makes the lower window vacuous.
bool is_typical(const Sequence& x, const Pmf& p, double eps);

// Typicality of the pair sequence over X x Y against the joint pmf
// cell(a,b) = p(a) * w(b|a).
bool is_jointly_typical(const Sequence& x, const Sequence& y, const Pmf& p,
                        const Dmc& w, double eps);

big_int type_class_size(const TypeVector& t);
double log_type_class_size(const TypeVector& t);

// All sequences of a given type, in lexicographic order. Intended for small
// classes (tests and exact probes); throws BudgetError beyond max_elements.
std::vector<Sequence> enumerate_type_class(const TypeVector& t,
                                           std::int64_t max_elements = 1 << 20);

// One term of the decomposition W^n(y|x) = sum_V c_V * W_{V|P}(y|x) over
// conditional types V of y given an x of type t. W_{V|P}(.|x) is uniform on
// the conditional type class, whose exact size is l; hence for any y with
// conditional counts k, W^n(y|x) = c / l.
struct EquitypeTerm {
    std::vector<std::int64_t> counts;  // k[a*|Y|+b], row sums = t.counts[a]
    std::vector<double> v;             // V(b|a) = k[a,b] / t.counts[a] (0 rows stay 0)
    double c = 0.0;
    big_int l;
};

std::vector<EquitypeTerm> equitype_decompose(const Dmc& w, const TypeVector& t,
                                             std::int64_t term_budget = 1 << 20);

// Empirical distribution of L i.i.d. draws from q (q lives on an enumerated
// type class; only the weights matter here). Reproducible from the stream.
LType l_type_approximate(const Pmf& q, std::int64_t l, Crng& g);

// delta(u) = u * H(P x W), the typicality slack rate.
double typicality_delta(double u, const Pmf& p, const Dmc& w);

// Validates 2*delta(eps) < I(P,W) - rate_bin.
bool check_eps(const Pmf& p, const Dmc& w, double rate_bin, double eps);

}  // namespace idbc
