#pragma once

// Internal helpers shared by the ID-code evaluators: exhaustive output-space
// accumulation and Monte Carlo interval arithmetic. Not part of the public
// headers.

#include <cstdint>
#include <vector>

#include "idbc/channel.hpp"
#include "idbc/pmf.hpp"

namespace idbc::detail {

// One component of a codeword mixture: pool index plus probability weight.
struct Atom {
    std::uint64_t v = 0;
    double weight = 0.0;
};

// accept[s][t] = sum over all y in Y^n of Q_s(y) 1{y in D_t}, where Q_s is
// the mixture law of source s over pool elements and D_t is the typicality
// union over target t's index list (slack eps against p x w). Throws
// BudgetError when |Y|^n exceeds state_budget.
std::vector<std::vector<double>> exact_accept_matrix(
    const std::vector<Sequence>& pool, const std::vector<std::vector<Atom>>& sources,
    const std::vector<const std::vector<std::uint32_t>*>& targets, const Pmf& p,
    const Dmc& w, double eps, int n, std::int64_t state_budget);

// Same accumulation for 64-bit index lists (lazily derived pools).
std::vector<std::vector<double>> exact_accept_matrix64(
    const std::vector<Sequence>& pool, const std::vector<std::vector<Atom>>& sources,
    const std::vector<const std::vector<std::uint64_t>*>& targets, const Pmf& p,
    const Dmc& w, double eps, int n, std::int64_t state_budget);

double wilson_halfwidth(std::uint64_t k, std::uint64_t n, double z);

// P((x, Y) jointly eps-typical | x) under W rows, exactly, from the
// per-input-symbol multinomial window probabilities.
double own_typicality_prob(const Sequence& x, const Pmf& p, const Dmc& w, double eps);

// Number of states |Y|^n, saturating at cap + 1.
std::int64_t output_space_size(int output_size, int n, std::int64_t cap);

}  // namespace idbc::detail
