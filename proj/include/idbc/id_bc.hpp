#pragma once

// Two-receiver broadcast identification code: shared codeword pool, per-side
// index sets, deterministic encoder via lazily derived pair indices, per-side
// typicality decoders, average- and maximum-error evaluation, and the
// index-distribution diagnostic.

#include <cstdint>
#include <string>
#include <vector>

#include "idbc/channel.hpp"
#include "idbc/id_dmc.hpp"
#include "idbc/pmf.hpp"
#include "idbc/rng.hpp"

namespace idbc {

enum class Side { y = 0, z = 1 };

struct BcIdParams {
    int n = 1;
    std::int64_t m_y_count = 1;
    std::int64_t m_z_count = 1;
    double pool_rate = 0.0;
    double bin_rate_y = 0.0;  // nats
    double bin_rate_z = 0.0;  // nats
    Pmf input_pmf;
    double eps = 0.25;  // shared by both decoders
    std::uint64_t seed = 0;
};

// Advisory flags (empty = clean): per-side bin rate vs I(P, W_side), per-side
// bin rate vs pool rate, pool rate vs the bin-rate sum, per-side typicality
// slack, and per-side empirical ID rate. Builders do not enforce these.
std::vector<std::string> validate_bc_params(const BcIdParams& params, const Bc2& bc);

struct BcIdCode {
    BcIdParams params;
    std::vector<Sequence> pool;
    std::vector<std::vector<std::uint32_t>> index_sets_y;
    std::vector<std::vector<std::uint32_t>> index_sets_z;
};

BcIdCode build_bc_code(const BcIdParams& params,
                       std::int64_t memory_budget_bytes = std::int64_t{1} << 28);

// Pair index: uniform over the intersection of the two bins when nonempty,
// else uniform over the whole pool; derived deterministically from the seed,
// never stored.
std::uint32_t codeword_index(const BcIdCode& code, std::int64_t m_y, std::int64_t m_z);

// Deterministic: repeated calls return the identical codeword.
Sequence encode_bc(const BcIdCode& code, std::int64_t m_y, std::int64_t m_z);

// marginal must be the matching single-receiver view of the broadcast
// channel (marginal_y for Side::y, marginal_z for Side::z).
bool decoder_accepts(const BcIdCode& code, const Dmc& marginal, Side side,
                     std::int64_t m_prime, const Sequence& observed);

struct BcSideReports {
    ErrorReport y;
    ErrorReport z;
};

// Per-side missed/wrong with the other side's message averaged out
// (uniform). Exact mode enumerates the side's output space and throws
// BudgetError past the state budget; averaging enumerates the other side up
// to other_cap messages and switches to a seeded subsample with recorded
// half-widths beyond it.
BcSideReports avg_error_report_bc(const BcIdCode& code, const Bc2& bc,
                                  const EvalOptions& opt = {},
                                  std::int64_t other_cap = 4096);

// Worst case over the other side's message instead of the average;
// entrywise at least the matching average-error quantity.
BcSideReports max_error_report_bc(const BcIdCode& code, const Bc2& bc,
                                  const EvalOptions& opt = {},
                                  std::int64_t other_cap = 4096);

struct IndexDistributionDiag {
    std::vector<double> p_v;    // pair-index law over the pool, other side uniform
    std::vector<double> p_ref;  // uniform on the side's bin; point mass on 0 if empty
    double tv = 0.0;            // total variation between the two, exact over the pool
    bool sampled = false;       // other side subsampled past the enumeration budget
    std::int64_t other_checked = 0;
};

IndexDistributionDiag index_distribution_diag(const BcIdCode& code, Side side,
                                              std::int64_t m,
                                              std::int64_t enumeration_budget =
                                                  std::int64_t{1} << 20);

void save_bc_code(const BcIdCode& code, const std::string& path);
BcIdCode load_bc_code(const std::string& path);

}  // namespace idbc
