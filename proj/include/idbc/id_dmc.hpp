#pragma once

// Single-user identification code: pool/bin generation, stochastic encoder,
// typicality decoder, exact and Monte Carlo error evaluation, and the
// index-set concentration diagnostics.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "idbc/channel.hpp"
#include "idbc/pmf.hpp"
#include "idbc/rng.hpp"

namespace idbc {

struct IdParams {
    int n = 1;
    std::int64_t m_count = 1;
    double pool_rate = 0.0;  // nats; pool size = round(e^{n * pool_rate})
    double bin_rate = 0.0;   // nats; selection prob = e^{-n (pool_rate - bin_rate)}
    Pmf input_pmf;
    double eps = 0.25;  // typicality slack; >= 1 drops the lower windows
    std::uint64_t seed = 0;
};

std::int64_t id_pool_size(const IdParams& params);
double id_p_sel(const IdParams& params);

// (1/n) ln ln m, reported only for m >= 3 where the double log is positive.
std::optional<double> empirical_id_rate(int n, std::int64_t m_count);

// Suggested typicality slack: a quarter of the (I - bin_rate) margin scaled
// by the joint entropy, so 2 * eps * H(P x W) sits at half the margin.
double default_eps(const Pmf& p, const Dmc& w, double bin_rate);

// Advisory flags (empty = clean): bin_rate vs I(P,W), bin_rate vs pool_rate,
// and the 2 eps H(P x W) < I(P,W) - bin_rate slack condition. Builders do
// not enforce these; sweep configs must be clean before running.
std::vector<std::string> validate_dmc_params(const IdParams& params, const Dmc& w);

struct IdCodeDmc {
    IdParams params;
    std::vector<Sequence> pool;
    std::vector<std::vector<std::uint32_t>> index_sets;  // strictly increasing
    std::uint32_t v_star = 0;  // empty-bin fallback index
};

IdCodeDmc build_dmc_code(const IdParams& params,
                         std::int64_t memory_budget_bytes = std::int64_t{1} << 28);

// Uniform over the message's index set; empty set falls back to pool[v_star].
Sequence encode_dmc(const IdCodeDmc& code, std::int64_t m, Crng& g);

// True iff some pool element of index_set(m_prime) is jointly eps-typical
// with y under input_pmf x W.
bool decode_accepts(const IdCodeDmc& code, const Dmc& w, std::int64_t m_prime,
                    const Sequence& y);

enum class EvalMode { exact, monte_carlo };

struct EvalOptions {
    EvalMode mode = EvalMode::exact;
    std::uint64_t trials = 100000;  // per source message in Monte Carlo mode
    std::uint64_t seed = 0;         // 0 derives the stream from the code seed
    std::int64_t state_budget = std::int64_t{1} << 24;  // |Y|^n cap in exact mode
    std::int64_t pair_cap = 64;      // all ordered pairs up to this m_count
    std::int64_t pair_sample = 2048;  // sampled ordered pairs beyond the cap
    double z = 1.96;                  // Wilson interval quantile
};

struct PairEntry {
    std::int64_t m = 0;
    std::int64_t m_prime = 0;
    double value = 0.0;
    double halfwidth = 0.0;
};

struct ErrorReport {
    std::vector<double> missed;            // per message
    std::vector<double> missed_halfwidth;  // zero in exact mode
    std::vector<PairEntry> wrong;          // ordered pairs m != m_prime
    double max_missed = 0.0;
    double max_wrong = 0.0;
    std::string method;  // "exact", "typed+mc", or "monte-carlo(N)"
    std::uint64_t trials = 0;
    bool pair_sampled = false;       // wrong entries are a seeded sample
    bool missed_upper_bound = false;  // typed fallback bounds missed from above
    std::string caveat;
    std::optional<double> empirical_rate;
};

ErrorReport error_report_dmc(const IdCodeDmc& code, const Dmc& w,
                             const EvalOptions& opt = {});

struct GMuDiagnostics {
    double mu = 0.0;
    double delta_n = 0.0;
    double size_lower_bound = 0.0;        // (1 - delta_n) e^{n bin_rate}
    double size_upper_bound = 0.0;        // (1 + delta_n) e^{n bin_rate}
    double intersection_bound = 0.0;      // e^{n (bin_rate - mu/2) + ln 2}
    std::int64_t size_lower_violations = 0;
    std::int64_t size_upper_violations = 0;
    std::int64_t intersection_violations = 0;
    std::int64_t messages_checked = 0;
    std::int64_t pairs_checked = 0;
    bool pair_sampled = false;
    bool pass = false;
};

// Checks the three index-set conditions with delta_n = e^{-n mu / 2}. The
// range requirement mu < pool_rate - bin_rate applies only when p_sel < 1:
// full bins are deterministic and need no concentration slack.
GMuDiagnostics check_G_mu(const IdCodeDmc& code, double mu,
                          std::int64_t pair_budget = 4096);

void save_dmc_code(const IdCodeDmc& code, const std::string& path);
IdCodeDmc load_dmc_code(const std::string& path);

}  // namespace idbc
