#pragma once

// Extensions of the pooled identification construction: the three-receiver
// code, the common-message code, and the two-phase scheme that uses one-sided
// feedback through a short transmission code, plus the causal-encoder type
// concentration check.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "idbc/channel.hpp"
#include "idbc/id_bc.hpp"
#include "idbc/id_dmc.hpp"
#include "idbc/pmf.hpp"
#include "idbc/rng.hpp"

namespace idbc {

// ---- three receivers ----

struct Bc3IdParams {
    int n = 1;
    std::array<std::int64_t, 3> m_counts{1, 1, 1};
    double pool_rate = 0.0;
    std::array<double, 3> bin_rates{0.0, 0.0, 0.0};
    Pmf input_pmf;
    double eps = 0.25;  // shared by all three decoders
    std::uint64_t seed = 0;
};

// Advisory flags analogous to the two-receiver validator. The structural
// requirement 2 * pool_rate < bin-rate sum is flagged here and additionally
// rejected by the builder: without it the triple intersections are expected
// to be empty and the construction degenerates.
std::vector<std::string> validate_bc3_params(const Bc3IdParams& params, const Bc3& bc);

struct Bc3IdCode {
    Bc3IdParams params;
    std::vector<Sequence> pool;
    std::array<std::vector<std::vector<std::uint32_t>>, 3> index_sets;
};

Bc3IdCode build_bc3_code(const Bc3IdParams& params,
                         std::int64_t memory_budget_bytes = std::int64_t{1} << 28);

// Triple index: uniform over the three-way bin intersection when nonempty,
// else uniform over the whole pool; derived deterministically from the seed.
std::uint32_t codeword_index_bc3(const Bc3IdCode& code, std::int64_t m1,
                                 std::int64_t m2, std::int64_t m3);

Sequence encode_bc3(const Bc3IdCode& code, std::int64_t m1, std::int64_t m2,
                    std::int64_t m3);

bool decoder_accepts_bc3(const Bc3IdCode& code, const Dmc& marginal, int receiver,
                         std::int64_t m_prime, const Sequence& observed);

struct Bc3Reports {
    std::array<ErrorReport, 3> receiver;
};

// Per-receiver missed/wrong with the other two messages averaged out
// (uniform over their product), enumerated up to other_cap combinations and
// seeded-subsampled beyond.
Bc3Reports evaluate_bc3(const Bc3IdCode& code, const Bc3& bc,
                        const EvalOptions& opt = {}, std::int64_t other_cap = 4096);

// ---- common message ----

struct CmIdParams {
    int n = 1;
    std::int64_t m_count = 1;    // common message
    std::int64_t m_y_count = 1;  // private to receiver y
    std::int64_t m_z_count = 1;  // private to receiver z
    double pool_rate = 0.0;
    double bin_rate_y = 0.0;
    double bin_rate_z = 0.0;
    Pmf input_pmf;
    double eps = 0.25;
    std::uint64_t seed = 0;
};

std::vector<std::string> validate_cm_params(const CmIdParams& params, const Bc2& bc);

struct CmIdCode {
    CmIdParams params;
    std::vector<Sequence> pool;
    // One bin per joint message, flattened common-major: m * m_side_count + m_side.
    std::vector<std::vector<std::uint32_t>> index_sets_y;
    std::vector<std::vector<std::uint32_t>> index_sets_z;
};

CmIdCode build_cm_code(const CmIdParams& params,
                       std::int64_t memory_budget_bytes = std::int64_t{1} << 28);

// Uniform over the intersection of the two sides' bins for the same common
// message, else uniform over the pool; deterministic per triple.
std::uint32_t codeword_index_cm(const CmIdCode& code, std::int64_t m,
                                std::int64_t m_y, std::int64_t m_z);

Sequence encode_cm(const CmIdCode& code, std::int64_t m, std::int64_t m_y,
                   std::int64_t m_z);

// Each receiver identifies the joint (common, private) pair.
bool decoder_accepts_cm(const CmIdCode& code, const Dmc& marginal, Side side,
                        std::int64_t m_prime, std::int64_t m_side_prime,
                        const Sequence& observed);

// Reports indexed by the flattened joint messages; the other side's private
// message is averaged out while the common message stays shared.
BcSideReports evaluate_cm(const CmIdCode& code, const Bc2& bc,
                          const EvalOptions& opt = {}, std::int64_t other_cap = 4096);

// ---- transmission subcode ----

struct TransmissionCode {
    int k = 1;
    std::int64_t u_count = 1;
    std::vector<Sequence> codebook;  // message -> k-tuple of channel inputs
    Pmf input_pmf;                   // codebook design distribution
    double eps_tc = 2.0;             // decoder typicality slack
    double eps_k = 0.0;              // Monte Carlo max-error estimate
    double eps_k_halfwidth = 0.0;
};

// Random codebook drawn from the information-maximizing input law; the
// decoder looks for the unique jointly typical codeword and maps failures to
// message 0. Rejects rate at or above the channel's information maximum.
TransmissionCode build_transmission_code(const Dmc& w, int k, double rate,
                                         std::uint64_t seed, double eps_tc = 2.0,
                                         std::uint64_t trials = 10000);

std::int64_t transmission_decode(const TransmissionCode& code, const Dmc& w,
                                 const Sequence& y);

// ---- one-sided feedback ----

struct FbIdParams {
    int n = 1;
    std::int64_t m_y_count = 1;
    std::int64_t m_z_count = 1;
    double pool_rate = 0.0;   // above I(P, W_y): the pool saturates the y output law
    double bin_rate_z = 0.0;
    double rate_y_hat = 0.0;  // second-phase transmission rate (nats)
    Pmf input_pmf;
    double eps = 0.25;     // z-side typicality slack
    double eps_tc = 2.0;   // transmission-decoder slack
    std::uint64_t seed = 0;
};

std::vector<std::string> validate_fb_params(const FbIdParams& params, const Bc2& bc);

struct FbIdCode {
    FbIdParams params;
    std::int64_t pool_size = 0;
    bool pool_materialized = false;
    std::vector<Sequence> pool;  // empty when the pool stays lazy
    std::vector<std::vector<std::uint64_t>> index_sets_z;
    std::vector<std::vector<Sequence>> bin_sequences;  // cached codewords per bin
    Sequence v_star_sequence;
    std::uint64_t v_star = 0;
    int k = 1;  // second-phase blocklength, ceil(sqrt(n))
    TransmissionCode tcode;
};

FbIdCode build_fb_code(const FbIdParams& params, const Bc2& bc,
                       std::int64_t memory_budget_bytes = std::int64_t{1} << 28);

// Pool element by index, derived on demand when the pool is lazy.
Sequence fb_pool_element(const FbIdCode& code, std::uint64_t v);

// Keyed map from (first-phase y observation, y message) to the transmission
// message of the second phase; uniform on the transmission messages and
// independent across arguments in the derivation sense.
std::int64_t fb_phi(const FbIdCode& code, const Sequence& y_head, std::int64_t m_y);

struct FbTranscript {
    Sequence x;  // n + k channel inputs
    Sequence y;
    Sequence z;
    std::uint64_t v = 0;  // first-phase pool index
    std::int64_t u = 0;   // second-phase transmission message
};

// Stochastic: draws the pool index uniformly from bin(m_z) (fallback to the
// fixed v_star), sends the first phase, reads the fed-back y observation,
// then sends the keyed transmission codeword.
FbTranscript encode_fb(const FbIdCode& code, std::int64_t m_y, std::int64_t m_z,
                       Crng& g, const Bc2& bc);

// y receiver: decodes the tail and compares against the keyed map of the
// first-phase observation; observed must hold n + k symbols.
bool fb_decoder_accepts_y(const FbIdCode& code, const Dmc& w_y, std::int64_t m_prime,
                          const Sequence& observed);

// z receiver: typicality union over bin(m_prime) on the first n symbols only.
bool fb_decoder_accepts_z(const FbIdCode& code, const Dmc& w_z, std::int64_t m_prime,
                          const Sequence& observed);

// y side identifies m_y with m_z averaged out; the z side's statistics do
// not involve m_y at all. Exact evaluation applies per side where the pool
// and the output spaces fit the budgets and falls back to Monte Carlo
// otherwise (recorded in each report's method).
BcSideReports evaluate_fb(const FbIdCode& code, const Bc2& bc,
                          const EvalOptions& opt = {}, std::int64_t other_cap = 4096);

struct FbIndexDiag {
    std::vector<std::uint64_t> support;  // bin(m_z), or the fallback index
    std::vector<double> p_v;             // law of the encoder's index draw
    std::vector<double> p_ref;           // uniform on the bin / fallback point mass
    double tv = 0.0;
};

// The encoder draws its index directly from bin(m_z), so the distance to the
// uniform reference is exactly zero; computed from the two laws, not assumed.
FbIndexDiag fb_index_distribution(const FbIdCode& code, std::int64_t m_z);

// Total variation between the y output law induced by a uniform pool index
// and the i.i.d. single-letter output law, computed exactly; requires a
// materialized pool and an enumerable output space.
double pool_output_tv(const FbIdCode& code, const Dmc& w_y,
                      std::int64_t state_budget = std::int64_t{1} << 24);

// ---- causal-encoder type concentration ----

// Conditional input law for the next channel use given past inputs and the
// fed-back outputs.
using CausalEncoder = std::function<Pmf(const Sequence& x_past, const Sequence& y_past)>;

struct ConcentrationReport {
    double frequency = 0.0;  // empirical probability of the deviation event
    double bound = 0.0;      // |X| |Y| / (n nu^2), clipped to 1
    double slack = 0.0;      // 3 sigma Monte Carlo allowance
    std::uint64_t trials = 0;
    bool pass = false;
};

// Deviation event: some (x, y) cell of the joint empirical type differs from
// the empirical input type times W by at least sqrt(W(y|x)) * nu. Cells with
// W(y|x) = 0 never deviate (both sides vanish).
ConcentrationReport fb_type_concentration_check(const CausalEncoder& encoder,
                                                const Dmc& w, int n, double nu,
                                                std::uint64_t trials,
                                                std::uint64_t seed);

}  // namespace idbc
