#pragma once

// Entropy and mutual-information computations, capacity via Blahut-Arimoto
// with a duality-gap certificate, and rate-region membership/boundary
// queries. All quantities are in nats.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "idbc/channel.hpp"
#include "idbc/pmf.hpp"

namespace idbc {

double entropy(const Pmf& p);

// H(PW), the entropy of the output distribution.
double output_entropy(const Pmf& p, const Dmc& w);

// H(P x W), the entropy of the joint input/output law.
double joint_input_output_entropy(const Pmf& p, const Dmc& w);

double mutual_information(const Pmf& p, const Dmc& w);

// I(P x W_Y ; Wz~) for a conditional law on (x,y) pairs; undefined rows
// carry zero input mass and are skipped.
double pair_input_mutual_information(const Pmf& p, const Dmc& w_y,
                                     const ConditionalZ& tilde_z);

inline double nats_to_bits(double nats) { return nats / 0.6931471805599453; }

struct CapacityResult {
    double value = 0.0;  // midpoint of [lower, upper]
    Pmf maximizer;
    double lower = 0.0;
    double upper = 0.0;
    double gap = 0.0;
    int iterations = 0;
    bool converged = false;
};

CapacityResult capacity(const Dmc& w, double tol = 1e-9, int max_iter = 20000);

enum class RegionKind {
    dmc_capacity,
    bc_avg,
    bc3_inner,
    bc3_outer,
    bc_common,
    fb_two_sided,
    fb_one_sided_inner,
    fb_one_sided_outer,
    common_randomness,
};

RegionKind parse_region_kind(std::string_view name);
std::string_view region_kind_name(RegionKind kind);

// Number of rate coordinates a membership query for this kind expects.
int region_rate_count(RegionKind kind);

struct RegionQuery {
    RegionKind kind = RegionKind::dmc_capacity;
    std::vector<double> rates;
};

enum class Verdict { outside, inside, boundary };

struct RegionAnswer {
    bool inside = false;
    Verdict verdict = Verdict::outside;
    double slack = 0.0;  // max over input laws of min_j (bound_j - rate_j)
    std::vector<double> witness;          // maximizing input law (flattened)
    std::vector<double> constraint_values;  // per-rate bound at the witness
};

struct RegionOptions {
    int multistarts = 24;
    int max_iter = 400;
    double tol = 1e-10;
    std::uint64_t seed = 0x6a09e667f3bcc908ULL;
    // Auxiliary alphabet size for the common-randomness region; 0 means
    // unspecified, which region_membership rejects for that kind.
    int u_size = 0;
};

// Maximizes the minimum slack over the input simplex. The per-rate bounds
// are concave in the input law, so projected-gradient ascent with multistart
// seeding certifies membership; inside <=> slack >= -1e-6, and |slack| within
// 1e-6 reports the boundary verdict.
RegionAnswer region_membership(const Channel& ch, const RegionQuery& q,
                               const RegionOptions& opt = {});

struct BoundaryPoint {
    std::vector<double> rates;  // achieved per-rate bounds (rectangle corner)
    std::vector<double> input;  // the input law that achieves them
};

// Scalarizes the per-rate bounds with direction weights on a grid and
// maximizes each weighted sum; every returned corner is a member.
std::vector<BoundaryPoint> region_boundary(const Channel& ch, RegionKind kind,
                                           int grid_resolution,
                                           const RegionOptions& opt = {});

// Membership in the two-system union region over joint laws on U x X with
// |U| = u_size. The objective is not concave in the stacked parameters, so
// the answer is an inner approximation; larger u_size can only grow it.
RegionAnswer cr_region_membership(const Bc2& bc, const std::vector<double>& rates,
                                  int u_size, const RegionOptions& opt = {});

}  // namespace idbc
