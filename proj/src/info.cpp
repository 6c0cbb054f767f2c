#include "idbc/info.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <variant>

#include "idbc/rng.hpp"

namespace idbc {

namespace {

double plogp(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

double entropy_raw(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p) h -= plogp(v);
    return h;
}

// Output law q = pW for a row-major transition matrix.
std::vector<double> output_law_flat(const std::vector<double>& p, const double* rows,
                                    int nx, int ny) {
    std::vector<double> q(ny, 0.0);
    for (int x = 0; x < nx; ++x) {
        if (p[x] <= 0.0) continue;
        for (int y = 0; y < ny; ++y) q[y] += p[x] * rows[x * ny + y];
    }
    return q;
}

double mi_flat(const std::vector<double>& p, const double* rows, int nx, int ny) {
    const std::vector<double> q = output_law_flat(p, rows, nx, ny);
    double s = 0.0;
    for (int x = 0; x < nx; ++x) {
        if (p[x] <= 0.0) continue;
        for (int y = 0; y < ny; ++y) {
            const double wxy = rows[x * ny + y];
            if (wxy <= 0.0) continue;
            s += p[x] * wxy * std::log(wxy / q[y]);
        }
    }
    return s > 0.0 ? s : 0.0;
}

double mi_raw(const std::vector<double>& p, const Dmc& w) {
    return mi_flat(p, w.rows().data(), w.input_size(), w.output_size());
}

double output_entropy_raw(const std::vector<double>& p, const Dmc& w) {
    return entropy_raw(output_law_flat(p, w.rows().data(), w.input_size(), w.output_size()));
}

void check_dims(const Pmf& p, const Dmc& w) {
    detail::require(static_cast<int>(p.size()) == w.input_size(),
                    "input law dimension does not match channel input alphabet");
}

// Euclidean projection onto the probability simplex (sort-based).
void project_to_simplex(double* v, int k) {
    std::vector<double> u(v, v + k);
    std::sort(u.begin(), u.end(), std::greater<>());
    double csum = 0.0;
    double theta = 0.0;
    for (int i = 0; i < k; ++i) {
        csum += u[i];
        const double t = (csum - 1.0) / (i + 1);
        if (u[i] - t > 0.0) theta = t;
    }
    double s = 0.0;
    for (int i = 0; i < k; ++i) {
        v[i] = std::max(0.0, v[i] - theta);
        s += v[i];
    }
    for (int i = 0; i < k; ++i) v[i] /= s;
}

void renormalize_block(double* v, int k) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) {
        if (v[i] < 0.0) v[i] = 0.0;
        s += v[i];
    }
    if (s <= 0.0) {
        for (int i = 0; i < k; ++i) v[i] = 1.0 / k;
        return;
    }
    for (int i = 0; i < k; ++i) v[i] /= s;
}

struct AscentResult {
    double value = -std::numeric_limits<double>::infinity();
    std::vector<double> x;
};

// Projected-gradient ascent over a product of simplices (block offsets are
// cumulative over block_lens). Gradients come from central differences of
// the block-renormalized extension, so probes stay feasible.
AscentResult maximize_product_simplex(const std::function<double(const std::vector<double>&)>& f,
                                      const std::vector<int>& block_lens,
                                      std::vector<double> x, int max_iter, double tol) {
    std::vector<int> offs(block_lens.size());
    int total = 0;
    for (std::size_t b = 0; b < block_lens.size(); ++b) {
        offs[b] = total;
        total += block_lens[b];
    }
    for (std::size_t b = 0; b < block_lens.size(); ++b)
        project_to_simplex(x.data() + offs[b], block_lens[b]);
    double fx = f(x);

    const double h = 1e-6;
    double step = 0.25;
    std::vector<double> g(total), probe, y;
    for (int it = 0; it < max_iter; ++it) {
        for (std::size_t b = 0; b < block_lens.size(); ++b) {
            for (int i = 0; i < block_lens[b]; ++i) {
                const int idx = offs[b] + i;
                probe = x;
                probe[idx] += h;
                renormalize_block(probe.data() + offs[b], block_lens[b]);
                const double fp = f(probe);
                probe = x;
                probe[idx] = std::max(0.0, probe[idx] - h);
                renormalize_block(probe.data() + offs[b], block_lens[b]);
                const double fm = f(probe);
                g[idx] = (fp - fm) / (2.0 * h);
            }
        }
        double gnorm = 0.0;
        for (double v : g) gnorm = std::max(gnorm, std::fabs(v));
        if (gnorm == 0.0) break;

        bool improved = false;
        for (double s = step; s >= 1e-13; s *= 0.5) {
            y = x;
            for (int i = 0; i < total; ++i) y[i] += (s / gnorm) * g[i];
            for (std::size_t b = 0; b < block_lens.size(); ++b)
                project_to_simplex(y.data() + offs[b], block_lens[b]);
            const double fy = f(y);
            if (fy > fx) {
                const double gain = fy - fx;
                x = std::move(y);
                fx = fy;
                improved = true;
                step = std::min(0.5, s * 2.0);
                if (gain < tol) it = max_iter;  // converged
                break;
            }
        }
        if (!improved) break;
    }
    return {fx, std::move(x)};
}

// Deterministic start list: uniform, smoothed vertices, supplied structured
// starts, then seeded Dirichlet fills. Ties keep the earliest start.
AscentResult multistart_maximize(const std::function<double(const std::vector<double>&)>& f,
                                 const std::vector<int>& block_lens,
                                 const std::vector<std::vector<double>>& structured,
                                 const RegionOptions& opt) {
    int total = 0;
    for (int b : block_lens) total += b;
    std::vector<std::vector<double>> starts;
    starts.emplace_back(total, 1.0);  // projected to uniform per block
    for (const auto& s : structured)
        if (static_cast<int>(s.size()) == total) starts.push_back(s);
    if (block_lens.size() == 1) {
        for (int i = 0; i < block_lens[0]; ++i) {
            std::vector<double> v(total, 0.04);
            v[i] = 1.0;
            starts.push_back(std::move(v));
        }
    }
    int fills = std::max(0, opt.multistarts - static_cast<int>(starts.size()));
    for (int r = 0; r < fills; ++r) {
        Crng g = make_stream(opt.seed, StreamTag::misc, {static_cast<std::uint64_t>(r)});
        std::vector<double> v(total);
        for (double& e : v) e = -std::log(g.next_double() + 1e-300);
        starts.push_back(std::move(v));
    }

    AscentResult best;
    for (const auto& s0 : starts) {
        AscentResult r = maximize_product_simplex(f, block_lens, s0, opt.max_iter, opt.tol);
        if (r.value > best.value) best = std::move(r);
    }
    return best;
}

bool positive_capacity(const Dmc& w) { return capacity(w, 1e-11, 5000).value > 1e-9; }

// Per-rate upper bounds as a function of the input law; bounds with several
// clauses are min-folded so slack stays a min over rate coordinates.
struct BoundSet {
    int dim = 0;
    int rate_count = 0;
    std::function<std::vector<double>(const std::vector<double>&)> bounds;
};

const Dmc& expect_dmc(const Channel& ch, RegionKind kind) {
    const Dmc* w = std::get_if<Dmc>(&ch);
    detail::require(w != nullptr, std::string(region_kind_name(kind)) +
                                      " region requires a single-receiver channel");
    return *w;
}

const Bc2& expect_bc2(const Channel& ch, RegionKind kind) {
    const Bc2* w = std::get_if<Bc2>(&ch);
    detail::require(w != nullptr, std::string(region_kind_name(kind)) +
                                      " region requires a two-receiver channel");
    return *w;
}

const Bc3& expect_bc3(const Channel& ch, RegionKind kind) {
    const Bc3* w = std::get_if<Bc3>(&ch);
    detail::require(w != nullptr, std::string(region_kind_name(kind)) +
                                      " region requires a three-receiver channel");
    return *w;
}

BoundSet build_bound_set(const Channel& ch, RegionKind kind) {
    BoundSet bs;
    switch (kind) {
        case RegionKind::dmc_capacity: {
            const Dmc w = expect_dmc(ch, kind);
            bs.dim = w.input_size();
            bs.rate_count = 1;
            bs.bounds = [w](const std::vector<double>& p) {
                return std::vector<double>{mi_raw(p, w)};
            };
            break;
        }
        case RegionKind::bc_avg: {
            const Bc2& bc = expect_bc2(ch, kind);
            const Dmc wy = bc.marginal_y();
            const Dmc wz = bc.marginal_z();
            bs.dim = bc.input_size();
            bs.rate_count = 2;
            bs.bounds = [wy, wz](const std::vector<double>& p) {
                return std::vector<double>{mi_raw(p, wy), mi_raw(p, wz)};
            };
            break;
        }
        case RegionKind::bc3_inner:
        case RegionKind::bc3_outer: {
            const Bc3& bc = expect_bc3(ch, kind);
            const Dmc w1 = bc.marginal(0);
            const Dmc w2 = bc.marginal(1);
            const Dmc w3 = bc.marginal(2);
            bs.dim = bc.input_size();
            bs.rate_count = 3;
            const bool inner = kind == RegionKind::bc3_inner;
            bs.bounds = [w1, w2, w3, inner](const std::vector<double>& p) {
                const double i1 = mi_raw(p, w1);
                const double i2 = mi_raw(p, w2);
                const double i3 = mi_raw(p, w3);
                if (!inner) return std::vector<double>{i1, i2, i3};
                return std::vector<double>{std::min(i1, i2 + i3), std::min(i2, i1 + i3),
                                           std::min(i3, i1 + i2)};
            };
            break;
        }
        case RegionKind::bc_common: {
            const Bc2& bc = expect_bc2(ch, kind);
            const Dmc wy = bc.marginal_y();
            const Dmc wz = bc.marginal_z();
            bs.dim = bc.input_size();
            bs.rate_count = 3;  // (common, y, z)
            bs.bounds = [wy, wz](const std::vector<double>& p) {
                const double iy = mi_raw(p, wy);
                const double iz = mi_raw(p, wz);
                return std::vector<double>{std::min(iy, iz), iy, iz};
            };
            break;
        }
        case RegionKind::fb_two_sided: {
            const Bc2& bc = expect_bc2(ch, kind);
            const Dmc wy = bc.marginal_y();
            const Dmc wz = bc.marginal_z();
            const double ind_y = positive_capacity(wy) ? 1.0 : 0.0;
            const double ind_z = positive_capacity(wz) ? 1.0 : 0.0;
            bs.dim = bc.input_size();
            bs.rate_count = 2;
            bs.bounds = [wy, wz, ind_y, ind_z](const std::vector<double>& p) {
                return std::vector<double>{ind_y * output_entropy_raw(p, wy),
                                           ind_z * output_entropy_raw(p, wz)};
            };
            break;
        }
        case RegionKind::fb_one_sided_inner: {
            const Bc2& bc = expect_bc2(ch, kind);
            const Dmc wy = bc.marginal_y();
            const Dmc wz = bc.marginal_z();
            const double ind_y = positive_capacity(wy) ? 1.0 : 0.0;
            bs.dim = bc.input_size();
            bs.rate_count = 2;
            bs.bounds = [wy, wz, ind_y](const std::vector<double>& p) {
                return std::vector<double>{ind_y * output_entropy_raw(p, wy), mi_raw(p, wz)};
            };
            break;
        }
        case RegionKind::fb_one_sided_outer: {
            const Bc2& bc = expect_bc2(ch, kind);
            const Dmc wy = bc.marginal_y();
            const Dmc wz = bc.marginal_z();
            const ConditionalZ tz = conditional_z_given_xy(bc);
            const double ind_y = positive_capacity(wy) ? 1.0 : 0.0;
            const double ind_z = positive_capacity(wz) ? 1.0 : 0.0;
            bs.dim = bc.input_size();
            bs.rate_count = 2;
            bs.bounds = [wy, tz, ind_y, ind_z](const std::vector<double>& p) {
                double iz = 0.0;
                if (ind_z > 0.0) {
                    // I over the pair input (x,y) ~ p(x) Wy(y|x).
                    const int nx = wy.input_size();
                    const int ny = wy.output_size();
                    const int nz = tz.z_size;
                    std::vector<double> q(nz, 0.0);
                    for (int x = 0; x < nx; ++x)
                        for (int y = 0; y < ny; ++y) {
                            const double mass = p[x] * wy.at(x, y);
                            if (mass <= 0.0 || !tz.is_defined(x, y)) continue;
                            for (int z = 0; z < nz; ++z) q[z] += mass * tz.at(x, y, z);
                        }
                    for (int x = 0; x < nx; ++x)
                        for (int y = 0; y < ny; ++y) {
                            const double mass = p[x] * wy.at(x, y);
                            if (mass <= 0.0 || !tz.is_defined(x, y)) continue;
                            for (int z = 0; z < nz; ++z) {
                                const double t = tz.at(x, y, z);
                                if (t > 0.0) iz += mass * t * std::log(t / q[z]);
                            }
                        }
                    if (iz < 0.0) iz = 0.0;
                }
                return std::vector<double>{ind_y * output_entropy_raw(p, wy), ind_z * iz};
            };
            break;
        }
        case RegionKind::common_randomness:
            detail::require(false, "common-randomness membership is handled separately");
    }
    return bs;
}

void check_rates(const std::vector<double>& rates, int expected) {
    detail::require(static_cast<int>(rates.size()) == expected,
                    "rate tuple size does not match the region kind");
    for (double r : rates)
        detail::require(std::isfinite(r) && r >= 0.0, "rates must be finite and non-negative");
}

RegionAnswer finish_answer(double slack, std::vector<double> witness,
                           std::vector<double> bounds_at_witness) {
    RegionAnswer ans;
    ans.slack = slack;
    ans.inside = slack >= -1e-6;
    ans.verdict = std::fabs(slack) <= 1e-6 ? Verdict::boundary
                                           : (slack > 0.0 ? Verdict::inside : Verdict::outside);
    ans.witness = std::move(witness);
    ans.constraint_values = std::move(bounds_at_witness);
    return ans;
}

}  // namespace

double entropy(const Pmf& p) { return entropy_raw(p.probs()); }

double output_entropy(const Pmf& p, const Dmc& w) {
    check_dims(p, w);
    return output_entropy_raw(p.probs(), w);
}

double joint_input_output_entropy(const Pmf& p, const Dmc& w) {
    check_dims(p, w);
    double h = 0.0;
    for (int x = 0; x < w.input_size(); ++x)
        for (int y = 0; y < w.output_size(); ++y) h -= plogp(p.at(x) * w.at(x, y));
    return h;
}

double mutual_information(const Pmf& p, const Dmc& w) {
    check_dims(p, w);
    return mi_raw(p.probs(), w);
}

double pair_input_mutual_information(const Pmf& p, const Dmc& w_y, const ConditionalZ& tz) {
    check_dims(p, w_y);
    detail::require(w_y.output_size() == tz.y_size,
                    "conditional law does not match the pair input alphabet");
    const int nx = w_y.input_size();
    const int ny = w_y.output_size();
    const int nz = tz.z_size;
    std::vector<double> q(nz, 0.0);
    for (int x = 0; x < nx; ++x)
        for (int y = 0; y < ny; ++y) {
            const double mass = p.at(x) * w_y.at(x, y);
            if (mass <= 0.0 || !tz.is_defined(x, y)) continue;
            for (int z = 0; z < nz; ++z) q[z] += mass * tz.at(x, y, z);
        }
    double s = 0.0;
    for (int x = 0; x < nx; ++x)
        for (int y = 0; y < ny; ++y) {
            const double mass = p.at(x) * w_y.at(x, y);
            if (mass <= 0.0 || !tz.is_defined(x, y)) continue;
            for (int z = 0; z < nz; ++z) {
                const double t = tz.at(x, y, z);
                if (t > 0.0) s += mass * t * std::log(t / q[z]);
            }
        }
    return s > 0.0 ? s : 0.0;
}

CapacityResult capacity(const Dmc& w, double tol, int max_iter) {
    detail::require(tol > 0.0, "capacity tolerance must be positive");
    detail::require(max_iter >= 1, "capacity iteration cap must be positive");
    const int nx = w.input_size();
    const int ny = w.output_size();
    std::vector<double> p(nx, 1.0 / nx), d(nx);

    CapacityResult res;
    double best_lower = -std::numeric_limits<double>::infinity();
    double best_upper = std::numeric_limits<double>::infinity();
    std::vector<double> best_p = p;
    int it = 0;
    for (it = 1; it <= max_iter; ++it) {
        const std::vector<double> q = output_law_flat(p, w.rows().data(), nx, ny);
        double lower = 0.0;
        double upper = -std::numeric_limits<double>::infinity();
        for (int x = 0; x < nx; ++x) {
            double dx = 0.0;
            for (int y = 0; y < ny; ++y) {
                const double wxy = w.at(x, y);
                if (wxy <= 0.0) continue;
                dx += wxy * std::log(wxy / std::max(q[y], 1e-300));
            }
            d[x] = dx;
            lower += p[x] * dx;
            upper = std::max(upper, dx);
        }
        if (lower > best_lower) {
            best_lower = lower;
            best_p = p;
        }
        best_upper = std::min(best_upper, upper);
        if (best_upper - best_lower <= tol) {
            res.converged = true;
            break;
        }
        double zsum = 0.0;
        for (int x = 0; x < nx; ++x) {
            p[x] *= std::exp(d[x] - upper);
            zsum += p[x];
        }
        for (int x = 0; x < nx; ++x) p[x] /= zsum;
    }
    res.iterations = std::min(it, max_iter);
    res.lower = std::max(best_lower, 0.0);
    res.upper = best_upper;
    res.gap = res.upper - res.lower;
    res.value = 0.5 * (res.lower + res.upper);
    double s = std::accumulate(best_p.begin(), best_p.end(), 0.0);
    for (double& v : best_p) v /= s;
    res.maximizer = Pmf(best_p);
    return res;
}

RegionKind parse_region_kind(std::string_view name) {
    if (name == "dmc-capacity") return RegionKind::dmc_capacity;
    if (name == "bc-avg") return RegionKind::bc_avg;
    if (name == "bc3-inner") return RegionKind::bc3_inner;
    if (name == "bc3-outer") return RegionKind::bc3_outer;
    if (name == "bc-common") return RegionKind::bc_common;
    if (name == "fb-two-sided") return RegionKind::fb_two_sided;
    if (name == "fb-one-sided-inner") return RegionKind::fb_one_sided_inner;
    if (name == "fb-one-sided-outer") return RegionKind::fb_one_sided_outer;
    if (name == "common-randomness") return RegionKind::common_randomness;
    throw std::invalid_argument("unknown region kind: " + std::string(name));
}

std::string_view region_kind_name(RegionKind kind) {
    switch (kind) {
        case RegionKind::dmc_capacity: return "dmc-capacity";
        case RegionKind::bc_avg: return "bc-avg";
        case RegionKind::bc3_inner: return "bc3-inner";
        case RegionKind::bc3_outer: return "bc3-outer";
        case RegionKind::bc_common: return "bc-common";
        case RegionKind::fb_two_sided: return "fb-two-sided";
        case RegionKind::fb_one_sided_inner: return "fb-one-sided-inner";
        case RegionKind::fb_one_sided_outer: return "fb-one-sided-outer";
        case RegionKind::common_randomness: return "common-randomness";
    }
    return "unknown";
}

int region_rate_count(RegionKind kind) {
    switch (kind) {
        case RegionKind::dmc_capacity: return 1;
        case RegionKind::bc3_inner:
        case RegionKind::bc3_outer:
        case RegionKind::bc_common: return 3;
        default: return 2;
    }
}

RegionAnswer region_membership(const Channel& ch, const RegionQuery& q,
                               const RegionOptions& opt) {
    if (q.kind == RegionKind::common_randomness) {
        const Bc2& bc = expect_bc2(ch, q.kind);
        detail::require(opt.u_size >= 1,
                        "common-randomness membership requires an auxiliary alphabet size");
        return cr_region_membership(bc, q.rates, opt.u_size, opt);
    }
    BoundSet bs = build_bound_set(ch, q.kind);
    check_rates(q.rates, bs.rate_count);

    const auto rates = q.rates;
    auto slack_fn = [&bs, &rates](const std::vector<double>& p) {
        const std::vector<double> b = bs.bounds(p);
        double s = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < b.size(); ++j) s = std::min(s, b[j] - rates[j]);
        return s;
    };
    AscentResult best = multistart_maximize(slack_fn, {bs.dim}, {}, opt);
    return finish_answer(best.value, best.x, bs.bounds(best.x));
}

std::vector<BoundaryPoint> region_boundary(const Channel& ch, RegionKind kind,
                                           int grid_resolution, const RegionOptions& opt) {
    detail::require(grid_resolution >= 2, "boundary grid resolution must be at least 2");
    detail::require(kind != RegionKind::common_randomness,
                    "boundary tracing covers single-input-law regions only");
    BoundSet bs = build_bound_set(ch, kind);

    // Direction weights on a simplex grid over the rate coordinates.
    std::vector<std::vector<double>> weights;
    if (bs.rate_count == 1) {
        weights.push_back({1.0});
    } else if (bs.rate_count == 2) {
        for (int i = 0; i < grid_resolution; ++i) {
            const double a = static_cast<double>(i) / (grid_resolution - 1);
            weights.push_back({a, 1.0 - a});
        }
    } else {
        for (int i = 0; i < grid_resolution; ++i)
            for (int j = 0; j + i < grid_resolution; ++j) {
                const double a = static_cast<double>(i) / (grid_resolution - 1);
                const double b = static_cast<double>(j) / (grid_resolution - 1);
                weights.push_back({a, b, 1.0 - a - b});
            }
    }

    std::vector<BoundaryPoint> pts;
    pts.reserve(weights.size());
    for (const auto& lam : weights) {
        auto obj = [&bs, &lam](const std::vector<double>& p) {
            const std::vector<double> b = bs.bounds(p);
            double s = 0.0;
            for (std::size_t j = 0; j < b.size(); ++j) s += lam[j] * b[j];
            return s;
        };
        AscentResult best = multistart_maximize(obj, {bs.dim}, {}, opt);
        pts.push_back({bs.bounds(best.x), best.x});
    }
    return pts;
}

RegionAnswer cr_region_membership(const Bc2& bc, const std::vector<double>& rates,
                                  int u_size, const RegionOptions& opt) {
    detail::require(u_size >= 1, "auxiliary alphabet size must be at least 1");
    check_rates(rates, 2);
    const Dmc wy = bc.marginal_y();
    const Dmc wz = bc.marginal_z();
    const int nx = bc.input_size();

    // Parameter layout: [P_U | row 0 of P_{X|U} | ... | row u_size-1].
    std::vector<int> blocks(1 + u_size, nx);
    blocks[0] = u_size;
    const int total = u_size + u_size * nx;

    // Bounds of one system: first receiver sees the cloud, the other adds the
    // conditional term, both capped by its direct mutual information.
    auto system_bounds = [&](const std::vector<double>& v, const Dmc& w_cloud,
                             const Dmc& w_other) {
        const double* pu = v.data();
        std::vector<double> px(nx, 0.0);
        for (int u = 0; u < u_size; ++u) {
            const double* row = v.data() + u_size + u * nx;
            for (int x = 0; x < nx; ++x) px[x] += pu[u] * row[x];
        }
        const int nc = w_cloud.output_size();
        std::vector<double> cloud(u_size * nc, 0.0);
        for (int u = 0; u < u_size; ++u) {
            const double* row = v.data() + u_size + u * nx;
            for (int x = 0; x < nx; ++x) {
                if (row[x] <= 0.0) continue;
                for (int y = 0; y < nc; ++y)
                    cloud[u * nc + y] += row[x] * w_cloud.at(x, y);
            }
        }
        std::vector<double> puv(pu, pu + u_size);
        const double i_cloud = mi_flat(puv, cloud.data(), u_size, nc);
        double i_cond = 0.0;
        for (int u = 0; u < u_size; ++u) {
            if (puv[u] <= 0.0) continue;
            std::vector<double> row(v.begin() + u_size + u * nx,
                                    v.begin() + u_size + (u + 1) * nx);
            i_cond += puv[u] * mi_raw(row, w_other);
        }
        const double i_direct = mi_raw(px, w_other);
        return std::pair<double, double>{i_cloud, std::min(i_cloud + i_cond, i_direct)};
    };

    auto make_starts = [&](const Dmc& w_cloud) {
        std::vector<std::vector<double>> starts;
        const Pmf ba = capacity(w_cloud, 1e-10, 5000).maximizer;
        // Constant cloud variable with a capacity-achieving input law.
        std::vector<double> s1(total, 0.0);
        s1[0] = 1.0;
        for (int u = 0; u < u_size; ++u)
            for (int x = 0; x < nx; ++x) s1[u_size + u * nx + x] = ba.at(x);
        starts.push_back(std::move(s1));
        if (u_size >= nx) {
            // Cloud variable carries the input symbol.
            std::vector<double> s2(total, 0.0);
            for (int x = 0; x < nx; ++x) s2[x] = ba.at(x);
            for (int u = 0; u < u_size; ++u)
                s2[u_size + u * nx + (u % nx)] = 1.0;
            starts.push_back(std::move(s2));
        }
        return starts;
    };

    RegionAnswer best;
    bool have = false;
    for (int sys = 0; sys < 2; ++sys) {
        const Dmc& w_cloud = sys == 0 ? wy : wz;
        const Dmc& w_other = sys == 0 ? wz : wy;
        const double r_cloud = sys == 0 ? rates[0] : rates[1];
        const double r_other = sys == 0 ? rates[1] : rates[0];
        auto slack_fn = [&](const std::vector<double>& v) {
            const auto [b_cloud, b_other] = system_bounds(v, w_cloud, w_other);
            return std::min(b_cloud - r_cloud, b_other - r_other);
        };
        AscentResult r = multistart_maximize(slack_fn, blocks, make_starts(w_cloud), opt);
        if (!have || r.value > best.slack) {
            const auto [b_cloud, b_other] = system_bounds(r.x, w_cloud, w_other);
            std::vector<double> bounds = sys == 0 ? std::vector<double>{b_cloud, b_other}
                                                  : std::vector<double>{b_other, b_cloud};
            best = finish_answer(r.value, r.x, std::move(bounds));
            have = true;
        }
    }
    return best;
}

}  // namespace idbc
