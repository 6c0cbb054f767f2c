#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace idbc {

namespace detail {
inline void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}
}  // namespace detail

inline constexpr double k_pmf_sum_tol = 1e-12;

// Probability mass function over {0, ..., size-1}. Invalid inputs are
// rejected outright; nothing is ever renormalized behind the caller's back.
class Pmf {
  public:
    // A default Pmf is the point mass on a one-symbol alphabet, so the
    // sums-to-one invariant holds for default-constructed holders.
    Pmf() : p_{1.0}, cdf_{1.0} {}

    explicit Pmf(std::vector<double> p) : p_(std::move(p)) {
        detail::require(!p_.empty(), "Pmf: empty support");
        double sum = 0.0;
        for (double v : p_) {
            detail::require(std::isfinite(v) && v >= 0.0,
                            "Pmf: entries must be finite and nonnegative");
            sum += v;
        }
        detail::require(std::fabs(sum - 1.0) <= k_pmf_sum_tol,
                        "Pmf: entries must sum to 1 within 1e-12");
        cdf_.resize(p_.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < p_.size(); ++i) {
            acc += p_[i];
            cdf_[i] = acc;
        }
        cdf_.back() = 1.0;
    }

    static Pmf uniform(int k) {
        detail::require(k > 0, "Pmf: uniform support must be positive");
        return Pmf(std::vector<double>(static_cast<std::size_t>(k),
                                       1.0 / static_cast<double>(k)));
    }

    int size() const { return static_cast<int>(p_.size()); }
    double at(int i) const { return p_.at(static_cast<std::size_t>(i)); }
    const std::vector<double>& probs() const { return p_; }
    const std::vector<double>& cdf() const { return cdf_; }

  private:
    std::vector<double> p_;
    std::vector<double> cdf_;
};

}  // namespace idbc
