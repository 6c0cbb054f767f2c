#pragma once

// Finite channels and byte-packed sequences. Channel objects are immutable
// after construction; every row is validated as a pmf on construction and
// invalid input is rejected rather than repaired.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "idbc/pmf.hpp"
#include "idbc/rng.hpp"

namespace idbc {

// n-tuple over an alphabet of at most 256 symbols.
struct Sequence {
    std::vector<std::uint8_t> sym;

    Sequence() = default;
    explicit Sequence(std::vector<std::uint8_t> s) : sym(std::move(s)) {}

    int n() const { return static_cast<int>(sym.size()); }
    bool operator==(const Sequence& o) const { return sym == o.sym; }
};

// Discrete memoryless channel W(y|x), rows stored row-major.
class Dmc {
  public:
    Dmc(int input_size, int output_size, std::vector<double> rows);

    int input_size() const { return nx_; }
    int output_size() const { return ny_; }
    double at(int x, int y) const {
        return w_[static_cast<std::size_t>(x) * static_cast<std::size_t>(ny_) +
                  static_cast<std::size_t>(y)];
    }
    const std::vector<double>& rows() const { return w_; }

    Sequence sample_row(const Sequence& x, Crng& g) const;

  private:
    int nx_;
    int ny_;
    std::vector<double> w_;
    std::vector<double> cdf_;  // per-row cumulative, same layout
};

// Two-receiver broadcast channel W(y,z|x), joint output stored row-major with
// index y * z_size + z.
class Bc2 {
  public:
    Bc2(int input_size, int y_size, int z_size, std::vector<double> rows);

    int input_size() const { return nx_; }
    int y_size() const { return ny_; }
    int z_size() const { return nz_; }
    double at(int x, int y, int z) const {
        return w_[(static_cast<std::size_t>(x) * static_cast<std::size_t>(ny_) +
                   static_cast<std::size_t>(y)) * static_cast<std::size_t>(nz_) +
                  static_cast<std::size_t>(z)];
    }

    Dmc marginal_y() const;
    Dmc marginal_z() const;

    // Draws (y^n, z^n) from the joint rows.
    std::pair<Sequence, Sequence> sample_outputs(const Sequence& x, Crng& g) const;

  private:
    int nx_;
    int ny_;
    int nz_;
    std::vector<double> w_;
    std::vector<double> cdf_;
};

// Three-receiver broadcast channel W(y1,y2,y3|x).
class Bc3 {
  public:
    Bc3(int input_size, int y1, int y2, int y3, std::vector<double> rows);

    int input_size() const { return nx_; }
    int y_size(int k) const { return sz_.at(static_cast<std::size_t>(k)); }
    double at(int x, int y1, int y2, int y3) const {
        return w_[flat(x, y1, y2, y3)];
    }

    Dmc marginal(int k) const;

    std::array<Sequence, 3> sample_outputs(const Sequence& x, Crng& g) const;

  private:
    std::size_t flat(int x, int y1, int y2, int y3) const {
        return ((static_cast<std::size_t>(x) * sz_[0] + static_cast<std::size_t>(y1)) *
                    sz_[1] + static_cast<std::size_t>(y2)) * sz_[2] +
               static_cast<std::size_t>(y3);
    }
    int nx_;
    std::array<std::size_t, 3> sz_;
    std::vector<double> w_;
    std::vector<double> cdf_;
};

// W(z | x, y) derived from a Bc2. Rows with W_Y(y|x) = 0 have no defined
// conditional; they are flagged and left zero, never invented. Consumers give
// such rows weight 0.
struct ConditionalZ {
    int y_size = 0;
    int z_size = 0;
    // indexed (x * y_size + y) * z_size + z
    std::vector<double> rows;
    std::vector<std::uint8_t> defined;  // per (x, y)

    double at(int x, int y, int z) const {
        return rows[(static_cast<std::size_t>(x) * static_cast<std::size_t>(y_size) +
                     static_cast<std::size_t>(y)) * static_cast<std::size_t>(z_size) +
                    static_cast<std::size_t>(z)];
    }
    bool is_defined(int x, int y) const {
        return defined[static_cast<std::size_t>(x) * static_cast<std::size_t>(y_size) +
                       static_cast<std::size_t>(y)] != 0;
    }
};

ConditionalZ conditional_z_given_xy(const Bc2& bc);

// Product broadcast channels (outputs conditionally independent given x).
Bc2 make_product_bc(const Dmc& wy, const Dmc& wz);
Bc3 make_product_bc3(const Dmc& w1, const Dmc& w2, const Dmc& w3);

double nfold_prob(const Dmc& w, const Sequence& x, const Sequence& y);
double nfold_prob(const Bc2& w, const Sequence& x, const Sequence& y,
                  const Sequence& z);

Sequence sample_output(const Dmc& w, const Sequence& x, Crng& g);
Sequence sample_iid(const Pmf& p, int n, Crng& g);

// Channel files: JSON ({"kind": "dmc"|"bc2"|"bc3", sizes, "rows": [[...]]})
// or whitespace-separated text (kind line with sizes, then row-major
// probabilities). Number parsing is locale-independent.
using Channel = std::variant<Dmc, Bc2, Bc3>;
Channel load_channel(const std::string& path);
Channel parse_channel_text(const std::string& text);
std::string channel_kind(const Channel& ch);

}  // namespace idbc
