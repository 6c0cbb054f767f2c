#include "idbc/channel.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace idbc {

namespace {

void check_row(const double* row, int len, const std::string& what) {
    double sum = 0.0;
    for (int i = 0; i < len; ++i) {
        detail::require(std::isfinite(row[i]) && row[i] >= 0.0,
                        what + ": entries must be finite and nonnegative");
        sum += row[i];
    }
    detail::require(std::fabs(sum - 1.0) <= k_pmf_sum_tol,
                    what + ": each row must sum to 1 within 1e-12");
}

std::vector<double> build_cdf(const std::vector<double>& rows, int nrows, int len) {
    std::vector<double> cdf(rows.size());
    for (int r = 0; r < nrows; ++r) {
        double acc = 0.0;
        const std::size_t base = static_cast<std::size_t>(r) * static_cast<std::size_t>(len);
        for (int i = 0; i < len; ++i) {
            acc += rows[base + static_cast<std::size_t>(i)];
            cdf[base + static_cast<std::size_t>(i)] = acc;
        }
        cdf[base + static_cast<std::size_t>(len) - 1] = 1.0;
    }
    return cdf;
}

int sample_from_cdf_row(const std::vector<double>& cdf, std::size_t base, int len,
                        Crng& g) {
    const double u = g.next_double();
    int lo = 0, hi = len - 1;
    while (lo < hi) {
        const int mid = (lo + hi) / 2;
        if (u < cdf[base + static_cast<std::size_t>(mid)]) hi = mid; else lo = mid + 1;
    }
    return lo;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dmc
// ---------------------------------------------------------------------------

Dmc::Dmc(int input_size, int output_size, std::vector<double> rows)
    : nx_(input_size), ny_(output_size), w_(std::move(rows)) {
    detail::require(nx_ >= 1 && ny_ >= 1, "Dmc: alphabet sizes must be positive");
    detail::require(nx_ <= 256 && ny_ <= 256, "Dmc: alphabet sizes must be <= 256");
    detail::require(w_.size() == static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_),
                    "Dmc: row array has wrong length");
    for (int x = 0; x < nx_; ++x)
        check_row(w_.data() + static_cast<std::size_t>(x) * static_cast<std::size_t>(ny_),
                  ny_, "Dmc row " + std::to_string(x));
    cdf_ = build_cdf(w_, nx_, ny_);
}

Sequence Dmc::sample_row(const Sequence& x, Crng& g) const {
    Sequence y;
    y.sym.resize(x.sym.size());
    for (std::size_t i = 0; i < x.sym.size(); ++i) {
        const std::size_t base =
            static_cast<std::size_t>(x.sym[i]) * static_cast<std::size_t>(ny_);
        y.sym[i] = static_cast<std::uint8_t>(sample_from_cdf_row(cdf_, base, ny_, g));
    }
    return y;
}

// ---------------------------------------------------------------------------
// Bc2
// ---------------------------------------------------------------------------

Bc2::Bc2(int input_size, int y_size, int z_size, std::vector<double> rows)
    : nx_(input_size), ny_(y_size), nz_(z_size), w_(std::move(rows)) {
    detail::require(nx_ >= 1 && ny_ >= 1 && nz_ >= 1,
                    "Bc2: alphabet sizes must be positive");
    detail::require(nx_ <= 256 && ny_ <= 256 && nz_ <= 256,
                    "Bc2: alphabet sizes must be <= 256");
    detail::require(w_.size() == static_cast<std::size_t>(nx_) *
                                     static_cast<std::size_t>(ny_) *
                                     static_cast<std::size_t>(nz_),
                    "Bc2: row array has wrong length");
    for (int x = 0; x < nx_; ++x)
        check_row(w_.data() + static_cast<std::size_t>(x) * static_cast<std::size_t>(ny_ * nz_),
                  ny_ * nz_, "Bc2 row " + std::to_string(x));
    cdf_ = build_cdf(w_, nx_, ny_ * nz_);
}

Dmc Bc2::marginal_y() const {
    std::vector<double> rows(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), 0.0);
    for (int x = 0; x < nx_; ++x)
        for (int y = 0; y < ny_; ++y) {
            double s = 0.0;
            for (int z = 0; z < nz_; ++z) s += at(x, y, z);
            rows[static_cast<std::size_t>(x) * static_cast<std::size_t>(ny_) +
                 static_cast<std::size_t>(y)] = s;
        }
    return Dmc(nx_, ny_, std::move(rows));
}

Dmc Bc2::marginal_z() const {
    std::vector<double> rows(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(nz_), 0.0);
    for (int x = 0; x < nx_; ++x)
        for (int z = 0; z < nz_; ++z) {
            double s = 0.0;
            for (int y = 0; y < ny_; ++y) s += at(x, y, z);
            rows[static_cast<std::size_t>(x) * static_cast<std::size_t>(nz_) +
                 static_cast<std::size_t>(z)] = s;
        }
    return Dmc(nx_, nz_, std::move(rows));
}

std::pair<Sequence, Sequence> Bc2::sample_outputs(const Sequence& x, Crng& g) const {
    Sequence y, z;
    y.sym.resize(x.sym.size());
    z.sym.resize(x.sym.size());
    const int len = ny_ * nz_;
    for (std::size_t i = 0; i < x.sym.size(); ++i) {
        const std::size_t base =
            static_cast<std::size_t>(x.sym[i]) * static_cast<std::size_t>(len);
        const int joint = sample_from_cdf_row(cdf_, base, len, g);
        y.sym[i] = static_cast<std::uint8_t>(joint / nz_);
        z.sym[i] = static_cast<std::uint8_t>(joint % nz_);
    }
    return {std::move(y), std::move(z)};
}

// ---------------------------------------------------------------------------
// Bc3
// ---------------------------------------------------------------------------

Bc3::Bc3(int input_size, int y1, int y2, int y3, std::vector<double> rows)
    : nx_(input_size),
      sz_{static_cast<std::size_t>(y1), static_cast<std::size_t>(y2),
          static_cast<std::size_t>(y3)},
      w_(std::move(rows)) {
    detail::require(nx_ >= 1 && y1 >= 1 && y2 >= 1 && y3 >= 1,
                    "Bc3: alphabet sizes must be positive");
    detail::require(nx_ <= 256 && y1 <= 256 && y2 <= 256 && y3 <= 256,
                    "Bc3: alphabet sizes must be <= 256");
    const std::size_t out = sz_[0] * sz_[1] * sz_[2];
    detail::require(w_.size() == static_cast<std::size_t>(nx_) * out,
                    "Bc3: row array has wrong length");
    for (int x = 0; x < nx_; ++x)
        check_row(w_.data() + static_cast<std::size_t>(x) * out,
                  static_cast<int>(out), "Bc3 row " + std::to_string(x));
    cdf_ = build_cdf(w_, nx_, static_cast<int>(out));
}

Dmc Bc3::marginal(int k) const {
    detail::require(k >= 0 && k < 3, "Bc3: receiver index out of range");
    const int nk = static_cast<int>(sz_[static_cast<std::size_t>(k)]);
    std::vector<double> rows(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(nk), 0.0);
    for (int x = 0; x < nx_; ++x)
        for (int a = 0; a < static_cast<int>(sz_[0]); ++a)
            for (int b = 0; b < static_cast<int>(sz_[1]); ++b)
                for (int c = 0; c < static_cast<int>(sz_[2]); ++c) {
                    const int yk = (k == 0) ? a : (k == 1) ? b : c;
                    rows[static_cast<std::size_t>(x) * static_cast<std::size_t>(nk) +
                         static_cast<std::size_t>(yk)] += at(x, a, b, c);
                }
    return Dmc(nx_, nk, std::move(rows));
}

std::array<Sequence, 3> Bc3::sample_outputs(const Sequence& x, Crng& g) const {
    std::array<Sequence, 3> out;
    for (auto& s : out) s.sym.resize(x.sym.size());
    const int len = static_cast<int>(sz_[0] * sz_[1] * sz_[2]);
    for (std::size_t i = 0; i < x.sym.size(); ++i) {
        const std::size_t base =
            static_cast<std::size_t>(x.sym[i]) * static_cast<std::size_t>(len);
        int joint = sample_from_cdf_row(cdf_, base, len, g);
        out[2].sym[i] = static_cast<std::uint8_t>(joint % static_cast<int>(sz_[2]));
        joint /= static_cast<int>(sz_[2]);
        out[1].sym[i] = static_cast<std::uint8_t>(joint % static_cast<int>(sz_[1]));
        out[0].sym[i] = static_cast<std::uint8_t>(joint / static_cast<int>(sz_[1]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// derived channels
// ---------------------------------------------------------------------------

ConditionalZ conditional_z_given_xy(const Bc2& bc) {
    ConditionalZ c;
    c.y_size = bc.y_size();
    c.z_size = bc.z_size();
    c.rows.assign(static_cast<std::size_t>(bc.input_size()) *
                      static_cast<std::size_t>(bc.y_size()) *
                      static_cast<std::size_t>(bc.z_size()),
                  0.0);
    c.defined.assign(static_cast<std::size_t>(bc.input_size()) *
                         static_cast<std::size_t>(bc.y_size()),
                     0);
    const Dmc wy = bc.marginal_y();
    for (int x = 0; x < bc.input_size(); ++x)
        for (int y = 0; y < bc.y_size(); ++y) {
            const double py = wy.at(x, y);
            const std::size_t pair_idx =
                static_cast<std::size_t>(x) * static_cast<std::size_t>(bc.y_size()) +
                static_cast<std::size_t>(y);
            if (py <= 0.0) continue;  // undefined, stays flagged
            c.defined[pair_idx] = 1;
            for (int z = 0; z < bc.z_size(); ++z)
                c.rows[pair_idx * static_cast<std::size_t>(bc.z_size()) +
                       static_cast<std::size_t>(z)] = bc.at(x, y, z) / py;
        }
    return c;
}

Bc2 make_product_bc(const Dmc& wy, const Dmc& wz) {
    detail::require(wy.input_size() == wz.input_size(),
                    "make_product_bc: input alphabets differ");
    const int nx = wy.input_size(), ny = wy.output_size(), nz = wz.output_size();
    std::vector<double> rows(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
                             static_cast<std::size_t>(nz));
    for (int x = 0; x < nx; ++x)
        for (int y = 0; y < ny; ++y)
            for (int z = 0; z < nz; ++z)
                rows[(static_cast<std::size_t>(x) * static_cast<std::size_t>(ny) +
                      static_cast<std::size_t>(y)) * static_cast<std::size_t>(nz) +
                     static_cast<std::size_t>(z)] = wy.at(x, y) * wz.at(x, z);
    return Bc2(nx, ny, nz, std::move(rows));
}

Bc3 make_product_bc3(const Dmc& w1, const Dmc& w2, const Dmc& w3) {
    detail::require(w1.input_size() == w2.input_size() &&
                        w1.input_size() == w3.input_size(),
                    "make_product_bc3: input alphabets differ");
    const int nx = w1.input_size();
    const int s1 = w1.output_size(), s2 = w2.output_size(), s3 = w3.output_size();
    std::vector<double> rows(static_cast<std::size_t>(nx) * static_cast<std::size_t>(s1) *
                             static_cast<std::size_t>(s2) * static_cast<std::size_t>(s3));
    std::size_t i = 0;
    for (int x = 0; x < nx; ++x)
        for (int a = 0; a < s1; ++a)
            for (int b = 0; b < s2; ++b)
                for (int c = 0; c < s3; ++c)
                    rows[i++] = w1.at(x, a) * w2.at(x, b) * w3.at(x, c);
    return Bc3(nx, s1, s2, s3, std::move(rows));
}

double nfold_prob(const Dmc& w, const Sequence& x, const Sequence& y) {
    detail::require(x.n() == y.n(), "nfold_prob: length mismatch");
    double prob = 1.0;
    for (int i = 0; i < x.n(); ++i)
        prob *= w.at(x.sym[static_cast<std::size_t>(i)], y.sym[static_cast<std::size_t>(i)]);
    return prob;
}

double nfold_prob(const Bc2& w, const Sequence& x, const Sequence& y,
                  const Sequence& z) {
    detail::require(x.n() == y.n() && x.n() == z.n(), "nfold_prob: length mismatch");
    double prob = 1.0;
    for (int i = 0; i < x.n(); ++i)
        prob *= w.at(x.sym[static_cast<std::size_t>(i)], y.sym[static_cast<std::size_t>(i)],
                     z.sym[static_cast<std::size_t>(i)]);
    return prob;
}

Sequence sample_output(const Dmc& w, const Sequence& x, Crng& g) {
    return w.sample_row(x, g);
}

Sequence sample_iid(const Pmf& p, int n, Crng& g) {
    Sequence s;
    s.sym.resize(static_cast<std::size_t>(n));
    const std::vector<double>& cdf = p.cdf();
    for (int i = 0; i < n; ++i)
        s.sym[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(g.sample_cdf(cdf));
    return s;
}

// ---------------------------------------------------------------------------
// channel files
// ---------------------------------------------------------------------------

namespace {

double parse_prob(std::string_view tok) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    detail::require(res.ec == std::errc() && res.ptr == tok.data() + tok.size(),
                    "channel file: bad number '" + std::string(tok) + "'");
    return v;
}

Channel parse_channel_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    const std::string kind = j.at("kind").get<std::string>();
    std::vector<double> rows;
    for (const auto& row : j.at("rows"))
        for (const auto& v : row) rows.push_back(v.get<double>());
    if (kind == "dmc")
        return Dmc(j.at("input_size").get<int>(), j.at("output_size").get<int>(),
                   std::move(rows));
    if (kind == "bc2")
        return Bc2(j.at("input_size").get<int>(), j.at("y_size").get<int>(),
                   j.at("z_size").get<int>(), std::move(rows));
    if (kind == "bc3") {
        const auto sizes = j.at("y_sizes").get<std::vector<int>>();
        detail::require(sizes.size() == 3, "channel file: bc3 needs 3 output sizes");
        return Bc3(j.at("input_size").get<int>(), sizes[0], sizes[1], sizes[2],
                   std::move(rows));
    }
    throw std::invalid_argument("channel file: unknown kind '" + kind + "'");
}

}  // namespace

Channel parse_channel_text(const std::string& text) {
    std::size_t pos = text.find_first_not_of(" \t\r\n");
    detail::require(pos != std::string::npos, "channel file: empty");
    if (text[pos] == '{') return parse_channel_json(text);

    std::istringstream in(text);
    std::string kind;
    in >> kind;
    std::vector<int> sizes;
    const int nsizes = (kind == "dmc") ? 2 : (kind == "bc2") ? 3 : (kind == "bc3") ? 4 : -1;
    detail::require(nsizes > 0, "channel file: unknown kind '" + kind + "'");
    for (int i = 0; i < nsizes; ++i) {
        int s = 0;
        detail::require(static_cast<bool>(in >> s), "channel file: missing alphabet size");
        sizes.push_back(s);
    }
    std::vector<double> rows;
    std::string tok;
    while (in >> tok) rows.push_back(parse_prob(tok));

    if (kind == "dmc") return Dmc(sizes[0], sizes[1], std::move(rows));
    if (kind == "bc2") return Bc2(sizes[0], sizes[1], sizes[2], std::move(rows));
    return Bc3(sizes[0], sizes[1], sizes[2], sizes[3], std::move(rows));
}

Channel load_channel(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    detail::require(in.good(), "cannot open channel file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_channel_text(buf.str());
}

std::string channel_kind(const Channel& ch) {
    if (std::holds_alternative<Dmc>(ch)) return "dmc";
    if (std::holds_alternative<Bc2>(ch)) return "bc2";
    return "bc3";
}

}  // namespace idbc
