#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "grid.hpp"

namespace cuspscope {

// ---- points and the group law ----------------------------------------------

struct HalfSpacePoint {
    Vec2 b{0.0, 0.0};
    double a = 1.0;
    int dim = 1;
};

inline HalfSpacePoint make_point(double b, double a) { return {{b, 0.0}, a, 1}; }
inline HalfSpacePoint make_point(double bx, double by, double a) { return {{bx, by}, a, 2}; }

inline HalfSpacePoint identity_point(int dim = 1) { return {{0.0, 0.0}, 1.0, dim}; }

// (b,a)·(b',a') = (a b' + b, a a')
inline HalfSpacePoint compose(const HalfSpacePoint& p, const HalfSpacePoint& q) {
    return {{p.a * q.b[0] + p.b[0], p.a * q.b[1] + p.b[1]}, p.a * q.a, p.dim};
}

inline HalfSpacePoint inverse(const HalfSpacePoint& p) {
    return {{-p.b[0] / p.a, -p.b[1] / p.a}, 1.0 / p.a, p.dim};
}

inline double delta(const HalfSpacePoint& p) {
    double nb = norm(p.b, p.dim);
    return p.a + 1.0 / p.a + nb * (1.0 + 1.0 / p.a);
}

inline double delta(double b_norm, double a) { return a + 1.0 / a + b_norm * (1.0 + 1.0 / a); }

inline double dist(const HalfSpacePoint& p, const HalfSpacePoint& q) {
    Vec2 d{p.b[0] - q.b[0], p.b[1] - q.b[1]};
    double nb = norm(d, p.dim);
    return p.a / q.a + q.a / p.a + nb * (1.0 / p.a + 1.0 / q.a);
}

// τ_β δ_λ: (b,a) -> (λ b + β, λ a)
inline HalfSpacePoint dilate_translate(const HalfSpacePoint& p, const Vec2& beta, double lambda) {
    return {{lambda * p.b[0] + beta[0], lambda * p.b[1] + beta[1]}, lambda * p.a, p.dim};
}

// Euclidean radius of the slice {b : dist((b,a),(b_q,a_q)) <= r}; negative when empty.
// Balls of radius below the metric minimum 2 are empty by convention.
inline double ball_slice_radius(double r, double a, double a_q) {
    if (r < 2.0) return -1.0;
    return (r - a / a_q - a_q / a) / (1.0 / a + 1.0 / a_q);
}

// ---- lattice and rasters -----------------------------------------------------

// Sampling lattice of the half-space: signal grid positions × geometric scales.
struct Lattice {
    int dim = 1;
    std::size_t n = 0;
    double length = 1.0;
    ScaleGrid scales;

    std::size_t plane() const { return dim == 1 ? n : n * n; }
    std::size_t size() const { return plane() * scales.count; }
    double step() const { return length / static_cast<double>(n); }

    Vec2 position(std::size_t idx) const {
        if (dim == 1) return {static_cast<double>(idx) * step(), 0.0};
        return {static_cast<double>(idx % n) * step(), static_cast<double>(idx / n) * step()};
    }

    HalfSpacePoint point(std::size_t j, std::size_t idx) const {
        return {position(idx), scales.scale(j), dim};
    }

    bool operator==(const Lattice& o) const {
        return dim == o.dim && n == o.n && length == o.length && scales.a_min == o.scales.a_min &&
               scales.a_max == o.scales.a_max && scales.count == o.scales.count;
    }
};

struct Raster {
    Lattice lattice;
    std::vector<std::uint8_t> bits;

    Raster() = default;
    explicit Raster(const Lattice& l, bool value = false) : lattice(l), bits(l.size(), value ? 1 : 0) {}

    bool at(std::size_t j, std::size_t idx) const { return bits[j * lattice.plane() + idx] != 0; }
    void set(std::size_t j, std::size_t idx, bool v = true) { bits[j * lattice.plane() + idx] = v ? 1 : 0; }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto v : bits) c += v;
        return c;
    }
    bool empty() const { return count() == 0; }
    bool slice_empty(std::size_t j) const {
        auto p = lattice.plane();
        for (std::size_t i = 0; i < p; ++i)
            if (bits[j * p + i]) return false;
        return true;
    }

    Raster complement() const {
        Raster r = *this;
        for (auto& v : r.bits) v = v ? 0 : 1;
        return r;
    }
    bool subset_of(const Raster& o) const {
        for (std::size_t i = 0; i < bits.size(); ++i)
            if (bits[i] && !o.bits[i]) return false;
        return true;
    }
};

inline Raster operator&(const Raster& x, const Raster& y) {
    require(x.lattice == y.lattice, ErrorKind::config, "raster lattices differ");
    Raster r = x;
    for (std::size_t i = 0; i < r.bits.size(); ++i) r.bits[i] = x.bits[i] & y.bits[i];
    return r;
}

inline Raster operator|(const Raster& x, const Raster& y) {
    require(x.lattice == y.lattice, ErrorKind::config, "raster lattices differ");
    Raster r = x;
    for (std::size_t i = 0; i < r.bits.size(); ++i) r.bits[i] = x.bits[i] | y.bits[i];
    return r;
}

namespace detail {

// Marks lattice positions within Euclidean radius R of center c using a
// per-row difference buffer (size plane + n for 2-D row ends).
struct DiskMarker {
    const Lattice& lat;
    std::vector<int> diff;  // 1-D: n+1; 2-D: n rows × (n+1)

    explicit DiskMarker(const Lattice& l) : lat(l), diff(l.dim == 1 ? l.n + 1 : l.n * (l.n + 1), 0) {}

    void reset() { std::fill(diff.begin(), diff.end(), 0); }

    void mark_row(std::size_t row, double cx, double half) {
        double h = lat.step();
        double lo = std::ceil((cx - half) / h), hi = std::floor((cx + half) / h);
        lo = std::max(lo, 0.0);
        hi = std::min(hi, static_cast<double>(lat.n) - 1.0);
        if (hi < lo) return;
        auto i0 = static_cast<std::size_t>(lo), i1 = static_cast<std::size_t>(hi);
        std::size_t base = row * (lat.n + 1);
        diff[base + i0] += 1;
        diff[base + i1 + 1] -= 1;
    }

    void mark(const Vec2& c, double R) {
        if (R < 0) return;
        if (lat.dim == 1) {
            mark_row(0, c[0], R);
            return;
        }
        double h = lat.step();
        double lo = std::max(0.0, std::ceil((c[1] - R) / h));
        double hi = std::min(static_cast<double>(lat.n) - 1.0, std::floor((c[1] + R) / h));
        for (double yi = lo; yi <= hi; yi += 1.0) {
            double dy = yi * h - c[1];
            double w2 = R * R - dy * dy;
            if (w2 < 0) continue;
            mark_row(static_cast<std::size_t>(yi), c[0], std::sqrt(w2));
        }
    }

    void flush(Raster& r, std::size_t j) const {
        std::size_t rows = lat.dim == 1 ? 1 : lat.n;
        for (std::size_t row = 0; row < rows; ++row) {
            int acc = 0;
            std::size_t base = row * (lat.n + 1);
            for (std::size_t i = 0; i < lat.n; ++i) {
                acc += diff[base + i];
                if (acc > 0) r.set(j, row * lat.n + i);
            }
        }
    }
};

struct BallSource {
    Vec2 center;  // absolute position
    double a;
    double radius;  // Δ^ε, measured relative to the origin
};

inline Raster rasterize_balls(const Lattice& lat, const std::vector<BallSource>& sources) {
    Raster out(lat);
    DiskMarker marker(lat);
    for (std::size_t j = 0; j < lat.scales.count; ++j) {
        double a = lat.scales.scale(j);
        marker.reset();
        bool any = false;
        for (const auto& s : sources) {
            double R = ball_slice_radius(s.radius, a, s.a);
            if (R < 0) continue;
            marker.mark(s.center, R);
            any = true;
        }
        if (any) marker.flush(out, j);
    }
    return out;
}

// Exact Euclidean distance transform with nearest-member index, non-periodic.
// Returns squared distances (infinity when the slice is empty).
inline void edt_1d(const double* f, std::size_t n, double* d, std::size_t* arg, const std::size_t* farg) {
    std::vector<std::size_t> v(n);
    std::vector<double> z(n + 1);
    std::size_t k = 0;
    std::size_t first = n;
    for (std::size_t q = 0; q < n; ++q)
        if (std::isfinite(f[q])) { first = q; break; }
    if (first == n) {
        for (std::size_t q = 0; q < n; ++q) { d[q] = std::numeric_limits<double>::infinity(); arg[q] = 0; }
        return;
    }
    v[0] = first;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (std::size_t q = first + 1; q < n; ++q) {
        if (!std::isfinite(f[q])) continue;
        double s;
        for (;;) {
            double vq = static_cast<double>(v[k]);
            double qd = static_cast<double>(q);
            s = ((f[q] + qd * qd) - (f[v[k]] + vq * vq)) / (2.0 * qd - 2.0 * vq);
            if (s <= z[k] && k > 0) { --k; continue; }
            break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        double qd = static_cast<double>(q);
        while (z[k + 1] < qd) ++k;
        double dv = qd - static_cast<double>(v[k]);
        d[q] = dv * dv + f[v[k]];
        arg[q] = farg ? farg[v[k]] : v[k];
    }
}

// Squared distance (in grid units) and flat index of the nearest member.
inline void distance_transform(const std::uint8_t* member, int dim, std::size_t n, std::vector<double>& d2,
                               std::vector<std::size_t>& nearest) {
    const double inf = std::numeric_limits<double>::infinity();
    if (dim == 1) {
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = member[i] ? 0.0 : inf;
        d2.assign(n, inf);
        nearest.assign(n, 0);
        edt_1d(f.data(), n, d2.data(), nearest.data(), nullptr);
        return;
    }
    std::size_t total = n * n;
    std::vector<double> rowd(total);
    std::vector<std::size_t> rowarg(total);
    std::vector<double> f(n);
    std::vector<std::size_t> fa(n);
    for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) { f[x] = member[y * n + x] ? 0.0 : inf; fa[x] = y * n + x; }
        edt_1d(f.data(), n, rowd.data() + y * n, rowarg.data() + y * n, fa.data());
    }
    d2.assign(total, inf);
    nearest.assign(total, 0);
    std::vector<double> col(n), out(n);
    std::vector<std::size_t> ca(n), oa(n);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < n; ++y) { col[y] = rowd[y * n + x]; ca[y] = rowarg[y * n + x]; }
        edt_1d(col.data(), n, out.data(), oa.data(), ca.data());
        for (std::size_t y = 0; y < n; ++y) { d2[y * n + x] = out[y]; nearest[y * n + x] = oa[y]; }
    }
}

} // namespace detail

// ---- parabolic paths ---------------------------------------------------------

// Ξ(ξ,γ) based at an origin: points (origin + λξ, λ^γ) for λ in [lambda_lo, lambda_hi].
struct ParabolicPath {
    Vec2 origin{0.0, 0.0};
    Vec2 xi{1.0, 0.0};
    double gamma = 2.0;
    double lambda_lo = 1e-3;
    double lambda_hi = 0.5;
    std::size_t count = 1024;
    int dim = 1;

    void validate() const {
        require(gamma > 1.0, ErrorKind::config, "path exponent gamma must exceed 1");
        require(lambda_lo > 0 && lambda_hi > lambda_lo && lambda_hi <= 0.5, ErrorKind::config,
                "path needs 0 < lambda_lo < lambda_hi <= 1/2");
        require(count >= 2, ErrorKind::config, "path needs at least two samples");
        require(norm(xi, dim) > 0, ErrorKind::config, "path direction must be non-zero");
    }

    double lambda(std::size_t i) const {
        return lambda_lo * std::pow(lambda_hi / lambda_lo, static_cast<double>(i) / static_cast<double>(count - 1));
    }

    // Point relative to the origin.
    HalfSpacePoint relative_point(double lam) const {
        return {{lam * xi[0], dim == 1 ? 0.0 : lam * xi[1]}, std::pow(lam, gamma), dim};
    }
};

// ---- region masks ------------------------------------------------------------

class MaskNode {
public:
    virtual ~MaskNode() = default;
    virtual Raster rasterize(const Lattice& lat) const = 0;
    // Analytic membership where available.
    virtual std::optional<bool> contains(const HalfSpacePoint&) const { return std::nullopt; }
    virtual nlohmann::json to_json() const = 0;
};

using RegionMask = std::shared_ptr<const MaskNode>;

inline Raster rasterize(const RegionMask& m, const Lattice& lat) { return m->rasterize(lat); }

namespace detail {

class PredicateMask : public MaskNode {
public:
    Raster rasterize(const Lattice& lat) const override {
        Raster r(lat);
        for (std::size_t j = 0; j < lat.scales.count; ++j)
            for (std::size_t i = 0; i < lat.plane(); ++i)
                if (*contains(lat.point(j, i))) r.set(j, i);
        return r;
    }
};

class ConstantMask final : public PredicateMask {
public:
    explicit ConstantMask(bool v) : value_(v) {}
    std::optional<bool> contains(const HalfSpacePoint&) const override { return value_; }
    nlohmann::json to_json() const override {
        return {{"family", value_ ? "full" : "empty"}, {"params", nlohmann::json::object()}};
    }

private:
    bool value_;
};

// {a > |b - center|^alpha} (above) or {a < |b - center|^alpha}, intersected with a_min <= a < a_max.
class ParabolicStrip final : public PredicateMask {
public:
    ParabolicStrip(double alpha, bool above, double a_max, Vec2 center, double a_min)
        : alpha_(alpha), above_(above), a_max_(a_max), center_(center), a_min_(a_min) {
        require(alpha > 0, ErrorKind::config, "parabolic strip exponent must be positive");
    }
    std::optional<bool> contains(const HalfSpacePoint& p) const override {
        if (!(p.a < a_max_) || p.a < a_min_) return false;
        Vec2 d{p.b[0] - center_[0], p.b[1] - center_[1]};
        double edge = std::pow(norm(d, p.dim), alpha_);
        return above_ ? p.a > edge : p.a < edge;
    }
    nlohmann::json to_json() const override {
        nlohmann::json params = {{"alpha", alpha_}, {"side", above_ ? "above" : "below"},
                                 {"center", {center_[0], center_[1]}}};
        if (std::isfinite(a_max_)) params["a_max"] = a_max_;
        if (a_min_ > 0) params["a_min"] = a_min_;
        return {{"family", "parabolic-strip"}, {"params", params}};
    }

private:
    double alpha_;
    bool above_;
    double a_max_;
    Vec2 center_;
    double a_min_;
};

class ScaleBand final : public PredicateMask {
public:
    ScaleBand(double lo, double hi) : lo_(lo), hi_(hi) {}
    std::optional<bool> contains(const HalfSpacePoint& p) const override { return p.a >= lo_ && p.a <= hi_; }
    nlohmann::json to_json() const override {
        return {{"family", "scale-band"}, {"params", {{"a_min", lo_}, {"a_max", hi_}}}};
    }

private:
    double lo_, hi_;
};

class GammaTube final : public MaskNode {
public:
    GammaTube(ParabolicPath path, double eps) : path_(path), eps_(eps) {
        path_.validate();
        require(eps > 0, ErrorKind::config, "tube width exponent must be positive");
    }

    std::vector<BallSource> sources() const {
        std::vector<BallSource> s;
        s.reserve(path_.count);
        for (std::size_t i = 0; i < path_.count; ++i) {
            auto q = path_.relative_point(path_.lambda(i));
            double r = std::pow(delta(q), eps_);
            if (r < 2.0) continue;
            s.push_back({{path_.origin[0] + q.b[0], path_.origin[1] + q.b[1]}, q.a, r});
        }
        return s;
    }

    Raster rasterize(const Lattice& lat) const override {
        require(lat.dim == path_.dim, ErrorKind::config, "tube dimension differs from lattice");
        return rasterize_balls(lat, sources());
    }

    std::optional<bool> contains(const HalfSpacePoint& p) const override {
        for (const auto& s : sources()) {
            HalfSpacePoint q{s.center, s.a, p.dim};
            if (dist(p, q) <= s.radius) return true;
        }
        return false;
    }

    nlohmann::json to_json() const override {
        return {{"family", "gamma-tube"},
                {"params",
                 {{"origin", {path_.origin[0], path_.origin[1]}},
                  {"xi", {path_.xi[0], path_.xi[1]}},
                  {"gamma", path_.gamma},
                  {"lambda_lo", path_.lambda_lo},
                  {"lambda_hi", path_.lambda_hi},
                  {"samples", path_.count},
                  {"eps", eps_}}}};
    }

    const ParabolicPath& path() const { return path_; }
    double eps() const { return eps_; }

private:
    ParabolicPath path_;
    double eps_;
};

class RasterMask final : public MaskNode {
public:
    explicit RasterMask(Raster r) : r_(std::move(r)) {}
    Raster rasterize(const Lattice& lat) const override {
        require(lat == r_.lattice, ErrorKind::config, "raster mask used on a different lattice");
        return r_;
    }
    nlohmann::json to_json() const override {
        return {{"family", "raster"}, {"params", {{"members", r_.count()}}}};
    }

private:
    Raster r_;
};

} // namespace detail

// Γ_ε of a raster, decided against the sampled points of Ω; Δ is measured from origin.
inline Raster gamma_neighborhood(const Raster& omega, double eps, const Vec2& origin = {0.0, 0.0}) {
    require(eps > 0, ErrorKind::config, "eps must be positive");
    const auto& lat = omega.lattice;
    std::vector<detail::BallSource> src;
    for (std::size_t j = 0; j < lat.scales.count; ++j) {
        double a = lat.scales.scale(j);
        for (std::size_t i = 0; i < lat.plane(); ++i) {
            if (!omega.at(j, i)) continue;
            Vec2 b = lat.position(i);
            double r = std::pow(delta(norm({b[0] - origin[0], b[1] - origin[1]}, lat.dim), a), eps);
            if (r < 2.0) continue;
            src.push_back({b, a, r});
        }
    }
    return detail::rasterize_balls(lat, src);
}

namespace detail {

class NeighborhoodMask final : public MaskNode {
public:
    NeighborhoodMask(RegionMask inner, double eps, Vec2 origin) : inner_(std::move(inner)), eps_(eps), origin_(origin) {}
    Raster rasterize(const Lattice& lat) const override {
        return gamma_neighborhood(inner_->rasterize(lat), eps_, origin_);
    }
    nlohmann::json to_json() const override {
        auto j = inner_->to_json();
        j["ops"].push_back({{"op", "gamma"}, {"eps", eps_}, {"origin", {origin_[0], origin_[1]}}});
        return j;
    }

private:
    RegionMask inner_;
    double eps_;
    Vec2 origin_;
};

class ComplementMask final : public MaskNode {
public:
    explicit ComplementMask(RegionMask m) : m_(std::move(m)) {}
    Raster rasterize(const Lattice& lat) const override { return m_->rasterize(lat).complement(); }
    std::optional<bool> contains(const HalfSpacePoint& p) const override {
        auto v = m_->contains(p);
        if (!v) return std::nullopt;
        return !*v;
    }
    nlohmann::json to_json() const override {
        auto j = m_->to_json();
        j["ops"].push_back({{"op", "complement"}});
        return j;
    }

private:
    RegionMask m_;
};

class BinaryMask final : public MaskNode {
public:
    BinaryMask(RegionMask x, RegionMask y, bool is_union) : x_(std::move(x)), y_(std::move(y)), union_(is_union) {}
    Raster rasterize(const Lattice& lat) const override {
        auto a = x_->rasterize(lat), b = y_->rasterize(lat);
        return union_ ? (a | b) : (a & b);
    }
    std::optional<bool> contains(const HalfSpacePoint& p) const override {
        auto a = x_->contains(p), b = y_->contains(p);
        if (!a || !b) return std::nullopt;
        return union_ ? (*a || *b) : (*a && *b);
    }
    nlohmann::json to_json() const override {
        auto j = x_->to_json();
        j["ops"].push_back({{"op", union_ ? "union" : "intersect"}, {"with", y_->to_json()}});
        return j;
    }

private:
    RegionMask x_, y_;
    bool union_;
};

} // namespace detail

inline RegionMask empty_mask() { return std::make_shared<detail::ConstantMask>(false); }
inline RegionMask full_mask() { return std::make_shared<detail::ConstantMask>(true); }

inline RegionMask parabolic_strip(double alpha, bool above, double a_max = std::numeric_limits<double>::infinity(),
                                  Vec2 center = {0.0, 0.0}, double a_min = 0.0) {
    return std::make_shared<detail::ParabolicStrip>(alpha, above, a_max, center, a_min);
}

inline RegionMask scale_band(double lo, double hi) { return std::make_shared<detail::ScaleBand>(lo, hi); }

inline RegionMask gamma_tube(const ParabolicPath& path, double eps) {
    return std::make_shared<detail::GammaTube>(path, eps);
}

inline RegionMask raster_mask(Raster r) { return std::make_shared<detail::RasterMask>(std::move(r)); }

inline RegionMask complement(RegionMask m) { return std::make_shared<detail::ComplementMask>(std::move(m)); }
inline RegionMask intersection(RegionMask x, RegionMask y) {
    return std::make_shared<detail::BinaryMask>(std::move(x), std::move(y), false);
}
inline RegionMask union_of(RegionMask x, RegionMask y) {
    return std::make_shared<detail::BinaryMask>(std::move(x), std::move(y), true);
}
inline RegionMask gamma_neighborhood(RegionMask m, double eps, Vec2 origin = {0.0, 0.0}) {
    require(eps > 0, ErrorKind::config, "eps must be positive");
    return std::make_shared<detail::NeighborhoodMask>(std::move(m), eps, origin);
}

// ---- influence region ----------------------------------------------------------

// Indicator of a set in R^n sampled on a signal grid.
struct GridSet {
    int dim = 1;
    std::size_t n = 0;
    double length = 1.0;
    std::vector<std::uint8_t> member;

    bool empty() const { return std::none_of(member.begin(), member.end(), [](auto v) { return v != 0; }); }
};

namespace detail {

class InfluenceMask final : public MaskNode {
public:
    explicit InfluenceMask(GridSet set) : set_(std::move(set)) {
        require(!set_.empty(), ErrorKind::precondition, "influence region of an empty set");
        std::vector<std::size_t> nearest;
        distance_transform(set_.member.data(), set_.dim, set_.n, d2_, nearest);
    }

    double distance_at(std::size_t idx) const { return std::sqrt(d2_[idx]) * set_.length / static_cast<double>(set_.n); }

    Raster rasterize(const Lattice& lat) const override {
        require(lat.dim == set_.dim && lat.n == set_.n && lat.length == set_.length, ErrorKind::config,
                "influence set grid differs from lattice");
        Raster r(lat);
        for (std::size_t j = 0; j < lat.scales.count; ++j) {
            double a = lat.scales.scale(j);
            for (std::size_t i = 0; i < lat.plane(); ++i)
                if (distance_at(i) <= a) r.set(j, i);
        }
        return r;
    }

    // Off-lattice points use the nearest grid sample of the distance map.
    std::optional<bool> contains(const HalfSpacePoint& p) const override {
        double h = set_.length / static_cast<double>(set_.n);
        auto clampi = [&](double v) {
            long i = std::lround(v / h);
            return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(set_.n) - 1));
        };
        std::size_t idx = set_.dim == 1 ? clampi(p.b[0]) : clampi(p.b[1]) * set_.n + clampi(p.b[0]);
        return distance_at(idx) <= p.a;
    }

    nlohmann::json to_json() const override {
        std::size_t c = 0;
        for (auto v : set_.member) c += v;
        return {{"family", "influence-region"}, {"params", {{"set_members", c}}}};
    }

private:
    GridSet set_;
    std::vector<double> d2_;
};

} // namespace detail

// ∪_{b∈Ω} {(β,α): |β − b| <= α}
inline RegionMask influence_region(const GridSet& omega) {
    return std::make_shared<detail::InfluenceMask>(omega);
}

// ---- well separation -------------------------------------------------------------

struct SeparationReport {
    bool verdict = true;
    bool vacuous = false;
    double margin = std::numeric_limits<double>::infinity();  // min of dist − Δ^ε
    HalfSpacePoint omega_point;
    HalfSpacePoint sigma_point;
    double witness_dist = std::numeric_limits<double>::infinity();
};

// dist((b,a), Σ) > Δ((b,a))^ε for every sampled (b,a) ∈ Ω; Δ measured from origin.
inline SeparationReport well_separated(const Raster& omega, const Raster& sigma, double eps,
                                       const Vec2& origin = {0.0, 0.0}) {
    require(omega.lattice == sigma.lattice, ErrorKind::config, "rasters live on different lattices");
    require(eps > 0, ErrorKind::config, "eps must be positive");
    SeparationReport rep;
    const auto& lat = omega.lattice;
    if (omega.empty() || sigma.empty()) {
        rep.vacuous = true;
        return rep;
    }
    const std::size_t J = lat.scales.count, P = lat.plane();
    const double h = lat.step();
    std::vector<std::vector<double>> d(J);
    std::vector<std::vector<std::size_t>> arg(J);
    for (std::size_t j = 0; j < J; ++j) {
        if (sigma.slice_empty(j)) continue;
        detail::distance_transform(sigma.bits.data() + j * P, lat.dim, lat.n, d[j], arg[j]);
        for (auto& v : d[j]) v = std::sqrt(v) * h;
    }
    for (std::size_t j = 0; j < J; ++j) {
        double a = lat.scales.scale(j);
        for (std::size_t i = 0; i < P; ++i) {
            if (!omega.at(j, i)) continue;
            Vec2 b = lat.position(i);
            double r = std::pow(delta(norm({b[0] - origin[0], b[1] - origin[1]}, lat.dim), a), eps);
            double best = std::numeric_limits<double>::infinity();
            std::size_t bj = 0, bi = 0;
            for (std::size_t l = 0; l < J; ++l) {
                if (d[l].empty()) continue;
                double ap = lat.scales.scale(l);
                double v = a / ap + ap / a + d[l][i] * (1.0 / a + 1.0 / ap);
                if (v < best) { best = v; bj = l; bi = arg[l][i]; }
            }
            double m = best - r;
            if (m < rep.margin) {
                rep.margin = m;
                rep.omega_point = lat.point(j, i);
                rep.sigma_point = lat.point(bj, bi);
                rep.witness_dist = best;
            }
        }
    }
    rep.verdict = rep.margin > 0;
    return rep;
}

inline SeparationReport well_separated(const RegionMask& omega, const RegionMask& sigma, double eps,
                                       const Lattice& lat, const Vec2& origin = {0.0, 0.0}) {
    return well_separated(omega->rasterize(lat), sigma->rasterize(lat), eps, origin);
}

// ---- JSON ---------------------------------------------------------------------------

inline Vec2 vec2_from_json(const nlohmann::json& j, int dim) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    auto v = j.get<std::vector<double>>();
    require(!v.empty() && v.size() <= 2, ErrorKind::config, "vector must have one or two components");
    Vec2 out{v[0], v.size() > 1 ? v[1] : 0.0};
    if (dim == 1) out[1] = 0.0;
    return out;
}

inline ParabolicPath path_from_json(const nlohmann::json& p, int dim) {
    ParabolicPath path;
    path.dim = dim;
    if (p.contains("origin")) path.origin = vec2_from_json(p["origin"], dim);
    if (p.contains("xi")) path.xi = vec2_from_json(p["xi"], dim);
    path.gamma = p.value("gamma", path.gamma);
    path.lambda_lo = p.value("lambda_lo", path.lambda_lo);
    path.lambda_hi = p.value("lambda_hi", path.lambda_hi);
    path.count = p.value("samples", path.count);
    path.validate();
    return path;
}

inline RegionMask mask_from_json(const nlohmann::json& j, int dim) {
    try {
        require(j.is_object(), ErrorKind::config, "region mask must be a JSON object");
        std::string family = j.at("family").get<std::string>();
        nlohmann::json p = j.value("params", nlohmann::json::object());
        RegionMask m;
        if (family == "empty") {
            m = empty_mask();
        } else if (family == "full") {
            m = full_mask();
        } else if (family == "parabolic-strip") {
            std::string side = p.value("side", std::string("above"));
            require(side == "above" || side == "below", ErrorKind::config, "strip side must be above or below");
            Vec2 c = p.contains("center") ? vec2_from_json(p["center"], dim) : Vec2{0.0, 0.0};
            m = parabolic_strip(p.at("alpha").get<double>(), side == "above",
                                p.value("a_max", std::numeric_limits<double>::infinity()), c, p.value("a_min", 0.0));
        } else if (family == "scale-band") {
            m = scale_band(p.at("a_min").get<double>(), p.at("a_max").get<double>());
        } else if (family == "gamma-tube") {
            m = gamma_tube(path_from_json(p, dim), p.value("eps", 0.25));
        } else {
            fail(ErrorKind::config, "unknown mask family '" + family + "'");
        }
        for (const auto& op : j.value("ops", nlohmann::json::array())) {
            std::string name = op.at("op").get<std::string>();
            if (name == "complement") {
                m = complement(m);
            } else if (name == "intersect") {
                m = intersection(m, mask_from_json(op.at("with"), dim));
            } else if (name == "union") {
                m = union_of(m, mask_from_json(op.at("with"), dim));
            } else if (name == "gamma") {
                Vec2 o = op.contains("origin") ? vec2_from_json(op["origin"], dim) : Vec2{0.0, 0.0};
                m = gamma_neighborhood(m, op.at("eps").get<double>(), o);
            } else {
                fail(ErrorKind::config, "unknown mask op '" + name + "'");
            }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::config, std::string("bad region mask: ") + e.what());
    }
}

} // namespace cuspscope
