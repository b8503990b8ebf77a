#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "geometry.hpp"
#include "grid.hpp"

namespace cuspscope {

struct SignalGrid {
    int dim = 1;
    std::size_t n = 1024;
    double length = 1.0;
    bool zero_mean = true;  // subtract the sample mean after windowing

    GridSignal make() const { return GridSignal(dim, n, length); }
};

namespace detail {

inline double smooth_step(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    double f0 = std::exp(-1.0 / u), f1 = std::exp(-1.0 / (1.0 - u));
    return f0 / (f0 + f1);
}

inline void finish(GridSignal& s, bool zero_mean) {
    if (!zero_mean) return;
    double m = s.mean_real();
    for (auto& z : s.data) z -= m;
}

// Minimum-image offset on the periodic domain.
inline double wrap(double d, double L) { return d - L * std::round(d / L); }

} // namespace detail

// Smooth compactly supported window: 1 for |t| <= R/2, 0 for |t| >= R.
inline double window(double t, double R) { return detail::smooth_step((R - std::abs(t)) / (0.5 * R)); }

// K = {y : t = (y − apex | axis) ∈ (0, extent], |y − apex − t·axis| <= c t^δ}
struct CuspDomain {
    Vec2 apex{0.2, 0.5};
    Vec2 axis{1.0, 0.0};
    double degree = 2.0;
    double width = 7.0;
    double extent = 0.75;

    void validate() const {
        require(degree > 1.0, ErrorKind::config, "cusp degree must exceed 1");
        require(width > 0.0, ErrorKind::config, "cusp half-width constant must be positive");
        require(extent > 0.0, ErrorKind::config, "cusp extent must be positive");
        require(std::hypot(axis[0], axis[1]) > 0, ErrorKind::config, "cusp axis must be non-zero");
    }

    Vec2 unit_axis() const {
        double r = std::hypot(axis[0], axis[1]);
        return {axis[0] / r, axis[1] / r};
    }

    // (t, |perpendicular offset|)
    std::pair<double, double> local(const Vec2& y) const {
        Vec2 e = unit_axis();
        double dx = y[0] - apex[0], dy = y[1] - apex[1];
        double t = dx * e[0] + dy * e[1];
        double p = std::abs(-dx * e[1] + dy * e[0]);
        return {t, p};
    }

    bool contains(const Vec2& y) const {
        auto [t, p] = local(y);
        return t > 0 && t <= extent && p <= width * std::pow(t, degree);
    }

    // Signed margin, positive inside; |margin| bounds the Euclidean distance to the boundary.
    double margin(const Vec2& y) const {
        auto [t, p] = local(y);
        if (t <= 0) return -std::hypot(t, p);
        if (t > extent) return -std::hypot(t - extent, std::max(0.0, p - width * std::pow(extent, degree)));
        return std::min({width * std::pow(t, degree) - p, extent - t, t});
    }
};

// Smooth partition of unity: 1 on K eroded by blend, 0 off K dilated by blend.
inline double cusp_partition(const CuspDomain& K, const Vec2& y, double blend) {
    return detail::smooth_step(0.5 + K.margin(y) / (2.0 * blend));
}

inline GridSet cusp_set(const CuspDomain& K, const SignalGrid& g) {
    GridSet s{g.dim, g.n, g.length, std::vector<std::uint8_t>(g.dim == 1 ? g.n : g.n * g.n)};
    GridSignal tmp = g.make();
    for (std::size_t i = 0; i < s.member.size(); ++i) s.member[i] = K.contains(tmp.position(i)) ? 1 : 0;
    return s;
}

// |x − x0|^α · w(x − x0)
inline GridSignal holder_cusp(double alpha, const Vec2& x0, double window_radius, const SignalGrid& g) {
    require(alpha > 0 && alpha < 1, ErrorKind::config, "Holder exponent must lie in (0,1)");
    require(window_radius > 0 && window_radius <= 0.5 * g.length, ErrorKind::config,
            "window radius must lie in (0, L/2]");
    GridSignal s = g.make();
    double h = s.step();
    for (int c = 0; c < g.dim; ++c) {
        double u = x0[c] / h;
        require(std::abs(u - std::round(u)) < 1e-9, ErrorKind::config, "x0 must be grid aligned");
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        Vec2 p = s.position(i);
        Vec2 d{detail::wrap(p[0] - x0[0], g.length), g.dim == 2 ? detail::wrap(p[1] - x0[1], g.length) : 0.0};
        double r = norm(d, g.dim);
        s[i] = std::pow(r, alpha) * window(r, window_radius);
    }
    detail::finish(s, g.zero_mean);
    return s;
}

// Weierstrass-type sum over dyadic harmonics 2^j along direction e.
struct RoughSpec {
    double beta = 0.3;
    Vec2 direction{1.0, 0.0};
    std::uint64_t seed = 1;
    bool anchored = false;  // phases aligned so every term peaks at `anchor`
    Vec2 anchor{0.0, 0.0};
    std::size_t max_harmonic = 0;  // 0: up to the grid Nyquist
};

namespace detail {

// Σ_j 2^{-βj} cos(2π m_j·x/L + φ_j), m_j = round(2^j e), harmonics up to the limit.
inline GridSignal dyadic_sum(const RoughSpec& spec, const SignalGrid& g) {
    GridSignal s = g.make();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    double er = std::hypot(spec.direction[0], g.dim == 2 ? spec.direction[1] : 0.0);
    require(er > 0, ErrorKind::config, "rough direction must be non-zero");
    Vec2 e{spec.direction[0] / er, g.dim == 2 ? spec.direction[1] / er : 0.0};
    std::size_t limit = spec.max_harmonic ? spec.max_harmonic : g.n / 2 - 1;
    const double base = 2.0 * std::numbers::pi / g.length;
    for (int j = 0;; ++j) {
        double m = std::ldexp(1.0, j);
        if (m > static_cast<double>(limit)) break;
        double mx = std::round(m * e[0]), my = std::round(m * e[1]);
        double phi = phase(rng);
        if (spec.anchored) phi = -base * (mx * spec.anchor[0] + my * spec.anchor[1]);
        double amp = std::pow(2.0, -spec.beta * j);
        for (std::size_t i = 0; i < s.size(); ++i) {
            Vec2 p = s.position(i);
            s[i] += amp * std::cos(base * (mx * p[0] + my * p[1]) + phi);
        }
    }
    return s;
}

} // namespace detail

inline GridSignal rough_background(const RoughSpec& spec, const SignalGrid& g) {
    require(spec.beta > 0 && spec.beta < 1, ErrorKind::config, "rough exponent must lie in (0,1)");
    GridSignal s = detail::dyadic_sum(spec, g);
    detail::finish(s, g.zero_mean);
    return s;
}

// Real random signal whose spectrum is confined to k_lo <= |k| <= k_hi, unit RMS.
inline GridSignal band_limited_random(double k_lo, double k_hi, std::uint64_t seed, const SignalGrid& g) {
    require(k_lo >= 0 && k_hi > k_lo, ErrorKind::config, "band needs 0 <= k_lo < k_hi");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    auto k = wave_vectors(g.dim, g.n, g.length);
    std::vector<cplx> v(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
        double r = std::hypot(k[i][0], k[i][1]);
        double re = nd(rng), im = nd(rng);
        if (r >= k_lo && r <= k_hi && r > 0) v[i] = {re, im};
    }
    GridSignal s = from_spectrum(std::move(v), g.dim, g.n, g.length);
    double rms = 0.0;
    for (auto& z : s.data) {
        z = z.real();
        rms += std::norm(z);
    }
    rms = std::sqrt(rms / static_cast<double>(s.size()));
    if (rms > 0)
        for (auto& z : s.data) z /= rms;
    detail::finish(s, g.zero_mean);
    return s;
}

// Inside component of a composite signal.
struct SmoothSpec {
    enum class Kind { zero, constant, band_limited, weierstrass } kind = Kind::zero;
    double value = 0.0;     // constant
    double k_max = 20.0;    // band-limited
    std::uint64_t seed = 2;
    RoughSpec weierstrass;  // finite smoothness budget = weierstrass.beta (may exceed 1)

    double budget() const {
        return kind == Kind::weierstrass ? weierstrass.beta : std::numeric_limits<double>::infinity();
    }
};

namespace detail {

inline GridSignal smooth_component(const SmoothSpec& spec, const SignalGrid& g) {
    SignalGrid raw = g;
    raw.zero_mean = false;
    switch (spec.kind) {
    case SmoothSpec::Kind::zero: return raw.make();
    case SmoothSpec::Kind::constant: {
        GridSignal s = raw.make();
        for (auto& z : s.data) z = spec.value;
        return s;
    }
    case SmoothSpec::Kind::band_limited: return band_limited_random(0.0, spec.k_max, spec.seed, raw);
    case SmoothSpec::Kind::weierstrass: return dyadic_sum(spec.weierstrass, raw);
    }
    return raw.make();
}

inline void check_cusp(const CuspDomain& K, const SignalGrid& g) {
    K.validate();
    double h = g.length / static_cast<double>(g.n);
    require(K.extent >= 4.0 * h, ErrorKind::config, "degenerate cusp: extent below 4 grid steps");
    require(g.dim == 2, ErrorKind::unsupported_dimension, "cusp signals are two-dimensional");
}

} // namespace detail

// χ·inside + (1 − χ)·outside with the smooth cusp partition χ.
inline GridSignal composite_cusp(const CuspDomain& K, const SmoothSpec& inside, const RoughSpec& outside,
                                 double blend, const SignalGrid& g) {
    detail::check_cusp(K, g);
    require(outside.beta < inside.budget(), ErrorKind::config,
            "rough exponent must be below the smoothness budget of the inside part");
    require(blend > 0, ErrorKind::config, "blend width must be positive");
    SignalGrid raw = g;
    raw.zero_mean = false;
    GridSignal in = detail::smooth_component(inside, raw);
    GridSignal out = rough_background(outside, raw);
    GridSignal s = g.make();
    for (std::size_t i = 0; i < s.size(); ++i) {
        double chi = cusp_partition(K, s.position(i), blend);
        s[i] = chi * in[i] + (1.0 - chi) * out[i];
    }
    detail::finish(s, g.zero_mean);
    return s;
}

// sin(t^{-α}) inside K, phase frozen below t_min where the local wavelength t^{α+1}/α
// reaches 4 grid steps; rough outside.
inline GridSignal oscillating_cusp(const CuspDomain& K, double alpha, const RoughSpec& outside, double blend,
                                   const SignalGrid& g) {
    detail::check_cusp(K, g);
    require(alpha > 1, ErrorKind::config, "oscillation exponent must exceed 1");
    SignalGrid raw = g;
    raw.zero_mean = false;
    GridSignal out = rough_background(outside, raw);
    GridSignal s = g.make();
    double t_min = std::pow(4.0 * s.step() * alpha, 1.0 / (alpha + 1.0));
    for (std::size_t i = 0; i < s.size(); ++i) {
        Vec2 p = s.position(i);
        double chi = cusp_partition(K, p, blend);
        double t = std::max(K.local(p).first, t_min);
        s[i] = chi * std::sin(std::pow(t, -alpha)) + (1.0 - chi) * out[i];
    }
    detail::finish(s, g.zero_mean);
    return s;
}

inline double oscillating_cusp_tmin(double alpha, double step) {
    return std::pow(4.0 * step * alpha, 1.0 / (alpha + 1.0));
}

// ---- JSON --------------------------------------------------------------------------

inline RoughSpec rough_from_json(const nlohmann::json& j, int dim, std::uint64_t seed) {
    RoughSpec r;
    r.beta = j.value("beta", r.beta);
    if (j.contains("direction")) r.direction = vec2_from_json(j["direction"], dim);
    r.seed = j.value("seed", seed);
    r.anchored = j.value("phase", std::string("random")) == "anchored";
    if (j.contains("anchor")) r.anchor = vec2_from_json(j["anchor"], dim);
    r.max_harmonic = j.value("max_harmonic", std::size_t{0});
    return r;
}

inline nlohmann::json to_json(const RoughSpec& r) {
    return {{"beta", r.beta},
            {"direction", {r.direction[0], r.direction[1]}},
            {"seed", r.seed},
            {"phase", r.anchored ? "anchored" : "random"},
            {"anchor", {r.anchor[0], r.anchor[1]}},
            {"max_harmonic", r.max_harmonic}};
}

inline CuspDomain cusp_from_json(const nlohmann::json& j) {
    CuspDomain K;
    if (j.contains("apex")) K.apex = vec2_from_json(j["apex"], 2);
    if (j.contains("axis")) K.axis = vec2_from_json(j["axis"], 2);
    K.degree = j.value("degree", K.degree);
    K.width = j.value("width", K.width);
    K.extent = j.value("extent", K.extent);
    K.validate();
    return K;
}

inline nlohmann::json to_json(const CuspDomain& K) {
    return {{"apex", {K.apex[0], K.apex[1]}},
            {"axis", {K.axis[0], K.axis[1]}},
            {"degree", K.degree},
            {"width", K.width},
            {"extent", K.extent}};
}

inline SmoothSpec smooth_from_json(const nlohmann::json& j, int dim, std::uint64_t seed) {
    SmoothSpec s;
    std::string kind = j.value("kind", std::string("zero"));
    if (kind == "zero") {
        s.kind = SmoothSpec::Kind::zero;
    } else if (kind == "constant") {
        s.kind = SmoothSpec::Kind::constant;
        s.value = j.value("value", 0.0);
    } else if (kind == "band-limited") {
        s.kind = SmoothSpec::Kind::band_limited;
        s.k_max = j.value("k_max", s.k_max);
        s.seed = j.value("seed", seed + 1);
    } else if (kind == "weierstrass") {
        s.kind = SmoothSpec::Kind::weierstrass;
        s.weierstrass = rough_from_json(j, dim, seed + 1);
        s.weierstrass.beta = j.value("beta", 3.0);
    } else {
        fail(ErrorKind::config, "unknown smooth component kind '" + kind + "'");
    }
    return s;
}

inline nlohmann::json to_json(const SmoothSpec& s) {
    switch (s.kind) {
    case SmoothSpec::Kind::zero: return {{"kind", "zero"}};
    case SmoothSpec::Kind::constant: return {{"kind", "constant"}, {"value", s.value}};
    case SmoothSpec::Kind::band_limited: return {{"kind", "band-limited"}, {"k_max", s.k_max}, {"seed", s.seed}};
    case SmoothSpec::Kind::weierstrass: {
        auto j = to_json(s.weierstrass);
        j["kind"] = "weierstrass";
        return j;
    }
    }
    return {};
}

// Builds a signal from {"generator": ..., "params": {...}}; fills defaults into `resolved`.
inline GridSignal signal_from_json(const nlohmann::json& spec, const SignalGrid& grid, std::uint64_t seed,
                                   nlohmann::json* resolved = nullptr) {
    try {
        std::string gen = spec.at("generator").get<std::string>();
        nlohmann::json p = spec.value("params", nlohmann::json::object());
        nlohmann::json out = {{"generator", gen}};
        SignalGrid g = grid;
        g.zero_mean = p.value("zero_mean", true);
        GridSignal s;
        if (gen == "holder-cusp") {
            double alpha = p.value("alpha", 0.5);
            Vec2 x0 = p.contains("x0") ? vec2_from_json(p["x0"], g.dim)
                                       : Vec2{0.5 * g.length, g.dim == 2 ? 0.5 * g.length : 0.0};
            double R = p.value("window", 0.45 * g.length);
            s = holder_cusp(alpha, x0, R, g);
            out["params"] = {{"alpha", alpha}, {"window", R}};
            out["params"]["x0"] = g.dim == 2 ? nlohmann::json{x0[0], x0[1]} : nlohmann::json{x0[0]};
        } else if (gen == "composite-cusp" || gen == "oscillating-cusp") {
            CuspDomain K = cusp_from_json(p.value("cusp", nlohmann::json::object()));
            RoughSpec outside = rough_from_json(p.value("outside", nlohmann::json::object()), g.dim, seed);
            if (!p.contains("outside") || !p["outside"].contains("phase")) {
                outside.anchored = true;
                outside.anchor = K.apex;
            }
            double blend = p.value("blend", 3.0 * g.length / static_cast<double>(g.n));
            out["params"] = {{"cusp", to_json(K)}, {"outside", to_json(outside)}, {"blend", blend}};
            if (gen == "composite-cusp") {
                SmoothSpec inside = smooth_from_json(p.value("inside", nlohmann::json::object()), g.dim, seed);
                s = composite_cusp(K, inside, outside, blend, g);
                out["params"]["inside"] = to_json(inside);
            } else {
                double alpha = p.value("alpha", 1.5);
                s = oscillating_cusp(K, alpha, outside, blend, g);
                out["params"]["alpha"] = alpha;
            }
        } else if (gen == "rough-background") {
            RoughSpec r = rough_from_json(p, g.dim, seed);
            s = rough_background(r, g);
            out["params"] = to_json(r);
        } else if (gen == "band-limited-random") {
            double lo = p.value("k_lo", 0.0), hi = p.value("k_hi", 0.25 * std::numbers::pi * g.n / g.length);
            std::uint64_t sd = p.value("seed", seed);
            s = band_limited_random(lo, hi, sd, g);
            out["params"] = {{"k_lo", lo}, {"k_hi", hi}, {"seed", sd}};
        } else if (gen == "zero") {
            s = g.make();
            out["params"] = nlohmann::json::object();
        } else {
            fail(ErrorKind::config, "unknown signal generator '" + gen + "'");
        }
        out["params"]["zero_mean"] = g.zero_mean;
        if (resolved) *resolved = out;
        return s;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::config, std::string("bad signal spec: ") + e.what());
    }
}

} // namespace cuspscope
