#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "grid.hpp"

namespace cuspscope {

enum class WaveletKind { log_normal, gaussian_derivative, laplacian_of, tabulated_spectral };

// Fourier-domain wavelet definition. Spectra are real for every catalog kind.
struct WaveletSpec {
    WaveletKind kind = WaveletKind::log_normal;
    int dimension = 1;
    double normalization = 1.0;
    double sigma = 1.0;   // log-normal width
    double center = 1.0;  // log-normal peak |k|
    int order = 2;        // gaussian-derivative vanishing order
    std::shared_ptr<const WaveletSpec> inner;
    // Direction factors for tabulated-spectral. 1-D: {k<0, k>0}; 2-D: samples at
    // angles 2*pi*i/T, periodic linear interpolation. A single entry is a constant.
    std::vector<double> table;

    bool is_radial() const {
        switch (kind) {
        case WaveletKind::log_normal:
        case WaveletKind::gaussian_derivative: return true;
        case WaveletKind::laplacian_of: return inner->is_radial();
        case WaveletKind::tabulated_spectral: {
            if (!inner->is_radial()) return false;
            for (double v : table)
                if (v != table.front()) return false;
            return true;
        }
        }
        return false;
    }

    // All moments vanish (ĝ flat at the origin).
    bool in_s0() const {
        switch (kind) {
        case WaveletKind::log_normal: return true;
        case WaveletKind::gaussian_derivative: return false;
        default: return inner->in_s0();
        }
    }

    std::string name() const {
        switch (kind) {
        case WaveletKind::log_normal: return "log-normal";
        case WaveletKind::gaussian_derivative: return "gaussian-derivative(" + std::to_string(order) + ")";
        case WaveletKind::laplacian_of: return "laplacian-of(" + inner->name() + ")";
        case WaveletKind::tabulated_spectral: return "tabulated-spectral(" + inner->name() + ")";
        }
        return "unknown";
    }
};

inline WaveletSpec log_normal_wavelet(int dim = 1, double sigma = 1.0, double center = 1.0) {
    check_dimension(dim);
    require(sigma > 0 && center > 0, ErrorKind::config, "log-normal needs sigma > 0 and center > 0");
    WaveletSpec w;
    w.kind = WaveletKind::log_normal;
    w.dimension = dim;
    w.sigma = sigma;
    w.center = center;
    return w;
}

inline WaveletSpec gaussian_derivative_wavelet(int dim, int m) {
    check_dimension(dim);
    require(m >= 1, ErrorKind::config, "gaussian-derivative order must be >= 1");
    WaveletSpec w;
    w.kind = WaveletKind::gaussian_derivative;
    w.dimension = dim;
    w.order = m;
    return w;
}

inline WaveletSpec laplacian_of(const WaveletSpec& g) {
    WaveletSpec w;
    w.kind = WaveletKind::laplacian_of;
    w.dimension = g.dimension;
    w.inner = std::make_shared<const WaveletSpec>(g);
    return w;
}

inline WaveletSpec tabulated_wavelet(const WaveletSpec& base, std::vector<double> table) {
    require(!table.empty(), ErrorKind::config, "tabulated-spectral needs a non-empty direction table");
    if (base.dimension == 1)
        require(table.size() <= 2, ErrorKind::config, "1-D direction table has at most two entries");
    WaveletSpec w;
    w.kind = WaveletKind::tabulated_spectral;
    w.dimension = base.dimension;
    w.inner = std::make_shared<const WaveletSpec>(base);
    w.table = std::move(table);
    return w;
}

inline WaveletSpec with_normalization(WaveletSpec w, double c) {
    require(c > 0 && std::isfinite(c), ErrorKind::config, "normalization constant must be positive");
    w.normalization = c;
    return w;
}

namespace detail {

inline double direction_factor(const WaveletSpec& w, double kx, double ky) {
    const auto& t = w.table;
    if (t.size() == 1) return t[0];
    if (w.dimension == 1) return kx < 0 ? t[0] : t[1];
    double theta = std::atan2(ky, kx);
    if (theta < 0) theta += 2.0 * std::numbers::pi;
    double u = theta / (2.0 * std::numbers::pi) * static_cast<double>(t.size());
    auto i0 = static_cast<std::size_t>(std::floor(u)) % t.size();
    double frac = u - std::floor(u);
    std::size_t i1 = (i0 + 1) % t.size();
    return (1.0 - frac) * t[i0] + frac * t[i1];
}

} // namespace detail

// ĝ at wave vector (kx, ky); ky is ignored in 1-D. Exactly zero at the origin.
inline double spectrum_value(const WaveletSpec& w, double kx, double ky = 0.0) {
    double r = w.dimension == 1 ? std::abs(kx) : std::hypot(kx, ky);
    if (r == 0.0) return 0.0;
    double v = 0.0;
    switch (w.kind) {
    case WaveletKind::log_normal: {
        double l = std::log(r / w.center) / w.sigma;
        v = std::exp(-l * l);
        break;
    }
    case WaveletKind::gaussian_derivative:
        v = std::pow(r, w.order) * std::exp(-0.5 * r * r);
        break;
    case WaveletKind::laplacian_of:
        v = -r * r * spectrum_value(*w.inner, kx, ky);
        break;
    case WaveletKind::tabulated_spectral:
        v = spectrum_value(*w.inner, kx, ky) * detail::direction_factor(w, kx, ky);
        break;
    }
    return w.normalization * v;
}

inline cplx eval_spectrum(const WaveletSpec& w, const Vec2& k) {
    check_dimension(w.dimension);
    return {spectrum_value(w, k[0], k[1]), 0.0};
}

inline std::vector<cplx> eval_spectrum(const WaveletSpec& w, const std::vector<Vec2>& freqs) {
    check_dimension(w.dimension);
    std::vector<cplx> out(freqs.size());
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        require(std::isfinite(freqs[i][0]) && std::isfinite(freqs[i][1]), ErrorKind::config,
                "frequency samples must be finite");
        out[i] = {spectrum_value(w, freqs[i][0], freqs[i][1]), 0.0};
    }
    return out;
}

// Real multiplier ĝ(a k) over a signal grid, in spectral layout.
inline std::vector<double> spectral_multiplier(const WaveletSpec& w, const std::vector<Vec2>& k, double a) {
    std::vector<double> m(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) m[i] = spectrum_value(w, a * k[i][0], a * k[i][1]);
    return m;
}

struct QuadratureSpec {
    double t_limit = 50.0;       // search |ln a| <= t_limit
    double tail_tolerance = 1e-12;  // relative to the integrand peak
    double relative_tolerance = 1e-13;
    double initial_step = 0.1;
    int max_halvings = 14;
};

struct AdmissibilityProfile {
    std::vector<Vec2> directions;
    std::vector<double> values;
    double min_value = 0.0;
    double max_value = 0.0;
    bool cross = false;
};

inline std::vector<Vec2> default_directions(int dim, std::size_t count = 16) {
    check_dimension(dim);
    if (dim == 1) return {{-1.0, 0.0}, {1.0, 0.0}};
    std::vector<Vec2> d(count);
    for (std::size_t i = 0; i < count; ++i) {
        double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
        d[i] = {std::cos(th), std::sin(th)};
    }
    return d;
}

// ∫ da/a ĝ(a θ) ĥ(a θ) for a unit direction θ, trapezoid in t = ln a.
inline double profile_integral(const WaveletSpec& g, const WaveletSpec& h, const Vec2& theta,
                               const QuadratureSpec& q = {}) {
    auto f = [&](double t) {
        double a = std::exp(t);
        return spectrum_value(g, a * theta[0], a * theta[1]) * spectrum_value(h, a * theta[0], a * theta[1]);
    };
    const double scan = 0.02;
    const auto count = static_cast<std::size_t>(std::ceil(2.0 * q.t_limit / scan)) + 1;
    std::vector<double> ts(count), fs(count);
    double peak = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        ts[i] = -q.t_limit + scan * static_cast<double>(i);
        fs[i] = f(ts[i]);
        peak = std::max(peak, std::abs(fs[i]));
    }
    if (peak == 0.0) return 0.0;
    const double cut = q.tail_tolerance * peak;
    require(std::abs(fs.front()) < cut && std::abs(fs.back()) < cut, ErrorKind::quadrature,
            "admissibility integrand tail exceeds tolerance within |ln a| <= " + std::to_string(q.t_limit));
    std::size_t lo = 0, hi = count - 1;
    while (lo + 1 < count && std::abs(fs[lo + 1]) < cut) ++lo;
    while (hi > 0 && std::abs(fs[hi - 1]) < cut) --hi;
    const double t0 = ts[lo], t1 = ts[hi];

    auto trapezoid = [&](std::size_t pieces) {
        double h = (t1 - t0) / static_cast<double>(pieces);
        double s = 0.5 * (f(t0) + f(t1));
        for (std::size_t i = 1; i < pieces; ++i) s += f(t0 + h * static_cast<double>(i));
        return s * h;
    };
    auto pieces = static_cast<std::size_t>(std::max(2.0, std::ceil((t1 - t0) / q.initial_step)));
    double prev = trapezoid(pieces);
    for (int it = 0; it < q.max_halvings; ++it) {
        pieces *= 2;
        double cur = trapezoid(pieces);
        if (std::abs(cur - prev) <= q.relative_tolerance * std::abs(cur)) return cur;
        prev = cur;
    }
    fail(ErrorKind::quadrature, "admissibility quadrature did not converge");
}

inline AdmissibilityProfile admissibility_profile(const WaveletSpec& g, const WaveletSpec& h,
                                                  std::vector<Vec2> directions = {},
                                                  const QuadratureSpec& q = {}) {
    check_dimension(g.dimension);
    require(g.dimension == h.dimension, ErrorKind::config, "wavelet dimensions differ");
    if (directions.empty()) directions = default_directions(g.dimension);
    AdmissibilityProfile p;
    p.cross = &g != &h;
    p.values.reserve(directions.size());
    for (auto d : directions) {
        double r = norm(d, g.dimension);
        require(r > 0, ErrorKind::config, "direction must be non-zero");
        d = {d[0] / r, g.dimension == 1 ? 0.0 : d[1] / r};
        p.values.push_back(profile_integral(g, h, d, q));
    }
    p.directions = std::move(directions);
    p.min_value = *std::min_element(p.values.begin(), p.values.end());
    p.max_value = *std::max_element(p.values.begin(), p.values.end());
    return p;
}

inline AdmissibilityProfile admissibility_profile(const WaveletSpec& g, const QuadratureSpec& q = {}) {
    auto p = admissibility_profile(g, g, {}, q);
    p.cross = false;
    return p;
}

namespace detail {

// Direction table with entries f(m_g(θ_i)) matching the tabulated-spectral layout.
template <class F>
WaveletSpec profile_scaled(const WaveletSpec& g, F&& f, const QuadratureSpec& q) {
    std::vector<Vec2> dirs;
    if (g.dimension == 1) {
        dirs = default_directions(1);
    } else if (g.is_radial()) {
        dirs = {{1.0, 0.0}};
    } else {
        dirs = default_directions(2, 64);
    }
    auto p = admissibility_profile(g, g, dirs, q);
    require(p.min_value > 0 && std::isfinite(p.max_value), ErrorKind::inadmissible,
            "wavelet " + g.name() + " is not admissible (profile min " + std::to_string(p.min_value) + ")");
    std::vector<double> table;
    for (double v : p.values) table.push_back(f(v));
    if (g.is_radial()) table.resize(1);
    return tabulated_wavelet(g, std::move(table));
}

} // namespace detail

// r̂ = ĝ / m_g(direction): the pair (g, r) has cross-constant 1.
inline WaveletSpec reconstruction_wavelet(const WaveletSpec& g, const QuadratureSpec& q = {}) {
    return detail::profile_scaled(g, [](double m) { return 1.0 / m; }, q);
}

// ĝ / sqrt(m_g(direction)): a wavelet whose own profile is identically 1.
inline WaveletSpec normalized_wavelet(const WaveletSpec& g, const QuadratureSpec& q = {}) {
    return detail::profile_scaled(g, [](double m) { return 1.0 / std::sqrt(m); }, q);
}

// Largest m <= max_order such that |ĝ(k)| / |k|^j still tends to zero for all j <= m.
// Judged from the log-log slope over the decade k in [1e-6, 1e-5] in every default direction.
inline int moment_decay_order(const WaveletSpec& g, int max_order) {
    require(max_order >= 1, ErrorKind::config, "max order must be >= 1");
    const double k1 = 1e-6, k2 = 1e-5;
    for (int j = 1; j <= max_order; ++j) {
        for (const auto& d : default_directions(g.dimension, 8)) {
            double v1 = std::abs(spectrum_value(g, k1 * d[0], k1 * d[1]));
            double v2 = std::abs(spectrum_value(g, k2 * d[0], k2 * d[1]));
            if (v1 == 0.0) continue;  // underflow: faster than any power
            if (v2 == 0.0) return j - 1;
            double slope = std::log(v2 / v1) / std::log(k2 / k1) - j;
            if (slope < 0.5) return j - 1;
        }
    }
    return max_order;
}

// ---- JSON ------------------------------------------------------------------

inline const char* kind_string(WaveletKind k) {
    switch (k) {
    case WaveletKind::log_normal: return "log-normal";
    case WaveletKind::gaussian_derivative: return "gaussian-derivative";
    case WaveletKind::laplacian_of: return "laplacian-of";
    case WaveletKind::tabulated_spectral: return "tabulated-spectral";
    }
    return "";
}

inline nlohmann::json to_json(const WaveletSpec& w) {
    nlohmann::json params = nlohmann::json::object();
    switch (w.kind) {
    case WaveletKind::log_normal:
        params["sigma"] = w.sigma;
        params["center"] = w.center;
        break;
    case WaveletKind::gaussian_derivative: params["order"] = w.order; break;
    case WaveletKind::laplacian_of: params["inner"] = to_json(*w.inner); break;
    case WaveletKind::tabulated_spectral:
        params["inner"] = to_json(*w.inner);
        params["table"] = w.table;
        break;
    }
    params["normalization"] = w.normalization;
    return {{"kind", kind_string(w.kind)}, {"dimension", w.dimension}, {"params", params}};
}

inline WaveletSpec wavelet_from_json(const nlohmann::json& j, int default_dim = 1) {
    try {
        require(j.is_object(), ErrorKind::config, "wavelet spec must be a JSON object");
        std::string kind = j.at("kind").get<std::string>();
        int dim = j.value("dimension", default_dim);
        nlohmann::json params = j.value("params", nlohmann::json::object());
        WaveletSpec w;
        if (kind == "log-normal" || kind == "log-normal-radial") {
            w = log_normal_wavelet(dim, params.value("sigma", 1.0), params.value("center", 1.0));
        } else if (kind == "gaussian-derivative") {
            w = gaussian_derivative_wavelet(dim, params.value("order", 2));
        } else if (kind == "laplacian-of") {
            w = laplacian_of(wavelet_from_json(params.at("inner"), dim));
        } else if (kind == "tabulated-spectral") {
            w = tabulated_wavelet(wavelet_from_json(params.at("inner"), dim),
                                  params.at("table").get<std::vector<double>>());
        } else {
            fail(ErrorKind::config, "unknown wavelet kind '" + kind + "'");
        }
        require(w.dimension == dim, ErrorKind::config, "inner wavelet dimension mismatch");
        if (params.contains("normalization")) w = with_normalization(w, params["normalization"].get<double>());
        return w;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::config, std::string("bad wavelet spec: ") + e.what());
    }
}

} // namespace cuspscope
