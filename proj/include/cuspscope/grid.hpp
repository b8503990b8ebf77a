#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"
#include "fft.hpp"

namespace cuspscope {

using Vec2 = std::array<double, 2>;

inline double norm(const Vec2& v, int dim) {
    return dim == 1 ? std::abs(v[0]) : std::hypot(v[0], v[1]);
}

inline bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

inline void check_dimension(int dim) {
    require(dim == 1 || dim == 2, ErrorKind::unsupported_dimension,
            "dimension must be 1 or 2, got " + std::to_string(dim));
}

// Uniform periodic grid over [0, L)^dim; x is the fastest axis in 2-D.
struct GridSignal {
    int dim = 1;
    std::size_t n = 0;
    double length = 1.0;
    std::vector<cplx> data;

    GridSignal() = default;
    GridSignal(int d, std::size_t count, double L) : dim(d), n(count), length(L) {
        check_dimension(d);
        require(is_power_of_two(count), ErrorKind::config,
                "grid size must be a power of two, got " + std::to_string(count));
        require(L > 0, ErrorKind::config, "domain length must be positive");
        data.assign(size(), cplx{0.0, 0.0});
    }

    std::size_t size() const { return dim == 1 ? n : n * n; }
    double step() const { return length / static_cast<double>(n); }
    double cell_volume() const { return dim == 1 ? step() : step() * step(); }

    Vec2 position(std::size_t idx) const {
        if (dim == 1) return {static_cast<double>(idx) * step(), 0.0};
        return {static_cast<double>(idx % n) * step(), static_cast<double>(idx / n) * step()};
    }

    cplx& operator[](std::size_t i) { return data[i]; }
    const cplx& operator[](std::size_t i) const { return data[i]; }

    bool same_grid(const GridSignal& o) const { return dim == o.dim && n == o.n && length == o.length; }

    double l2_norm() const {
        double s = 0.0;
        for (const auto& z : data) s += std::norm(z);
        return std::sqrt(s * cell_volume());
    }

    double mean_real() const {
        double s = 0.0;
        for (const auto& z : data) s += z.real();
        return s / static_cast<double>(data.size());
    }
};

// Angular wavenumbers 2*pi*m/L with m in signed FFT order.
inline std::vector<double> wavenumbers(std::size_t n, double L) {
    std::vector<double> k(n);
    const double base = 2.0 * std::numbers::pi / L;
    for (std::size_t i = 0; i < n; ++i) {
        long m = i < (n + 1) / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
        k[i] = base * static_cast<double>(m);
    }
    return k;
}

// Wave vector of each spectral sample, in the same layout as GridSignal::data.
inline std::vector<Vec2> wave_vectors(int dim, std::size_t n, double L) {
    auto k = wavenumbers(n, L);
    std::vector<Vec2> out;
    if (dim == 1) {
        out.reserve(n);
        for (double kx : k) out.push_back({kx, 0.0});
    } else {
        out.reserve(n * n);
        for (std::size_t iy = 0; iy < n; ++iy)
            for (std::size_t ix = 0; ix < n; ++ix) out.push_back({k[ix], k[iy]});
    }
    return out;
}

inline std::vector<cplx> spectrum(const GridSignal& s) {
    std::vector<cplx> v = s.data;
    fft_forward(v, s.dim, s.n);
    return v;
}

inline GridSignal from_spectrum(std::vector<cplx> v, int dim, std::size_t n, double L) {
    GridSignal s(dim, n, L);
    fft_inverse(v, dim, n);
    s.data = std::move(v);
    return s;
}

// Geometric scale grid a_j = a_min q^j, j = 0..count-1, with quadrature weight ln q.
struct ScaleGrid {
    double a_min = 0.0;
    double a_max = 0.0;
    std::size_t count = 0;

    ScaleGrid() = default;
    ScaleGrid(double lo, double hi, std::size_t j) : a_min(lo), a_max(hi), count(j) { validate(); }

    void validate() const {
        require(a_min > 0 && a_max > a_min, ErrorKind::config, "scale grid needs 0 < a_min < a_max");
        require(count >= 2, ErrorKind::config, "scale grid needs at least two scales");
    }

    double log_ratio() const { return std::log(a_max / a_min) / static_cast<double>(count - 1); }
    double weight() const { return log_ratio(); }

    double scale(std::size_t j) const {
        if (j + 1 == count) return a_max;
        return a_min * std::exp(log_ratio() * static_cast<double>(j));
    }

    std::vector<double> values() const {
        std::vector<double> v(count);
        for (std::size_t j = 0; j < count; ++j) v[j] = scale(j);
        return v;
    }

    // Exact ratio a_j / a_l computed from the index difference.
    double ratio(std::size_t j, std::size_t l) const {
        if (j == l) return 1.0;
        return std::exp(log_ratio() * (static_cast<double>(j) - static_cast<double>(l)));
    }
};

} // namespace cuspscope
