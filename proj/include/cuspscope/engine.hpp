#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "wavelets.hpp"

namespace cuspscope {

// Discretized W_g s(b,a): one complex slice per scale, scale outermost.
struct HalfSpaceField {
    ScaleGrid scales;
    int dim = 1;
    std::size_t n = 0;
    double length = 1.0;
    std::optional<WaveletSpec> wavelet;
    std::vector<cplx> values;

    HalfSpaceField() = default;
    HalfSpaceField(const ScaleGrid& sg, int d, std::size_t count, double L)
        : scales(sg), dim(d), n(count), length(L), values(sg.count * (d == 1 ? count : count * count)) {}

    std::size_t plane() const { return dim == 1 ? n : n * n; }
    double step() const { return length / static_cast<double>(n); }
    double cell_volume() const { return dim == 1 ? step() : step() * step(); }
    cplx* slice(std::size_t j) { return values.data() + j * plane(); }
    const cplx* slice(std::size_t j) const { return values.data() + j * plane(); }
    const cplx& at(std::size_t j, std::size_t i) const { return values[j * plane() + i]; }
    Lattice lattice() const { return {dim, n, length, scales}; }

    double abs_max() const {
        double m = 0.0;
        for (const auto& z : values) m = std::max(m, std::abs(z));
        return m;
    }

    // Σ_j ln q Σ_b |W|^2 db
    double energy() const {
        double total = 0.0;
        for (std::size_t j = 0; j < scales.count; ++j) {
            double s = 0.0;
            const cplx* p = slice(j);
            for (std::size_t i = 0; i < plane(); ++i) s += std::norm(p[i]);
            total += s;
        }
        return total * cell_volume() * scales.weight();
    }
};

struct ForwardOptions {
    bool guard = true;
    double min_steps = 2.0;     // a_min >= min_steps · grid step
    double max_fraction = 0.25;  // a_max <= max_fraction · L
};

inline void check_resolvable(const ScaleGrid& sg, double step, double L, const ForwardOptions& opt) {
    if (!opt.guard) return;
    const double tol = 1e-12;
    require(sg.a_min >= opt.min_steps * step * (1 - tol), ErrorKind::unresolvable,
            "a_min = " + std::to_string(sg.a_min) + " is below " + std::to_string(opt.min_steps) + " grid steps");
    require(sg.a_max <= opt.max_fraction * L * (1 + tol), ErrorKind::unresolvable,
            "a_max = " + std::to_string(sg.a_max) + " exceeds " + std::to_string(opt.max_fraction) + "·L");
}

// Transform of a precomputed signal spectrum.
inline HalfSpaceField forward_spectrum(const WaveletSpec& g, const std::vector<cplx>& shat, int dim, std::size_t n,
                                       double L, const ScaleGrid& scales, const ForwardOptions& opt = {}) {
    check_dimension(dim);
    require(g.dimension == dim, ErrorKind::config, "wavelet dimension differs from signal dimension");
    scales.validate();
    check_resolvable(scales, L / static_cast<double>(n), L, opt);
    HalfSpaceField f(scales, dim, n, L);
    f.wavelet = g;
    auto k = wave_vectors(dim, n, L);
    parallel_for(scales.count, [&](std::size_t j) {
        double a = scales.scale(j);
        cplx* out = f.slice(j);
        for (std::size_t i = 0; i < shat.size(); ++i)
            out[i] = spectrum_value(g, a * k[i][0], a * k[i][1]) * shat[i];  // conj ĝ = ĝ (real)
        fft_inverse(out, dim, n);
    });
    return f;
}

inline HalfSpaceField forward(const WaveletSpec& g, const GridSignal& s, const ScaleGrid& scales,
                              const ForwardOptions& opt = {}) {
    return forward_spectrum(g, spectrum(s), s.dim, s.n, s.length, scales, opt);
}

// M_h r = Σ_j ln q · h_{a_j} * r_j, summed in a fixed block order so results do not
// depend on the thread count.
inline GridSignal synthesis(const WaveletSpec& h, const HalfSpaceField& r) {
    require(h.dimension == r.dim, ErrorKind::config, "wavelet dimension differs from field dimension");
    const std::size_t J = r.scales.count, P = r.plane();
    const std::size_t blocks = std::min<std::size_t>(8, J);
    auto k = wave_vectors(r.dim, r.n, r.length);
    std::vector<std::vector<cplx>> partial(blocks, std::vector<cplx>(P, cplx{}));
    parallel_for(blocks, [&](std::size_t bi) {
        std::size_t j0 = bi * J / blocks, j1 = (bi + 1) * J / blocks;
        std::vector<cplx> buf(P);
        auto& acc = partial[bi];
        for (std::size_t j = j0; j < j1; ++j) {
            double a = r.scales.scale(j);
            std::copy(r.slice(j), r.slice(j) + P, buf.begin());
            fft_forward(buf, r.dim, r.n);
            for (std::size_t i = 0; i < P; ++i) acc[i] += spectrum_value(h, a * k[i][0], a * k[i][1]) * buf[i];
        }
    });
    std::vector<cplx> total(P, cplx{});
    for (const auto& p : partial)
        for (std::size_t i = 0; i < P; ++i) total[i] += p[i];
    double w = r.scales.weight();
    for (auto& z : total) z *= w;
    return from_spectrum(std::move(total), r.dim, r.n, r.length);
}

// ⟨W, r⟩ with the measure db da/a (conjugate-linear in the first argument).
inline cplx field_inner(const HalfSpaceField& x, const HalfSpaceField& y) {
    cplx s{};
    for (std::size_t i = 0; i < x.values.size(); ++i) s += std::conj(x.values[i]) * y.values[i];
    return s * x.cell_volume() * x.scales.weight();
}

inline cplx signal_inner(const GridSignal& x, const GridSignal& y) {
    cplx s{};
    for (std::size_t i = 0; i < x.data.size(); ++i) s += std::conj(x.data[i]) * y.data[i];
    return s * x.cell_volume();
}

// Samples of the wavelet itself, periodized on the grid and centred at the origin.
inline GridSignal wavelet_signal(const WaveletSpec& h, int dim, std::size_t n, double L) {
    GridSignal s(dim, n, L);
    auto k = wave_vectors(dim, n, L);
    std::vector<cplx> v(k.size());
    double inv = 1.0 / s.cell_volume();
    for (std::size_t i = 0; i < k.size(); ++i) v[i] = spectrum_value(h, k[i][0], k[i][1]) * inv;
    return from_spectrum(std::move(v), dim, n, L);
}

// ---- half-space kernels --------------------------------------------------------

struct KernelRow {
    double rho = 1.0;
    double beta0 = 0.0;
    double dbeta = 1.0;
    std::vector<cplx> values;
};

// Π(β, ρ) on the half-space. The spectral form gives the transform in β at fixed ρ;
// the tabulated form (1-D) stores rows on adaptive β grids.
struct HalfSpaceKernel {
    int dim = 1;
    std::function<cplx(const Vec2& k, double rho)> spectral;
    std::vector<KernelRow> rows;  // sorted by rho
    bool truncated = false;       // out-of-range rho evaluates to 0 instead of failing

    bool has_spectral() const { return static_cast<bool>(spectral); }
    bool has_table() const { return !rows.empty(); }

    std::optional<std::pair<std::size_t, double>> locate(double rho) const {
        const double tol = 1e-12;
        if (rows.size() == 1) {
            if (std::abs(rho / rows[0].rho - 1.0) <= tol) return std::make_pair(std::size_t{0}, 0.0);
        } else {
            double lr = std::log(rho), lo = std::log(rows.front().rho), hi = std::log(rows.back().rho);
            if (lr >= lo - tol && lr <= hi + tol) {
                lr = std::clamp(lr, lo, hi);
                auto it = std::upper_bound(rows.begin(), rows.end(), lr,
                                           [](double v, const KernelRow& r) { return v < std::log(r.rho); });
                std::size_t i = it == rows.begin() ? 0 : static_cast<std::size_t>(it - rows.begin()) - 1;
                if (i + 1 >= rows.size()) i = rows.size() - 2;
                double t = (lr - std::log(rows[i].rho)) / (std::log(rows[i + 1].rho) - std::log(rows[i].rho));
                return std::make_pair(i, t);
            }
        }
        if (truncated) return std::nullopt;
        fail(ErrorKind::out_of_support, "kernel scale ratio " + std::to_string(rho) + " outside tabulated support");
    }

    static cplx row_value(const KernelRow& r, double beta) {
        double u = (beta - r.beta0) / r.dbeta;
        if (u < 0 || u > static_cast<double>(r.values.size() - 1)) return {};
        auto i = static_cast<std::size_t>(std::floor(u));
        if (i + 1 >= r.values.size()) return r.values.back();
        double t = u - static_cast<double>(i);
        return (1.0 - t) * r.values[i] + t * r.values[i + 1];
    }

    // Log-bilinear evaluation of the tabulated form.
    cplx value(double beta, double rho) const {
        require(has_table(), ErrorKind::config, "kernel has no tabulated form");
        auto loc = locate(rho);
        if (!loc) return {};
        auto [i, t] = *loc;
        cplx v0 = row_value(rows[i], beta);
        if (t == 0.0 || rows.size() == 1) return v0;
        return (1.0 - t) * v0 + t * row_value(rows[i + 1], beta);
    }
};

struct KernelTableSpec {
    double rho_min = 1e-2;
    double rho_max = 1e2;
    std::size_t rows = 161;
    std::size_t points = 8192;
    double extent = 64.0;  // β range per row, times max(1, ρ)
};

// Π_{g,h} = W_g h: Π̂(k, ρ) = conj ĝ(ρk) ĥ(k).
inline HalfSpaceKernel reproducing_kernel(const WaveletSpec& g, const WaveletSpec& h,
                                          std::optional<KernelTableSpec> table = std::nullopt) {
    require(g.dimension == h.dimension, ErrorKind::config, "wavelet dimensions differ");
    HalfSpaceKernel K;
    K.dim = g.dimension;
    K.spectral = [g, h](const Vec2& k, double rho) {
        return cplx{spectrum_value(g, rho * k[0], rho * k[1]) * spectrum_value(h, k[0], k[1]), 0.0};
    };
    if (table) {
        require(K.dim == 1, ErrorKind::unsupported_dimension, "kernel tabulation is implemented for 1-D only");
        const auto& ts = *table;
        require(ts.rows >= 1 && ts.points >= 16 && is_power_of_two(ts.points), ErrorKind::config,
                "kernel table needs rows >= 1 and a power-of-two point count");
        for (std::size_t r = 0; r < ts.rows; ++r) {
            double rho = ts.rows == 1 ? ts.rho_min
                                      : ts.rho_min * std::pow(ts.rho_max / ts.rho_min,
                                                              static_cast<double>(r) / static_cast<double>(ts.rows - 1));
            double E = ts.extent * std::max(1.0, rho);
            double db = E / static_cast<double>(ts.points);
            auto k = wavenumbers(ts.points, E);
            std::vector<cplx> v(ts.points);
            for (std::size_t m = 0; m < ts.points; ++m) v[m] = K.spectral({k[m], 0.0}, rho) / db;
            fft_inverse(v, 1, ts.points);
            KernelRow row;
            row.rho = rho;
            row.dbeta = db;
            row.beta0 = -static_cast<double>(ts.points / 2) * db;
            row.values.resize(ts.points);
            for (std::size_t p = 0; p < ts.points; ++p) row.values[p] = v[(p + ts.points / 2) % ts.points];
            K.rows.push_back(std::move(row));
        }
    }
    return K;
}

// Π sampled on a signal grid and scale grid: forward(g, h) with h centred at the origin.
inline HalfSpaceField kernel_field(const WaveletSpec& g, const WaveletSpec& h, std::size_t n, double L,
                                   const ScaleGrid& scales, const ForwardOptions& opt = {}) {
    return forward(g, wavelet_signal(h, g.dimension, n, L), scales, opt);
}

struct ConvolveOptions {
    bool prefer_spectral = true;
};

// (Π∗r)(b,a) = Σ_{a'} ln q Σ_{b'} db' a'^{-n} Π((b−b')/a', a/a') r(b',a').
inline HalfSpaceField halfspace_convolve(const HalfSpaceKernel& K, const HalfSpaceField& r,
                                         const ConvolveOptions& opt = {}) {
    require(K.dim == r.dim, ErrorKind::config, "kernel and field dimensions differ");
    require(K.has_spectral() || K.has_table(), ErrorKind::config, "kernel has no usable form");
    const bool use_spectral = K.has_spectral() && (opt.prefer_spectral || !K.has_table());
    if (!use_spectral) require(r.dim == 1, ErrorKind::unsupported_dimension, "tabulated kernels are 1-D only");
    const std::size_t J = r.scales.count, P = r.plane();
    auto k = wave_vectors(r.dim, r.n, r.length);
    std::vector<std::vector<cplx>> rhat(J);
    parallel_for(J, [&](std::size_t l) {
        rhat[l].assign(r.slice(l), r.slice(l) + P);
        fft_forward(rhat[l], r.dim, r.n);
    });
    HalfSpaceField out(r.scales, r.dim, r.n, r.length);
    out.wavelet = r.wavelet;
    const double w = r.scales.weight();
    const double h = r.step();
    parallel_for(J, [&](std::size_t j) {
        std::vector<cplx> acc(P, cplx{});
        std::vector<cplx> kern(P);
        for (std::size_t l = 0; l < J; ++l) {
            double ap = r.scales.scale(l);
            double rho = r.scales.ratio(j, l);
            if (use_spectral) {
                for (std::size_t i = 0; i < P; ++i)
                    acc[i] += K.spectral({ap * k[i][0], ap * k[i][1]}, rho) * rhat[l][i];
                continue;
            }
            if (!K.locate(rho)) continue;
            bool any = false;
            for (std::size_t i = 0; i < P; ++i) {
                long m = i < (P + 1) / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(P);
                double x = static_cast<double>(m) * h;
                kern[i] = K.value(x / ap, rho) * (h / ap);
                any = any || kern[i] != cplx{};
            }
            if (!any) continue;
            fft_forward(kern, 1, r.n);
            for (std::size_t i = 0; i < P; ++i) acc[i] += kern[i] * rhat[l][i];
        }
        for (auto& z : acc) z *= w;
        fft_inverse(acc, r.dim, r.n);
        std::copy(acc.begin(), acc.end(), out.slice(j));
    });
    return out;
}

// Π_{g→g'} ∗ field with Π_{g→g'} = W_{g'} r_g.
inline HalfSpaceField cross_kernel_apply(const WaveletSpec& g, const WaveletSpec& g2, const HalfSpaceField& field) {
    WaveletSpec r = reconstruction_wavelet(g);  // throws for inadmissible g
    auto out = halfspace_convolve(reproducing_kernel(g2, r), field);
    out.wavelet = g2;
    return out;
}

// ---- Töplitz operators -----------------------------------------------------------

inline void restrict_field(HalfSpaceField& f, const Raster& mask) {
    require(mask.lattice == f.lattice(), ErrorKind::config, "mask lattice differs from field lattice");
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (!mask.bits[i]) f.values[i] = cplx{};
}

// T_Σ = M_h χ_Σ W_g
inline GridSignal toeplitz_apply(const WaveletSpec& g, const WaveletSpec& h, const Raster& sigma,
                                 const GridSignal& s, const ForwardOptions& opt = {}) {
    auto f = forward(g, s, sigma.lattice.scales, opt);
    restrict_field(f, sigma);
    return synthesis(h, f);
}

inline GridSignal toeplitz_apply(const WaveletSpec& g, const WaveletSpec& h, const RegionMask& sigma,
                                 const GridSignal& s, const ScaleGrid& scales, const ForwardOptions& opt = {}) {
    Lattice lat{s.dim, s.n, s.length, scales};
    return toeplitz_apply(g, h, sigma->rasterize(lat), s, opt);
}

struct CommutatorResult {
    GridSignal signal;
    HalfSpaceField field;
};

// (T_Σ T_Ω − T_Ω T_Σ) s together with its transform.
inline CommutatorResult commutator_residual(const Raster& sigma, const Raster& omega, const WaveletSpec& g,
                                            const WaveletSpec& h, const GridSignal& s, const ForwardOptions& opt = {}) {
    auto ts_to = toeplitz_apply(g, h, sigma, toeplitz_apply(g, h, omega, s, opt), opt);
    auto to_ts = toeplitz_apply(g, h, omega, toeplitz_apply(g, h, sigma, s, opt), opt);
    GridSignal out = ts_to;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= to_ts.data[i];
    auto f = forward(g, out, sigma.lattice.scales, opt);
    return {std::move(out), std::move(f)};
}

inline CommutatorResult commutator_residual(const RegionMask& sigma, const RegionMask& omega, const WaveletSpec& g,
                                            const WaveletSpec& h, const GridSignal& s, const ScaleGrid& scales,
                                            const ForwardOptions& opt = {}) {
    Lattice lat{s.dim, s.n, s.length, scales};
    return commutator_residual(sigma->rasterize(lat), omega->rasterize(lat), g, h, s, opt);
}

} // namespace cuspscope
