#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "engine.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "microlocal.hpp"
#include "signals.hpp"
#include "wavelets.hpp"

namespace cuspscope {

// Spectral Laplacian: multiply by −|k|².
inline GridSignal laplacian(const GridSignal& s) {
    auto v = spectrum(s);
    auto k = wave_vectors(s.dim, s.n, s.length);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= -(k[i][0] * k[i][0] + k[i][1] * k[i][1]);
    return from_spectrum(std::move(v), s.dim, s.n, s.length);
}

struct PoissonResult {
    GridSignal eta;
    cplx removed_mean{};  // mean of f dropped before inversion
};

// Δη = f on the periodic grid with η̂(0) = 0; the mean of f is removed and reported.
inline PoissonResult poisson_solve(const GridSignal& f) {
    auto v = spectrum(f);
    auto k = wave_vectors(f.dim, f.n, f.length);
    PoissonResult r;
    r.removed_mean = v[0] / static_cast<double>(v.size());
    v[0] = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) v[i] /= -(k[i][0] * k[i][0] + k[i][1] * k[i][1]);
    r.eta = from_spectrum(std::move(v), f.dim, f.n, f.length);
    return r;
}

struct TransferResult {
    double residual = 0.0;  // max over scales of sup|lhs − σ a^{-2} rhs| / sup|lhs|
    int sign = 0;           // calibrated σ
    std::vector<double> per_scale;
};

// σ in W_g Δη = σ a^{-2} W_{Δg} η, read off a single Fourier mode.
inline int calibrate_transfer_sign(const WaveletSpec& g) {
    const std::size_t n = 64;
    GridSignal mode(g.dimension, n, 1.0);
    const double kk = 2.0 * std::numbers::pi * 4.0;
    for (std::size_t i = 0; i < mode.size(); ++i) mode[i] = std::polar(1.0, kk * mode.position(i)[0]);
    ScaleGrid sg(0.05, 0.1, 2);
    ForwardOptions fo;
    fo.guard = false;
    auto lhs = forward(g, laplacian(mode), sg, fo);
    auto rhs = forward(laplacian_of(g), mode, sg, fo);
    cplx ratio = lhs.values[0] / (rhs.values[0] / (sg.a_min * sg.a_min));
    require(std::abs(std::abs(ratio) - 1.0) < 1e-8 && std::abs(ratio.imag()) < 1e-8, ErrorKind::degenerate,
            "transfer identity does not hold up to sign on a single mode");
    return ratio.real() > 0 ? 1 : -1;
}

inline TransferResult transfer_identity_residual(const WaveletSpec& g, const GridSignal& eta, const ScaleGrid& scales,
                                                 const ForwardOptions& fo = {}) {
    require(g.is_radial(), ErrorKind::precondition, "transfer identity needs a spherically symmetric wavelet");
    TransferResult r;
    r.sign = calibrate_transfer_sign(g);
    auto lhs = forward(g, laplacian(eta), scales, fo);
    auto rhs = forward(laplacian_of(g), eta, scales, fo);
    for (std::size_t j = 0; j < scales.count; ++j) {
        double a2 = scales.scale(j) * scales.scale(j);
        double num = 0, den = 0;
        for (std::size_t i = 0; i < lhs.plane(); ++i) {
            num = std::max(num, std::abs(lhs.at(j, i) - static_cast<double>(r.sign) * rhs.at(j, i) / a2));
            den = std::max(den, std::abs(lhs.at(j, i)));
        }
        double rel = den > 0 ? num / den : num;
        r.per_scale.push_back(rel);
        r.residual = std::max(r.residual, rel);
    }
    return r;
}

// ---- regularity gain ------------------------------------------------------------------

struct GainSpec {
    CuspDomain cusp;           // default apex (0.2,0.5), axis (1,0), δ = 2
    Vec2 xi{1.0, 0.0};
    double gamma = 3.0;
    double alpha = 0.5;        // exponent of the rough source inside the cusp
    std::size_t n = 512;
    double length = 1.0;
    double blend = 0.0;        // 0: 1.5 grid steps
    ScaleGrid scales{0.008, 0.08, 16};
    ClassifyOptions classify;
    double separation_eps = 0.25;
};

struct EllipticReport {
    double alpha_f = 0.0;
    double alpha_eta = 0.0;
    double gain = 0.0;
    TransferResult transfer;
    bool transfer_checked = false;
    cplx removed_mean{};
    SeparationReport separation;  // tube against the influence region of the cusp complement
    ClassReport class_f, class_eta;

    nlohmann::json to_json() const {
        nlohmann::json j = {{"alpha_f", alpha_f},
                            {"alpha_eta", alpha_eta},
                            {"gain", gain},
                            {"removed_mean", removed_mean.real()},
                            {"class_f", class_f.to_json()},
                            {"class_eta", class_eta.to_json()},
                            {"separation",
                             {{"verdict", separation.verdict},
                              {"vacuous", separation.vacuous},
                              {"margin", std::isfinite(separation.margin) ? nlohmann::json(separation.margin)
                                                                          : nlohmann::json(nullptr)}}}};
        if (transfer_checked) j["transfer_identity"] = {{"residual", transfer.residual}, {"sign", transfer.sign}};
        return j;
    }
};

// Source χ_K·ridge with the partition supported in the closed cusp.
inline GridSignal gain_source(const GainSpec& spec) {
    SignalGrid g{2, spec.n, spec.length, false};
    detail::check_cusp(spec.cusp, g);
    double blend = spec.blend > 0 ? spec.blend : 1.5 * spec.length / static_cast<double>(spec.n);
    RoughSpec r;
    r.beta = spec.alpha;
    r.direction = spec.cusp.unit_axis();
    r.anchored = true;
    r.anchor = spec.cusp.apex;
    GridSignal ridge = rough_background(r, g);
    GridSignal f = g.make();
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = detail::smooth_step(spec.cusp.margin(f.position(i)) / (2.0 * blend)) * ridge[i];
    detail::finish(f, true);
    return f;
}

// Classifies f and η = Δ^{-1} f along Ξ(ξ,γ) from `origin` and reports the exponent gain.
inline EllipticReport gain_for_source(const GridSignal& f, const WaveletSpec& g, const ScaleGrid& scales,
                                      const Vec2& origin, const Vec2& xi, double gamma,
                                      const ClassifyOptions& copt = {}) {
    EllipticReport rep;
    auto pr = poisson_solve(f);
    rep.removed_mean = pr.removed_mean;
    auto wf = forward(g, f, scales);
    auto we = forward(g, pr.eta, scales);
    rep.class_f = classify_type(wf, origin, xi, gamma, copt);
    rep.class_eta = classify_type(we, origin, xi, gamma, copt);
    rep.alpha_f = rep.class_f.alpha_hat();
    rep.alpha_eta = rep.class_eta.alpha_hat();
    rep.gain = rep.alpha_eta - rep.alpha_f;
    if (g.is_radial()) {
        rep.transfer = transfer_identity_residual(g, pr.eta, scales);
        rep.transfer_checked = true;
    }
    return rep;
}

inline EllipticReport regularity_gain_experiment(const GainSpec& spec, const WaveletSpec& g) {
    require(spec.gamma > spec.cusp.degree, ErrorKind::precondition,
            "hypothesis violated: gamma = " + std::to_string(spec.gamma) + " must exceed the cusp degree " +
                std::to_string(spec.cusp.degree));
    require(spec.alpha > 0 && spec.alpha < 1, ErrorKind::config, "source exponent must lie in (0,1)");
    GridSignal f = gain_source(spec);
    auto rep = gain_for_source(f, g, spec.scales, spec.cusp.apex, spec.xi, spec.gamma, spec.classify);
    // The tube should avoid the region influenced by the part of the plane outside the cusp.
    SignalGrid sg{2, spec.n, spec.length, false};
    GridSet outside = cusp_set(spec.cusp, sg);
    for (auto& v : outside.member) v = v ? 0 : 1;
    Lattice lat{2, spec.n, spec.length, spec.scales};
    ParabolicPath path = classify_path(2, spec.cusp.apex, spec.xi, spec.gamma, spec.classify);
    rep.separation = well_separated(gamma_tube(path, spec.classify.eps)->rasterize(lat),
                                    influence_region(outside)->rasterize(lat), spec.separation_eps, spec.cusp.apex);
    return rep;
}

// ---- support localization -------------------------------------------------------------

struct LocalizationSpec {
    Vec2 origin{0.0, 0.0};  // tube base point, Δ measured from here
    Vec2 xi{1.0, 0.0};
    double gamma = 2.0;
    double eps = 0.25;          // tube width
    double separation_eps = 0.25;
    double lambda_lo = 1e-3, lambda_hi = 0.3;
    std::size_t path_samples = 2000;
    ScaleGrid scales;  // empty: 60 scales from 2 grid steps to 0.1·L
    double min_slope = 4.0;
    FitOptions fit;
};

struct LocalizationReport {
    bool vacuous = false;
    DecayFit fit;  // slope of log sup|W| against log(1/Δ)
    DecaySamples samples;
    std::vector<double> delta;
    SeparationReport separation;
    bool pass = false;

    nlohmann::json to_json() const {
        nlohmann::json s = nlohmann::json::array();
        for (std::size_t i = 0; i < samples.size(); ++i)
            s.push_back({{"delta", delta[i]}, {"sup_abs_w", samples.value[i]}});
        return {{"vacuous", vacuous}, {"pass", pass}, {"fit", fit.to_json()}, {"samples", s},
                {"separation_margin", std::isfinite(separation.margin) ? nlohmann::json(separation.margin)
                                                                        : nlohmann::json(nullptr)}};
    }
};

// Decay of sup|W_g ρ| over the slices of a tube kept away from the influence region of supp ρ.
inline LocalizationReport support_localization_check(const GridSignal& rho, const WaveletSpec& g,
                                                     const LocalizationSpec& spec) {
    LocalizationReport rep;
    ScaleGrid sg = spec.scales.count ? spec.scales : ScaleGrid(2.0 * rho.step(), 0.1 * rho.length, 60);
    Lattice lat{rho.dim, rho.n, rho.length, sg};
    ParabolicPath path;
    path.origin = spec.origin;
    path.xi = spec.xi;
    path.gamma = spec.gamma;
    path.lambda_lo = spec.lambda_lo;
    path.lambda_hi = spec.lambda_hi;
    path.count = spec.path_samples;
    path.dim = rho.dim;
    path.validate();
    Raster tube = gamma_tube(path, spec.eps)->rasterize(lat);
    GridSet supp{rho.dim, rho.n, rho.length, std::vector<std::uint8_t>(rho.size())};
    for (std::size_t i = 0; i < rho.size(); ++i) supp.member[i] = rho[i] != cplx{} ? 1 : 0;
    if (supp.empty()) {
        rep.vacuous = true;
        rep.pass = true;
        return rep;
    }
    rep.separation = well_separated(tube, influence_region(supp)->rasterize(lat), spec.separation_eps, spec.origin);
    require(rep.separation.verdict, ErrorKind::precondition,
            "tube is not well separated from the influence region (margin " + std::to_string(rep.separation.margin) +
                ")");
    auto w = forward(g, rho, sg);
    DecaySamples sup = scale_sup(w, &tube);
    rep.samples.floor = sup.floor;
    for (std::size_t i = 0; i < sup.size(); ++i) {
        double a = sup.a[i];
        double lam = std::pow(a, 1.0 / spec.gamma);
        double d = delta(lam * norm(spec.xi, rho.dim), a);
        rep.delta.push_back(d);
        rep.samples.push(1.0 / d, sup.value[i]);
    }
    rep.fit = fit_decay(rep.samples, spec.fit);
    rep.pass = rep.fit.slope >= spec.min_slope;
    return rep;
}

} // namespace cuspscope
