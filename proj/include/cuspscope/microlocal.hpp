#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "engine.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "grid.hpp"

namespace cuspscope {

// Abscissa/value pairs for a power-law fit; `floor` is the transform's noise floor.
struct DecaySamples {
    std::vector<double> a;
    std::vector<double> value;
    double floor = 0.0;

    void push(double x, double v) {
        a.push_back(x);
        value.push_back(v);
    }
    std::size_t size() const { return a.size(); }
};

struct PathSample {
    double lambda, a, abs_w;
};

struct PathSamples {
    std::vector<PathSample> samples;
    double lambda_lo = 0, lambda_hi = 0;  // range actually covered by the field's scales
    bool clipped = false;
    double floor = 0.0;

    DecaySamples decay() const {
        DecaySamples d;
        d.floor = floor;
        for (const auto& s : samples) d.push(s.a, s.abs_w);
        return d;
    }
};

// Rounding floor of an FFT-based transform: eps · max|W| · log2(#samples).
inline double noise_floor(const HalfSpaceField& f) {
    return DBL_EPSILON * f.abs_max() * std::log2(static_cast<double>(f.plane()));
}

namespace detail {

inline double periodic_bilinear_abs(const HalfSpaceField& f, std::size_t j, const Vec2& b) {
    const double h = f.step();
    const long n = static_cast<long>(f.n);
    auto split = [&](double x, long& i0, double& t) {
        double u = x / h;
        double fl = std::floor(u);
        t = u - fl;
        i0 = ((static_cast<long>(fl) % n) + n) % n;
    };
    long ix, iy = 0;
    double tx, ty = 0;
    split(b[0], ix, tx);
    const cplx* s = f.slice(j);
    if (f.dim == 1) {
        long ix1 = (ix + 1) % n;
        return (1 - tx) * std::abs(s[ix]) + tx * std::abs(s[ix1]);
    }
    split(b[1], iy, ty);
    long ix1 = (ix + 1) % n, iy1 = (iy + 1) % n;
    auto v = [&](long x, long y) { return std::abs(s[y * n + x]); };
    return (1 - ty) * ((1 - tx) * v(ix, iy) + tx * v(ix1, iy)) + ty * ((1 - tx) * v(ix, iy1) + tx * v(ix1, iy1));
}

} // namespace detail

// |W| along (origin + λξ, λ^γ): bilinear in b on the two bracketing scales, log-linear in a.
inline PathSamples sample_along_path(const HalfSpaceField& f, const ParabolicPath& path) {
    path.validate();
    require(path.dim == f.dim, ErrorKind::config, "path dimension differs from field dimension");
    PathSamples out;
    out.floor = noise_floor(f);
    const double la0 = std::log(f.scales.a_min), lq = f.scales.log_ratio();
    for (std::size_t i = 0; i < path.count; ++i) {
        double lam = path.lambda(i);
        auto q = path.relative_point(lam);
        if (q.a < f.scales.a_min * (1 - 1e-12) || q.a > f.scales.a_max * (1 + 1e-12)) {
            out.clipped = true;
            continue;
        }
        Vec2 b{path.origin[0] + q.b[0], path.origin[1] + q.b[1]};
        double u = std::clamp((std::log(q.a) - la0) / lq, 0.0, static_cast<double>(f.scales.count - 1));
        std::size_t j0 = std::min<std::size_t>(static_cast<std::size_t>(std::floor(u)), f.scales.count - 2);
        double t = u - static_cast<double>(j0);
        double v0 = detail::periodic_bilinear_abs(f, j0, b);
        double v1 = detail::periodic_bilinear_abs(f, j0 + 1, b);
        double v;
        if (t == 0.0) v = v0;
        else if (t == 1.0) v = v1;
        else if (v0 > 0 && v1 > 0) v = std::exp((1 - t) * std::log(v0) + t * std::log(v1));
        else v = (1 - t) * v0 + t * v1;
        out.samples.push_back({lam, q.a, v});
    }
    require(!out.samples.empty(), ErrorKind::out_of_support,
            "path exits the field's scale range entirely (a in [" + std::to_string(f.scales.a_min) + ", " +
                std::to_string(f.scales.a_max) + "])");
    out.lambda_lo = out.samples.front().lambda;
    out.lambda_hi = out.samples.back().lambda;
    return out;
}

// |W(b, a_j)| on every scale at a fixed grid position.
inline DecaySamples sample_vertical(const HalfSpaceField& f, std::size_t index) {
    require(index < f.plane(), ErrorKind::config, "sample position outside the grid");
    DecaySamples d;
    d.floor = noise_floor(f);
    for (std::size_t j = 0; j < f.scales.count; ++j) d.push(f.scales.scale(j), std::abs(f.at(j, index)));
    return d;
}

// sup_b |W(b, a_j)| per scale, optionally restricted to a raster; empty slices are skipped.
inline DecaySamples scale_sup(const HalfSpaceField& f, const Raster* mask = nullptr) {
    DecaySamples d;
    d.floor = noise_floor(f);
    for (std::size_t j = 0; j < f.scales.count; ++j) {
        double m = -1.0;
        for (std::size_t i = 0; i < f.plane(); ++i)
            if (!mask || mask->at(j, i)) m = std::max(m, std::abs(f.at(j, i)));
        if (m >= 0) d.push(f.scales.scale(j), m);
    }
    return d;
}

struct FitOptions {
    std::size_t min_samples = 8;
    double floor_factor = 10.0;  // samples at or below this multiple of the floor are dropped
    double rapid_cutoff = 6.0;   // slopes at or above this count as rapid decay
    double min_decades = 1.0;
    bool floor_bound = true;  // too few samples because the data hit the floor: report a lower bound
};

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS of log residuals
    double a_lo = 0.0, a_hi = 0.0;
    std::size_t used = 0;
    bool success = false;
    bool rapid = false;          // slope is a lower bound at or above the cutoff
    bool floor_limited = false;  // slope derived from the drop to the noise floor

    nlohmann::json to_json() const {
        return {{"slope", slope},     {"intercept", intercept}, {"residual_rms", residual},
                {"a_lo", a_lo},       {"a_hi", a_hi},           {"samples_used", used},
                {"success", success}, {"rapid", rapid},         {"floor_limited", floor_limited},
                {"lower_bound", rapid || floor_limited}};
    }
};

// Least-squares slope of log|W| against log a over the samples above the noise floor.
inline DecayFit fit_decay(const DecaySamples& s, const FitOptions& opt = {}) {
    require(s.a.size() == s.value.size(), ErrorKind::config, "sample arrays differ in length");
    bool any = std::any_of(s.value.begin(), s.value.end(), [](double v) { return v != 0.0; });
    require(any, ErrorKind::degenerate, "all samples are zero");
    const double cut = opt.floor_factor * s.floor;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < s.size(); ++i) {
        require(s.a[i] > 0, ErrorKind::config, "sample abscissa must be positive");
        if (s.value[i] > cut && s.value[i] > 0) {
            x.push_back(std::log(s.a[i]));
            y.push_back(std::log(s.value[i]));
        }
    }
    DecayFit fit;
    fit.used = x.size();
    bool enough = x.size() >= opt.min_samples;
    double decades = 0;
    if (!x.empty()) {
        auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        fit.a_lo = std::exp(*lo);
        fit.a_hi = std::exp(*hi);
        decades = (*hi - *lo) / std::log(10.0);
    }
    if (!enough || decades < opt.min_decades * (1 - 1e-9)) {
        // Samples that reach the floor inside the window still bound the decay from below.
        bool hit_floor = x.size() < s.size() && !x.empty();
        if (opt.floor_bound && hit_floor && cut > 0) {
            std::size_t top = 0;
            for (std::size_t i = 1; i < s.size(); ++i)
                if (s.a[i] > s.a[top]) top = i;
            // the largest a at which the data already sits at the floor gives the tightest bound
            double at_floor = 0;
            for (std::size_t i = 0; i < s.size(); ++i)
                if (s.value[i] <= cut) at_floor = std::max(at_floor, s.a[i]);
            if (s.value[top] > cut && at_floor > 0) {
                if (at_floor < s.a[top]) {
                    fit.slope = std::log(s.value[top] / cut) / std::log(s.a[top] / at_floor);
                    fit.floor_limited = true;
                    fit.rapid = fit.slope >= opt.rapid_cutoff;
                    fit.success = true;
                    fit.a_lo = at_floor;
                    fit.a_hi = s.a[top];
                    return fit;
                }
            }
        }
        fail(ErrorKind::insufficient_samples,
             std::to_string(x.size()) + " samples above the noise floor spanning " + std::to_string(decades) +
                 " decades; need " + std::to_string(opt.min_samples) + " over " +
                 std::to_string(opt.min_decades));
    }
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double r2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - (fit.intercept + fit.slope * x[i]);
        r2 += r * r;
    }
    fit.residual = std::sqrt(r2 / n);
    fit.success = true;
    fit.rapid = fit.slope >= opt.rapid_cutoff;
    return fit;
}

// sup over sampled points of Ω of a^{-α}|W|.
inline double holder_seminorm(const HalfSpaceField& f, const Raster& omega, double alpha) {
    require(omega.lattice == f.lattice(), ErrorKind::config, "mask lattice differs from field");
    require(!omega.empty(), ErrorKind::precondition, "seminorm over an empty mask");
    double best = 0.0;
    for (std::size_t j = 0; j < f.scales.count; ++j) {
        if (omega.slice_empty(j)) continue;
        double w = std::pow(f.scales.scale(j), -alpha);
        for (std::size_t i = 0; i < f.plane(); ++i)
            if (omega.at(j, i)) best = std::max(best, w * std::abs(f.at(j, i)));
    }
    return best;
}

inline double holder_seminorm(const HalfSpaceField& f, const RegionMask& omega, double alpha) {
    return holder_seminorm(f, omega->rasterize(f.lattice()), alpha);
}

// |W| <= c Δ^k fitted on the 95th percentile of log|W| in bins of log Δ.
struct GrowthBound {
    double c = 0.0;
    double k = 0.0;
    std::size_t bins_used = 0;
    bool success = false;

    nlohmann::json to_json() const { return {{"c", c}, {"k", k}, {"bins_used", bins_used}, {"success", success}}; }
};

inline GrowthBound fit_growth(const HalfSpaceField& f, const Raster* region, const Vec2& origin,
                              double quantile = 0.95, std::size_t bins = 16) {
    const double floor = noise_floor(f);
    const std::size_t hist = 512;
    double vmax = f.abs_max();
    GrowthBound g;
    if (vmax <= 0) return g;
    const double lv_lo = std::log(std::max(floor * 10.0, vmax * 1e-300)), lv_hi = std::log(vmax) + 1e-9;
    Lattice lat = f.lattice();
    // Pass 1: log Δ range.
    double ld_lo = std::numeric_limits<double>::infinity(), ld_hi = -ld_lo;
    auto logdelta = [&](std::size_t j, std::size_t i) {
        Vec2 b = lat.position(i);
        return std::log(delta(norm({b[0] - origin[0], b[1] - origin[1]}, f.dim), f.scales.scale(j)));
    };
    for (std::size_t j = 0; j < f.scales.count; ++j)
        for (std::size_t i = 0; i < f.plane(); ++i) {
            if (region && !region->at(j, i)) continue;
            double ld = logdelta(j, i);
            ld_lo = std::min(ld_lo, ld);
            ld_hi = std::max(ld_hi, ld);
        }
    if (!(ld_hi > ld_lo)) return g;
    std::vector<std::vector<std::size_t>> counts(bins, std::vector<std::size_t>(hist, 0));
    std::vector<std::size_t> totals(bins, 0);
    for (std::size_t j = 0; j < f.scales.count; ++j)
        for (std::size_t i = 0; i < f.plane(); ++i) {
            if (region && !region->at(j, i)) continue;
            double v = std::abs(f.at(j, i));
            if (v <= floor * 10.0) continue;
            double ld = logdelta(j, i);
            auto bi = std::min(bins - 1, static_cast<std::size_t>((ld - ld_lo) / (ld_hi - ld_lo) * bins));
            double u = (std::log(v) - lv_lo) / (lv_hi - lv_lo);
            auto hi = std::min(hist - 1, static_cast<std::size_t>(std::max(0.0, u) * hist));
            ++counts[bi][hi];
            ++totals[bi];
        }
    std::vector<double> xs, ys;
    for (std::size_t b = 0; b < bins; ++b) {
        if (totals[b] < 20) continue;
        std::size_t target = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(totals[b])));
        std::size_t acc = 0, h = 0;
        for (; h < hist; ++h) {
            acc += counts[b][h];
            if (acc >= target) break;
        }
        xs.push_back(ld_lo + (static_cast<double>(b) + 0.5) * (ld_hi - ld_lo) / static_cast<double>(bins));
        ys.push_back(lv_lo + (static_cast<double>(h) + 1.0) * (lv_hi - lv_lo) / static_cast<double>(hist));
    }
    g.bins_used = xs.size();
    if (xs.size() < 2) return g;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    g.k = sxy / sxx;
    // shift the line up so it bounds every bin quantile
    double shift = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) shift = std::max(shift, ys[i] - (my + g.k * (xs[i] - mx)));
    g.c = std::exp(my - g.k * mx + shift);
    g.success = true;
    return g;
}

// ---- directional type ------------------------------------------------------------

struct ClassifyOptions {
    double eps = 0.25;
    double lambda_lo = 1e-3;
    double lambda_hi = 0.5;
    std::size_t path_samples = 400;
    std::vector<double> alpha_grid{0.0, 0.25, 0.5, 1.0, 2.0};
    FitOptions fit;
    bool outside_bound = true;
};

struct ClassReport {
    ParabolicPath path;
    double eps = 0.25;
    DecayFit tube_fit;
    DecaySamples tube_sup;
    GrowthBound outside;
    std::vector<std::pair<double, double>> seminorms;  // (α, sup over the tube of a^{-α}|W|)
    double alpha_hat() const { return tube_fit.slope; }

    nlohmann::json to_json() const {
        nlohmann::json sn = nlohmann::json::array();
        for (auto [a, v] : seminorms) sn.push_back({{"alpha", a}, {"seminorm", v}});
        nlohmann::json sup = nlohmann::json::array();
        for (std::size_t i = 0; i < tube_sup.size(); ++i) sup.push_back({{"a", tube_sup.a[i]}, {"sup_abs_w", tube_sup.value[i]}});
        return {{"path",
                 {{"origin", {path.origin[0], path.origin[1]}},
                  {"xi", {path.xi[0], path.xi[1]}},
                  {"gamma", path.gamma},
                  {"lambda_lo", path.lambda_lo},
                  {"lambda_hi", path.lambda_hi},
                  {"samples", path.count}}},
                {"eps", eps},
                {"tube_fit", tube_fit.to_json()},
                {"tube_sup", sup},
                {"noise_floor", tube_sup.floor},
                {"outside_growth", outside.to_json()},
                {"seminorms", sn},
                {"verdict",
                 {{"alpha", tube_fit.slope},
                  {"alpha_is_lower_bound", tube_fit.rapid || tube_fit.floor_limited},
                  {"rapid", tube_fit.rapid},
                  {"xi", {path.xi[0], path.xi[1]}},
                  {"gamma", path.gamma},
                  {"growth_k", outside.k},
                  {"growth_c", outside.c}}}};
    }
};

// ξ is normalized to a unit vector; rescaled directions describe the same class.
inline ParabolicPath classify_path(int dim, const Vec2& origin, const Vec2& xi, double gamma,
                                   const ClassifyOptions& opt) {
    double r = norm(xi, dim);
    require(r > 0, ErrorKind::config, "path direction must be non-zero");
    ParabolicPath p;
    p.origin = origin;
    p.xi = {xi[0] / r, dim == 1 ? 0.0 : xi[1] / r};
    p.gamma = gamma;
    p.lambda_lo = opt.lambda_lo;
    p.lambda_hi = opt.lambda_hi;
    p.count = opt.path_samples;
    p.dim = dim;
    p.validate();
    return p;
}

// Fits the per-scale sup of |W| over the tube Γ_ε(Ξ(ξ,γ)) and the polynomial bound outside it.
inline ClassReport classify_type(const HalfSpaceField& f, const Vec2& origin, const Vec2& xi, double gamma,
                                 const ClassifyOptions& opt = {}) {
    ClassReport rep;
    rep.path = classify_path(f.dim, origin, xi, gamma, opt);
    rep.eps = opt.eps;
    Raster tube = gamma_tube(rep.path, opt.eps)->rasterize(f.lattice());
    rep.tube_sup = scale_sup(f, &tube);
    require(rep.tube_sup.size() >= 2, ErrorKind::unresolvable, "tube meets fewer than two resolved scales");
    double decades = std::log10(rep.tube_sup.a.back() / rep.tube_sup.a.front());
    require(decades >= 1.0 - 1e-9, ErrorKind::unresolvable,
            "tube covers only " + std::to_string(decades) + " decades of resolved scales");
    rep.tube_fit = fit_decay(rep.tube_sup, opt.fit);
    for (double a : opt.alpha_grid) rep.seminorms.emplace_back(a, holder_seminorm(f, tube, a));
    if (opt.outside_bound) {
        Raster out = tube.complement();
        rep.outside = fit_growth(f, &out, origin);
    }
    return rep;
}

// ---- inner microlocal class ---------------------------------------------------------

struct MembershipOptions {
    double ceiling = 1e12;                 // seminorms above this count as infinite
    double slope_tolerance = 0.1;          // per-scale sup of a^{-α}|W| may not grow faster than a^{-tol}
    std::vector<double> separation_eps;    // per consecutive pair; empty: 1/(k(k+2)) with k from 1
    Vec2 origin{0.0, 0.0};
};

struct MembershipReport {
    bool member = false;
    bool increasing = false;  // orientation of the nesting that was found
    std::vector<double> seminorms;
    std::vector<double> blowup_slopes;  // slope of log sup a^{-α}|W| vs log a per member set
    std::vector<bool> finite;
    GrowthBound global;

    nlohmann::json to_json() const {
        nlohmann::json sets = nlohmann::json::array();
        for (std::size_t k = 0; k < seminorms.size(); ++k)
            sets.push_back({{"k", k + 1}, {"seminorm", seminorms[k]}, {"slope", blowup_slopes[k]}, {"finite", static_cast<bool>(finite[k])}});
        return {{"member", member}, {"nesting", increasing ? "increasing" : "decreasing"}, {"sets", sets},
                {"global_growth", global.to_json()}};
    }
};

// Checks the nested, mutually separated family and evaluates the Λ^α seminorm on each member.
inline MembershipReport class_membership_inner(const HalfSpaceField& f, const std::vector<RegionMask>& family,
                                               double alpha, const MembershipOptions& opt = {}) {
    require(!family.empty(), ErrorKind::precondition, "empty family of sets");
    Lattice lat = f.lattice();
    std::vector<Raster> r;
    for (const auto& m : family) r.push_back(m->rasterize(lat));
    MembershipReport rep;
    if (r.size() > 1) {
        rep.increasing = r[0].subset_of(r[1]);
        for (std::size_t k = 0; k + 1 < r.size(); ++k) {
            const Raster& inner = rep.increasing ? r[k] : r[k + 1];
            const Raster& outer = rep.increasing ? r[k + 1] : r[k];
            require(inner.subset_of(outer), ErrorKind::precondition,
                    "family is not nested at k = " + std::to_string(k + 1));
            double kk = static_cast<double>(k + 1);
            double eps = k < opt.separation_eps.size() ? opt.separation_eps[k] : 1.0 / (kk * (kk + 2.0));
            auto sep = well_separated(inner, outer.complement(), eps, opt.origin);
            require(sep.verdict, ErrorKind::precondition,
                    "sets k = " + std::to_string(k + 1) + " and k = " + std::to_string(k + 2) +
                        " are not well separated (margin " + std::to_string(sep.margin) + ")");
        }
    }
    rep.member = true;
    FitOptions fo;
    fo.min_samples = 2;
    fo.min_decades = 0.0;
    fo.floor_bound = false;
    for (const auto& ras : r) {
        require(!ras.empty(), ErrorKind::precondition, "empty set in the family");
        double sn = holder_seminorm(f, ras, alpha);
        DecaySamples d = scale_sup(f, &ras);
        DecaySamples w;
        w.floor = 0;
        for (std::size_t i = 0; i < d.size(); ++i) w.push(d.a[i], d.value[i] * std::pow(d.a[i], -alpha));
        double slope = 0;
        if (w.size() >= 2 && std::any_of(w.value.begin(), w.value.end(), [](double v) { return v > 0; })) {
            try {
                slope = fit_decay(w, fo).slope;
            } catch (const Error&) {
                slope = 0;
            }
        }
        bool fin = std::isfinite(sn) && sn <= opt.ceiling && slope >= -opt.slope_tolerance;
        rep.seminorms.push_back(sn);
        rep.blowup_slopes.push_back(slope);
        rep.finite.push_back(fin);
        rep.member = rep.member && fin;
    }
    rep.global = fit_growth(f, nullptr, opt.origin);
    if (f.abs_max() > 0) rep.member = rep.member && rep.global.success;
    return rep;
}

// Family Γ_{1/k}(Ω), k = k0..k0+count-1.
inline std::vector<RegionMask> gamma_family(const RegionMask& omega, std::size_t count, std::size_t k0 = 1,
                                            const Vec2& origin = {0.0, 0.0}) {
    std::vector<RegionMask> out;
    for (std::size_t k = k0; k < k0 + count; ++k)
        out.push_back(gamma_neighborhood(omega, 1.0 / static_cast<double>(k), origin));
    return out;
}

// ---- CSV -------------------------------------------------------------------------------

// A non-null `meta` is written first as a "# {json}" comment line.
inline void write_path_csv(const std::string& path, const PathSamples& s, const nlohmann::json& meta = {}) {
    std::ofstream os(path);
    require(os.good(), ErrorKind::io, "cannot open " + path + " for writing");
    if (!meta.is_null()) os << "# " << meta.dump() << '\n';
    os << "lambda,a,absW,log_a,log_absW\n";
    os.precision(17);
    for (const auto& p : s.samples)
        os << p.lambda << ',' << p.a << ',' << p.abs_w << ',' << std::log(p.a) << ','
           << (p.abs_w > 0 ? std::log(p.abs_w) : -std::numeric_limits<double>::infinity()) << '\n';
}

} // namespace cuspscope
