#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "elliptic.hpp"
#include "engine.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "microlocal.hpp"
#include "schema.hpp"
#include "signals.hpp"
#include "version.hpp"
#include "wavelets.hpp"

// Config-driven pipelines behind the cuspscope executable. Every command first
// resolves the user config into a fully explicit one, then runs from that alone.

namespace cuspscope::cli {

using nlohmann::json;

inline constexpr int exit_pass = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"verify", "transform", "classify", "separation", "elliptic", "signals"};
    return names;
}

inline int exit_code_for(ErrorKind k) {
    return k == ErrorKind::config || k == ErrorKind::unsupported_dimension ? exit_usage : exit_failure;
}

inline json error_json(const std::string& command, const std::string& kind, const std::string& message, int code) {
    return {{"error", {{"command", command}, {"kind", kind}, {"message", message}, {"exit_code", code}}}};
}

// ---- loading ------------------------------------------------------------------------

inline json parse_config(const std::string& text) {
    try {
        json j = json::parse(text);
        require(j.is_object(), ErrorKind::config, "config must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        fail(ErrorKind::config, std::string("malformed config JSON: ") + e.what());
    }
}

inline json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream is(path);
    require(is.good(), ErrorKind::config, "cannot read config file " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

inline void validate_config(const json& cfg, const json& schema) {
    auto errors = SchemaValidator(schema).validate(cfg);
    if (errors.empty()) return;
    std::string msg = "config does not match schema";
    for (std::size_t i = 0; i < errors.size() && i < 8; ++i) msg += (i ? "; " : ": ") + errors[i];
    if (errors.size() > 8) msg += "; ...";
    fail(ErrorKind::config, msg);
}

// ---- resolution ---------------------------------------------------------------------

struct GridDefaults {
    int dim = 1;
    std::size_t n = 1024;
    double length = 1.0;
    double a_min_steps = 2.0;    // smallest scale in grid steps
    double a_max_fraction = 0.25;  // largest scale as a fraction of L
    std::size_t count = 64;
};

inline GridDefaults grid_defaults(const std::string& command) {
    if (command == "classify") return {2, 1024, 1.0, 4.0, 0.06, 20};
    if (command == "separation") return {1, 1024, 2.0, 2.0, 0.25, 48};
    if (command == "transform") return {1, 1024, 1.0, 2.0, 0.25, 32};
    return {};
}

inline json resolve_grid(const json& user, const GridDefaults& d) {
    json g = user.value("grid", json::object());
    int dim = g.value("dimension", d.dim);
    auto n = g.value("n", d.n);
    double L = g.value("length", d.length);
    check_dimension(dim);
    require(is_power_of_two(n), ErrorKind::config, "grid size n must be a power of two");
    require(L > 0, ErrorKind::config, "grid length must be positive");
    return {{"dimension", dim}, {"n", n}, {"length", L}};
}

inline ScaleGrid scale_grid(const json& s) {
    return ScaleGrid(s.at("a_min").get<double>(), s.at("a_max").get<double>(), s.at("count").get<std::size_t>());
}

inline json resolve_scales(const json& user, const json& grid, const GridDefaults& d) {
    double L = grid["length"].get<double>();
    double step = L / grid["n"].get<double>();
    json s = user.value("scales", json::object());
    json out = {{"a_min", s.value("a_min", d.a_min_steps * step)},
                {"a_max", s.value("a_max", d.a_max_fraction * L)},
                {"count", s.value("count", d.count)}};
    scale_grid(out).validate();
    return out;
}

inline json resolve_wavelet(const json& spec, int dim) {
    WaveletSpec w = wavelet_from_json(spec, dim);
    require(w.dimension == dim, ErrorKind::config,
            "wavelet dimension " + std::to_string(w.dimension) + " does not match grid dimension " +
                std::to_string(dim));
    return to_json(w);
}

inline json default_wavelet(const std::string& command) {
    if (command == "classify" || command == "elliptic")
        return {{"kind", "gaussian-derivative"}, {"params", {{"order", 4}}}};
    return {{"kind", "log-normal"}};
}

// Adding 0.0 folds -0.0 into 0.0 so emitted vectors read cleanly.
inline json vec_json(const Vec2& v, int dim) {
    return dim == 1 ? json::array({v[0] + 0.0}) : json::array({v[0] + 0.0, v[1] + 0.0});
}

inline json default_signal(const std::string& command) {
    if (command == "classify") return {{"generator", "composite-cusp"}, {"params", {{"outside", {{"beta", 0.3}}}}}};
    if (command == "signals") return {{"generator", "holder-cusp"}};
    return {{"generator", "band-limited-random"}};
}

struct Run {
    std::string command;
    std::string format;
    json config;  // resolved
    std::optional<GridSignal> signal;
};

inline json resolve_elliptic(const json& e, GainSpec* out = nullptr) {
    GainSpec s;
    s.cusp = cusp_from_json(e.value("cusp", json::object()));
    if (e.contains("xi")) s.xi = vec2_from_json(e["xi"], 2);
    s.gamma = e.value("gamma", s.gamma);
    s.alpha = e.value("alpha", s.alpha);
    s.n = e.value("n", s.n);
    s.length = e.value("length", s.length);
    require(is_power_of_two(s.n), ErrorKind::config, "elliptic grid size n must be a power of two");
    require(s.length > 0, ErrorKind::config, "elliptic grid length must be positive");
    s.blend = e.value("blend", 0.0);
    if (s.blend <= 0) s.blend = 1.5 * s.length / static_cast<double>(s.n);
    json sc = e.value("scales", json::object());
    json scales = {{"a_min", sc.value("a_min", s.scales.a_min)},
                   {"a_max", sc.value("a_max", s.scales.a_max)},
                   {"count", sc.value("count", s.scales.count)}};
    s.scales = scale_grid(scales);
    s.scales.validate();
    s.classify.eps = e.value("eps", s.classify.eps);
    s.separation_eps = e.value("separation_eps", s.separation_eps);
    json wavelet = resolve_wavelet(e.value("wavelet", default_wavelet("elliptic")), 2);
    if (out) *out = s;
    return {{"cusp", to_json(s.cusp)},
            {"xi", vec_json(s.xi, 2)},
            {"gamma", s.gamma},
            {"alpha", s.alpha},
            {"n", s.n},
            {"length", s.length},
            {"blend", s.blend},
            {"scales", scales},
            {"eps", s.classify.eps},
            {"separation_eps", s.separation_eps},
            {"wavelet", wavelet},
            {"expected_gain", e.value("expected_gain", 2.0)},
            {"gain_tolerance", e.value("gain_tolerance", 0.3)}};
}

inline json resolve_classify_analysis(const json& a, const json& signal, int dim, double length) {
    ClassifyOptions d;
    json out = {{"eps", a.value("eps", d.eps)},
                {"lambda_lo", a.value("lambda_lo", d.lambda_lo)},
                {"lambda_hi", a.value("lambda_hi", d.lambda_hi)},
                {"path_samples", a.value("path_samples", d.path_samples)},
                {"alpha_grid", a.value("alpha_grid", d.alpha_grid)}};
    json paths = json::array();
    if (a.contains("paths")) {
        for (const auto& p : a["paths"]) {
            Vec2 o = p.contains("origin") ? vec2_from_json(p["origin"], dim) : Vec2{0.5 * length, 0.5 * length};
            Vec2 xi = p.contains("xi") ? vec2_from_json(p["xi"], dim) : Vec2{1.0, 0.0};
            paths.push_back({{"origin", vec_json(o, dim)}, {"xi", vec_json(xi, dim)}, {"gamma", p.value("gamma", 2.0)}});
        }
    } else if (signal.contains("generator") &&
               (signal["generator"] == "composite-cusp" || signal["generator"] == "oscillating-cusp")) {
        // Along the cusp axis at a sub-degree and a super-degree exponent, then across it.
        CuspDomain K = cusp_from_json(signal["params"]["cusp"]);
        Vec2 ax = K.unit_axis(), perp{-ax[1], ax[0]};
        paths.push_back({{"origin", vec_json(K.apex, 2)}, {"xi", vec_json(ax, 2)}, {"gamma", 1.2}});
        paths.push_back({{"origin", vec_json(K.apex, 2)}, {"xi", vec_json(ax, 2)}, {"gamma", 3.0}});
        paths.push_back({{"origin", vec_json(K.apex, 2)}, {"xi", vec_json(perp, 2)}, {"gamma", 3.0}});
    } else {
        Vec2 c{0.5 * length, dim == 2 ? 0.5 * length : 0.0};
        paths.push_back({{"origin", vec_json(c, dim)}, {"xi", vec_json({1.0, 0.0}, dim)}, {"gamma", 2.0}});
    }
    out["paths"] = paths;
    return out;
}

inline ClassifyOptions classify_options(const json& a) {
    ClassifyOptions o;
    o.eps = a.value("eps", o.eps);
    o.lambda_lo = a.at("lambda_lo").get<double>();
    o.lambda_hi = a.at("lambda_hi").get<double>();
    o.path_samples = a.at("path_samples").get<std::size_t>();
    o.alpha_grid = a.at("alpha_grid").get<std::vector<double>>();
    require(o.eps > 0, ErrorKind::config, "tube width eps must be positive");
    return o;
}

inline json default_separation_analysis(double length) {
    // Nested strips about the centre: Ω above |b|^2, Σ below |b|, both under a = 1/2.
    double c = 0.5 * length;
    auto strip = [&](double alpha, const char* side) {
        return json{{"family", "parabolic-strip"},
                    {"params", {{"alpha", alpha}, {"side", side}, {"a_max", 0.5}, {"center", json::array({c})}}}};
    };
    return {{"omega", strip(2.0, "above")}, {"sigma", strip(1.0, "below")}};
}

inline Run resolve(const std::string& command, const json& user, std::optional<std::uint64_t> seed_override = {},
                   const std::string& format = "") {
    require(std::find(command_names().begin(), command_names().end(), command) != command_names().end(),
            ErrorKind::config, "unknown command '" + command + "'");
    try {
        Run run;
        run.command = command;
        bool dump_command = command == "transform" || command == "signals";
        run.format = format.empty() ? (dump_command ? "bin" : "json") : format;
        require(run.format == "json" || run.format == "csv" || run.format == "bin", ErrorKind::config,
                "format must be json, csv or bin");
        std::uint64_t seed = seed_override ? *seed_override : user.value("seed", std::uint64_t{1});
        json& cfg = run.config;
        cfg["seed"] = seed;

        GridDefaults gd = grid_defaults(command);
        json usignal = user.value("signal", default_signal(command));
        std::optional<GridSignal> from_file;
        if (usignal.contains("file")) {
            from_file = read_signal(usignal["file"].get<std::string>());
            gd.dim = from_file->dim;
            gd.n = from_file->n;
            gd.length = from_file->length;
        }

        if (command != "elliptic") cfg["grid"] = resolve_grid(user, gd);
        int dim = command == "elliptic" ? 2 : cfg["grid"]["dimension"].get<int>();
        if (command != "elliptic" && command != "signals") cfg["scales"] = resolve_scales(user, cfg["grid"], gd);
        if (command != "signals" && command != "separation" && command != "elliptic")
            cfg["wavelet"] = resolve_wavelet(user.value("wavelet", default_wavelet(command)), dim);

        if (command == "transform" || command == "signals" || command == "classify") {
            const json& g = cfg["grid"];
            SignalGrid sg{dim, g["n"].get<std::size_t>(), g["length"].get<double>(), true};
            if (from_file) {
                require(from_file->dim == sg.dim && from_file->n == sg.n && from_file->length == sg.length,
                        ErrorKind::config, "signal file grid differs from the configured grid");
                cfg["signal"] = {{"file", usignal["file"]}};
                run.signal = std::move(*from_file);
            } else {
                json resolved;
                run.signal = signal_from_json(usignal, sg, seed, &resolved);
                cfg["signal"] = resolved;
            }
        }

        json analysis = user.value("analysis", json::object());
        if (command == "transform") cfg["analysis"] = {{"slices", analysis.value("slices", std::vector<std::size_t>{})}};
        if (command == "classify")
            cfg["analysis"] = resolve_classify_analysis(analysis, cfg["signal"], dim, cfg["grid"]["length"].get<double>());
        if (command == "separation" || command == "elliptic") {
            json a = command == "elliptic" ? resolve_classify_analysis(analysis, json::object(), 2, 1.0) : json::object();
            if (command == "elliptic") {
                a.erase("paths");
                a.erase("eps");  // the tube width lives in the experiment block
            } else {
                double L = cfg["grid"]["length"].get<double>();
                json d = default_separation_analysis(L);
                a["omega"] = analysis.value("omega", d["omega"]);
                a["sigma"] = analysis.value("sigma", d["sigma"]);
                a["separation_eps"] = analysis.value("separation_eps", 0.25);
                Vec2 o = analysis.contains("origin") ? vec2_from_json(analysis["origin"], dim)
                                                     : Vec2{0.5 * L, dim == 2 ? 0.5 * L : 0.0};
                a["origin"] = vec_json(o, dim);
                mask_from_json(a["omega"], dim);
                mask_from_json(a["sigma"], dim);
            }
            cfg["analysis"] = a;
        }

        json exp = user.value("experiment", json::object());
        if (command == "elliptic") cfg["experiment"] = {{"elliptic", resolve_elliptic(exp.value("elliptic", json::object()))}};
        if (command == "verify") {
            json wl = user.value("wavelets", json::array({{{"kind", "gaussian-derivative"}, {"params", {{"order", 4}}}}}));
            require(!wl.empty(), ErrorKind::config, "verify needs a target wavelet in 'wavelets'");
            cfg["wavelets"] = json::array();
            for (const auto& w : wl) cfg["wavelets"].push_back(resolve_wavelet(w, dim));
            json v = user.value("verify", json::object());
            cfg["verify"] = {{"geometry_samples", v.value("geometry_samples", 2000)},
                             {"raster_trials", v.value("raster_trials", 4)},
                             {"signal_seeds", v.value("signal_seeds", 2)}};
            if (exp.contains("elliptic")) cfg["experiment"] = {{"elliptic", resolve_elliptic(exp["elliptic"])}};
        }
        return run;
    } catch (const json::exception& e) {
        fail(ErrorKind::config, std::string("bad config value: ") + e.what());
    }
}

// ---- outputs ------------------------------------------------------------------------

struct Outcome {
    int exit_code = exit_pass;
    json report;
    std::vector<std::string> summary;  // human-readable lines
    std::vector<std::string> files;
};

inline json report_header(const Run& run) {
    return {{"tool", "cuspscope"}, {"version", version}, {"command", run.command}, {"format", run.format},
            {"config", run.config}};
}

inline std::string output_path(const std::string& dir, const std::string& name) {
    std::filesystem::path p(dir.empty() ? "." : dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    require(!ec, ErrorKind::io, "cannot create output directory " + p.string());
    return (p / name).string();
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream os(path);
    require(os.good(), ErrorKind::io, "cannot open " + path + " for writing");
    os << j.dump(2) << '\n';
    require(os.good(), ErrorKind::io, "write failed for " + path);
}

inline std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

inline json complex_arrays(const cplx* p, std::size_t count) {
    std::vector<double> re(count), im(count);
    for (std::size_t i = 0; i < count; ++i) {
        re[i] = p[i].real();
        im[i] = p[i].imag();
    }
    return {{"re", re}, {"im", im}};
}

// ---- verify -------------------------------------------------------------------------

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
    json metrics = json::object();
};

template <class F>
Check guarded(const std::string& name, F&& body) {
    try {
        Check c = body();
        c.name = name;
        return c;
    } catch (const Error& e) {
        return {name, false, std::string(e.kind_name()) + ": " + e.what(), json::object()};
    }
}

namespace detail {

inline double rel_l2(const GridSignal& x, const GridSignal& ref) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += std::norm(x[i] - ref[i]);
        den += std::norm(ref[i]);
    }
    return std::sqrt(num / den);
}

inline bool close_rel(double x, double y, double tol) {
    return std::abs(x - y) <= tol * std::max({1.0, std::abs(x), std::abs(y)});
}

inline bool same_point(const HalfSpacePoint& p, const HalfSpacePoint& q, double tol) {
    return close_rel(p.a, q.a, tol) && close_rel(p.b[0], q.b[0], tol) && close_rel(p.b[1], q.b[1], tol);
}

inline Raster random_raster(const Lattice& lat, std::mt19937_64& rng, double density) {
    Raster r(lat);
    std::bernoulli_distribution keep(density);
    for (std::size_t j = 0; j < lat.scales.count; ++j)
        for (std::size_t i = 0; i < lat.plane(); ++i)
            if (keep(rng)) r.set(j, i);
    return r;
}

// Wavenumber band whose dilates stay inside [a_min, a_max] up to a relative tail
// `tail` of the energy of ĝ on either side.
inline std::pair<double, double> in_band_range(const WaveletSpec& g, const ScaleGrid& sg, double tail = 1e-3) {
    const double t0 = -40.0, dt = 0.01;
    const std::size_t count = 8001;
    std::vector<double> cum(count);
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        double k = std::exp(t0 + dt * static_cast<double>(i));
        double v = spectrum_value(g, k, 0.0);
        total += v * v;
        cum[i] = total;
    }
    require(total > 0, ErrorKind::inadmissible, "wavelet spectrum vanishes along the first axis");
    std::size_t lo = 0, hi = count - 1;
    while (lo < count && cum[lo] < tail * total) ++lo;
    while (hi > 0 && cum[hi] > (1.0 - tail) * total) --hi;
    double k_lo = std::exp(t0 + dt * static_cast<double>(hi)) / sg.a_max;
    double k_hi = std::exp(t0 + dt * static_cast<double>(lo)) / sg.a_min;
    require(k_lo < k_hi, ErrorKind::precondition,
            "scale range [" + fmt(sg.a_min) + ", " + fmt(sg.a_max) + "] is too narrow to hold an in-band signal");
    return {k_lo, k_hi};
}

// The same catalog wavelet in one dimension; empty for direction-dependent tables.
inline std::optional<json> one_dimensional(json w) {
    if (w["kind"] == "tabulated-spectral" && w["dimension"] == 2 && w["params"]["table"].size() > 1) return {};
    w["dimension"] = 1;
    if (w["params"].contains("inner")) {
        auto inner = one_dimensional(w["params"]["inner"]);
        if (!inner) return {};
        w["params"]["inner"] = *inner;
    }
    if (w["kind"] == "tabulated-spectral" && w["params"]["table"].size() == 1) {
        double c = w["params"]["table"][0].get<double>();
        w["params"]["table"] = {c, c};
    }
    return w;
}

} // namespace detail

inline Check check_geometry(const json& v, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ub(-10.0, 10.0), ul(-5.0, 5.0), vb(-3.0, 3.0), vl(-2.0, 2.0);
    auto random_point = [&](int dim) {
        double a = std::exp(ul(rng));
        return dim == 1 ? make_point(ub(rng), a) : make_point(ub(rng), ub(rng), a);
    };
    const double tol = 1e-12;
    std::size_t tri = 0, dtri = 0, sym = 0, inv = 0, group = 0, cov = 0;
    const int samples = v.at("geometry_samples").get<int>();
    for (int it = 0; it < samples; ++it) {
        int dim = 1 + it % 2;
        auto p = random_point(dim), q = random_point(dim), r = random_point(dim);
        double dp = delta(p), dq = delta(q), dpq = delta(compose(p, q));
        if (dpq > dp * dq * (1 + tol) || dpq < std::max(dp / dq, dq / dp) * (1 - tol)) ++tri;
        double pr = dist(p, r), pq = dist(p, q), qr = dist(q, r);
        if (pr > pq * qr * (1 + tol) || pr < pq / qr * (1 - tol)) ++dtri;
        if (!detail::close_rel(dist(p, q), dist(q, p), tol)) ++sym;
        if (!detail::close_rel(delta(inverse(p)), delta(p), tol)) ++inv;
        HalfSpacePoint e = identity_point(dim);
        if (!detail::same_point(compose(compose(p, q), r), compose(p, compose(q, r)), 1e-10) ||
            !detail::same_point(compose(p, e), p, tol) || !detail::same_point(compose(e, p), p, tol) ||
            !detail::same_point(compose(p, inverse(p)), e, 1e-10))
            ++group;
        Vec2 beta{vb(rng), dim == 2 ? vb(rng) : 0.0};
        double lam = std::exp(vl(rng));
        if (!detail::close_rel(dist(dilate_translate(p, beta, lam), dilate_translate(q, beta, lam)), dist(p, q), 1e-11))
            ++cov;
    }
    // Neighbourhood associativity and the reverse-separation property on random rasters.
    const int trials = v.at("raster_trials").get<int>();
    Lattice lat{1, 128, 1.0, ScaleGrid(2.0 / 128, 0.25, 24)};
    Vec2 origin{0.5, 0.0};
    std::size_t assoc = 0, reverse = 0, separated = 0;
    for (int t = 0; t < trials; ++t) {
        double e1 = 0.2 + 0.05 * (t % 4), e2 = 0.3 + 0.05 * (t % 3);
        Raster omega = detail::random_raster(lat, rng, 0.005);
        Raster lhs = gamma_neighborhood(gamma_neighborhood(omega, e1, origin), e2, origin);
        Raster rhs = gamma_neighborhood(omega, e1 + e2 * (1 + e1), origin);
        for (std::size_t i = 0; i < lhs.bits.size(); ++i)
            if (lhs.bits[i] && !rhs.bits[i]) ++assoc;
        double e = 0.2 + 0.05 * (t % 5);
        Raster sigma = gamma_neighborhood(omega, e, origin).complement() & detail::random_raster(lat, rng, 0.5);
        auto fwd = well_separated(omega, sigma, e, origin);
        if (!fwd.verdict || fwd.vacuous) continue;
        ++separated;
        if (!well_separated(sigma, omega, e / (1 + e), origin).verdict) ++reverse;
    }
    Check c;
    c.metrics = {{"samples", samples},           {"delta_triangle", tri}, {"dist_triangle", dtri},
                 {"dist_symmetry", sym},         {"delta_inverse", inv},  {"group_axioms", group},
                 {"invariance", cov},            {"raster_trials", trials}, {"associativity", assoc},
                 {"separated_pairs", separated}, {"reverse_separation", reverse}};
    std::size_t bad = tri + dtri + sym + inv + group + cov + assoc + reverse;
    c.pass = bad == 0;
    c.detail = std::to_string(samples) + " random triples, " + std::to_string(trials) + " raster trials, " +
               std::to_string(bad) + " violations";
    return c;
}

inline Outcome cmd_verify(const Run& run, const std::string& out_dir) {
    const json& cfg = run.config;
    const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();
    const int dim = cfg["grid"]["dimension"].get<int>();
    const std::size_t n = cfg["grid"]["n"].get<std::size_t>();
    const double L = cfg["grid"]["length"].get<double>();
    const ScaleGrid sg = scale_grid(cfg["scales"]);
    const WaveletSpec g = wavelet_from_json(cfg["wavelet"], dim);
    const WaveletSpec target = wavelet_from_json(cfg["wavelets"][0], dim);
    const int seeds = cfg["verify"]["signal_seeds"].get<int>();
    SignalGrid grid{dim, n, L, true};
    auto band_signal = [&](std::uint64_t k) {
        auto [lo, hi] = detail::in_band_range(g, sg);
        return band_limited_random(lo, hi, seed * 1000 + k, grid);
    };

    std::vector<Check> checks;
    checks.push_back(guarded("geometry", [&] { return check_geometry(cfg["verify"], seed); }));
    checks.push_back(guarded("admissibility", [&] {
        Check c;
        auto p = admissibility_profile(g);
        auto r = reconstruction_wavelet(g);
        auto cross = admissibility_profile(g, r);
        double spread = (p.max_value - p.min_value) / p.max_value;
        double unit = std::max(std::abs(cross.max_value - 1.0), std::abs(cross.min_value - 1.0));
        bool finite = std::isfinite(p.max_value) && p.min_value > 0;
        c.pass = finite && (!g.is_radial() || spread < 1e-9) && unit < 1e-8;
        c.metrics = {{"min", p.min_value}, {"max", p.max_value}, {"radial_spread", spread}, {"cross_constant_error", unit}};
        c.detail = "profile in [" + fmt(p.min_value, 8) + ", " + fmt(p.max_value, 8) + "], reconstruction pair constant off by " +
                   fmt(unit, 3);
        return c;
    }));
    checks.push_back(guarded("reconstruction", [&] {
        Check c;
        auto r = reconstruction_wavelet(g);
        double worst = 0;
        for (int k = 0; k < seeds; ++k) {
            auto s = band_signal(static_cast<std::uint64_t>(k));
            worst = std::max(worst, detail::rel_l2(synthesis(r, forward(g, s, sg)), s));
        }
        auto [lo, hi] = detail::in_band_range(g, sg);
        c.pass = worst < 1e-3;
        c.metrics = {{"relative_error", worst}, {"band", {lo, hi}}};
        c.detail = "relative L2 error " + fmt(worst, 3) + " (< 1e-3) on band [" + fmt(lo) + ", " + fmt(hi) + "]";
        return c;
    }));
    checks.push_back(guarded("cross-kernel", [&] {
        Check c;
        double worst = 0;
        for (int k = 0; k < seeds; ++k) {
            auto s = band_signal(100 + static_cast<std::uint64_t>(k));
            auto via = cross_kernel_apply(g, target, forward(g, s, sg));
            auto direct = forward(target, s, sg);
            double num = 0, den = 0;
            for (std::size_t i = 0; i < via.values.size(); ++i) {
                num += std::norm(via.values[i] - direct.values[i]);
                den += std::norm(direct.values[i]);
            }
            worst = std::max(worst, std::sqrt(num / den));
        }
        c.pass = worst < 5e-2;
        c.metrics = {{"relative_discrepancy", worst}, {"target", to_json(target)}};
        c.detail = "relative discrepancy to " + target.name() + " " + fmt(worst, 3) + " (< 5e-2)";
        return c;
    }));
    checks.push_back(guarded("energy", [&] {
        Check c;
        auto gn = normalized_wavelet(g);
        double worst = 0;
        for (int k = 0; k < seeds; ++k) {
            auto s = band_signal(200 + static_cast<std::uint64_t>(k));
            double e = forward(gn, s, sg).energy();
            double ref = s.l2_norm() * s.l2_norm();
            worst = std::max(worst, std::abs(e / ref - 1.0));
        }
        c.pass = worst < 1e-2;
        c.metrics = {{"relative_energy_error", worst}};
        c.detail = "energy ratio off by " + fmt(worst, 3) + " (< 1e-2)";
        return c;
    }));
    checks.push_back(guarded("projector", [&] {
        Check c;
        auto w1 = detail::one_dimensional(cfg["wavelet"]);
        if (!w1) {
            c.pass = true;
            c.detail = "skipped: direction-dependent wavelet has no one-dimensional analogue";
            c.metrics = {{"skipped", true}};
            return c;
        }
        WaveletSpec h = wavelet_from_json(*w1, 1);
        auto r = reconstruction_wavelet(h);
        // Kernel sampled over twice the decades of the evaluation band [1/4, 4].
        ScaleGrid ext(0.0625, 16.0, 65);
        auto pi = kernel_field(h, r, 4096, 128.0, ext);
        auto conv = halfspace_convolve(reproducing_kernel(h, r), pi);
        double num = 0, den = 0;
        for (std::size_t j = 16; j <= 48; ++j)
            for (std::size_t i = 0; i < pi.plane(); ++i) {
                num += std::norm(conv.at(j, i) - pi.at(j, i));
                den += std::norm(pi.at(j, i));
            }
        double rel = std::sqrt(num / den);
        c.pass = rel < 1e-2;
        c.metrics = {{"relative_defect", rel}};
        c.detail = "||Pi*Pi - Pi|| / ||Pi|| = " + fmt(rel, 3) + " (< 1e-2)";
        return c;
    }));
    checks.push_back(guarded("transfer-identity", [&] {
        Check c;
        if (!g.is_radial()) {
            c.pass = true;
            c.detail = "skipped: wavelet is not spherically symmetric";
            c.metrics = {{"skipped", true}};
            return c;
        }
        auto eta = band_signal(300);
        auto t = transfer_identity_residual(g, eta, sg);
        c.pass = t.residual < 1e-8;
        c.metrics = {{"residual", t.residual}, {"sign", t.sign}};
        c.detail = "max relative residual " + fmt(t.residual, 3) + " (< 1e-8), calibrated sign " + std::to_string(t.sign);
        return c;
    }));
    if (cfg.contains("experiment") && cfg["experiment"].contains("elliptic")) {
        checks.push_back(guarded("elliptic-gain", [&] {
            Check c;
            const json& e = cfg["experiment"]["elliptic"];
            GainSpec spec;
            resolve_elliptic(e, &spec);
            auto rep = regularity_gain_experiment(spec, wavelet_from_json(e["wavelet"], 2));
            double want = e["expected_gain"].get<double>(), tol = e["gain_tolerance"].get<double>();
            c.pass = std::abs(rep.gain - want) <= tol;
            c.metrics = rep.to_json();
            c.detail = "gain " + fmt(rep.gain) + " (expected " + fmt(want) + " +/- " + fmt(tol) + ")";
            return c;
        }));
    }

    Outcome out;
    out.report = report_header(run);
    bool all = true;
    json arr = json::array();
    for (const auto& c : checks) {
        all = all && c.pass;
        arr.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}, {"metrics", c.metrics}});
        out.summary.push_back(std::string(c.pass ? "PASS " : "FAIL ") + c.name + ": " + c.detail);
    }
    out.report["checks"] = arr;
    out.report["pass"] = all;
    out.summary.push_back(all ? "all checks passed" : "verification failed");
    out.exit_code = all ? exit_pass : exit_failure;
    std::string path = output_path(out_dir, "verify.json");
    write_json_file(path, out.report);
    out.files.push_back(path);
    return out;
}

// ---- transform / signals ------------------------------------------------------------

inline Outcome cmd_transform(const Run& run, const std::string& out_dir) {
    const json& cfg = run.config;
    int dim = cfg["grid"]["dimension"].get<int>();
    WaveletSpec g = wavelet_from_json(cfg["wavelet"], dim);
    HalfSpaceField f = forward(g, *run.signal, scale_grid(cfg["scales"]));
    Outcome out;
    json meta = report_header(run);
    std::string path;
    if (run.format == "bin") {
        path = output_path(out_dir, "field.bin");
        write_field(path, f, meta);
    } else if (run.format == "csv") {
        path = output_path(out_dir, "field.csv");
        write_field_csv(path, f, cfg["analysis"]["slices"].get<std::vector<std::size_t>>(), meta);
    } else {
        path = output_path(out_dir, "field.json");
        json j = field_header(f, meta);
        j["values"] = complex_arrays(f.values.data(), f.values.size());
        write_json_file(path, j);
    }
    out.files.push_back(path);
    out.report = meta;
    out.report["abs_max"] = f.abs_max();
    out.report["energy"] = f.energy();
    out.summary.push_back("transform: " + std::to_string(f.scales.count) + " scales, max |W| = " + fmt(f.abs_max(), 6) +
                          ", wrote " + path);
    return out;
}

inline std::string signal_name(const json& s) {
    return s.contains("generator") ? s["generator"].get<std::string>() : "file " + s["file"].get<std::string>();
}

inline Outcome cmd_signals(const Run& run, const std::string& out_dir) {
    const GridSignal& s = *run.signal;
    Outcome out;
    json meta = report_header(run);
    std::string path;
    if (run.format == "bin") {
        path = output_path(out_dir, "signal.bin");
        write_signal(path, s, meta);
    } else if (run.format == "csv") {
        path = output_path(out_dir, "signal.csv");
        std::ofstream os(path);
        require(os.good(), ErrorKind::io, "cannot open " + path + " for writing");
        os << "# " << meta.dump() << '\n' << (s.dim == 1 ? "x,re,im\n" : "x,y,re,im\n");
        for (std::size_t i = 0; i < s.size(); ++i) {
            Vec2 p = s.position(i);
            os << format_double(p[0]) << ',';
            if (s.dim == 2) os << format_double(p[1]) << ',';
            os << format_double(s[i].real()) << ',' << format_double(s[i].imag()) << '\n';
        }
    } else {
        path = output_path(out_dir, "signal.json");
        json j = meta;
        j["dims"] = {{"dimension", s.dim}, {"n", s.n}};
        j["grid"] = {{"length", s.length}, {"step", s.step()}};
        j["values"] = complex_arrays(s.data.data(), s.data.size());
        write_json_file(path, j);
    }
    out.files.push_back(path);
    out.report = meta;
    out.summary.push_back("signals: " + signal_name(run.config["signal"]) + " on " + std::to_string(s.n) +
                          (s.dim == 2 ? "^2" : "") + " points, wrote " + path);
    return out;
}

// ---- classify -----------------------------------------------------------------------

inline std::string verdict_text(const DecayFit& f) {
    std::string s = "alpha " + std::string(f.rapid || f.floor_limited ? ">= " : "= ") + fmt(f.slope);
    if (f.rapid) s += " (rapid)";
    return s;
}

inline Outcome cmd_classify(const Run& run, const std::string& out_dir) {
    const json& cfg = run.config;
    int dim = cfg["grid"]["dimension"].get<int>();
    WaveletSpec g = wavelet_from_json(cfg["wavelet"], dim);
    HalfSpaceField f = forward(g, *run.signal, scale_grid(cfg["scales"]));
    ClassifyOptions opt = classify_options(cfg["analysis"]);
    Outcome out;
    out.report = report_header(run);
    json reports = json::array();
    std::size_t index = 0;
    for (const auto& p : cfg["analysis"]["paths"]) {
        Vec2 origin = vec2_from_json(p["origin"], dim), xi = vec2_from_json(p["xi"], dim);
        double gamma = p["gamma"].get<double>();
        ClassReport rep = classify_type(f, origin, xi, gamma, opt);
        reports.push_back(rep.to_json());
        std::string csv = output_path(out_dir, "path_" + std::to_string(index) + ".csv");
        json meta = report_header(run);
        meta["path_index"] = index;
        write_path_csv(csv, sample_along_path(f, rep.path), meta);
        out.files.push_back(csv);
        std::ostringstream line;
        line << "path " << index << ": xi=" << p["xi"].dump() << " gamma=" << fmt(gamma) << ": "
             << verdict_text(rep.tube_fit);
        out.summary.push_back(line.str());
        ++index;
    }
    out.report["reports"] = reports;
    std::string path = output_path(out_dir, "classify.json");
    write_json_file(path, out.report);
    out.files.insert(out.files.begin(), path);
    if (run.format == "bin") {
        std::string fp = output_path(out_dir, "field.bin");
        write_field(fp, f, report_header(run));
        out.files.push_back(fp);
    }
    return out;
}

// ---- separation ---------------------------------------------------------------------

inline json point_json(const HalfSpacePoint& p) {
    return {{"b", vec_json(p.b, p.dim)}, {"a", p.a}};
}

inline json separation_json(const SeparationReport& r, double eps) {
    auto finite = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j = {{"eps", eps}, {"verdict", r.verdict}, {"vacuous", r.vacuous}, {"margin", finite(r.margin)}};
    if (!r.vacuous)
        j["witness"] = {{"omega_point", point_json(r.omega_point)},
                        {"sigma_point", point_json(r.sigma_point)},
                        {"dist", finite(r.witness_dist)}};
    return j;
}

inline Outcome cmd_separation(const Run& run, const std::string& out_dir) {
    const json& cfg = run.config;
    const json& a = cfg["analysis"];
    int dim = cfg["grid"]["dimension"].get<int>();
    Lattice lat{dim, cfg["grid"]["n"].get<std::size_t>(), cfg["grid"]["length"].get<double>(), scale_grid(cfg["scales"])};
    Raster omega = mask_from_json(a["omega"], dim)->rasterize(lat);
    Raster sigma = mask_from_json(a["sigma"], dim)->rasterize(lat);
    double eps = a["separation_eps"].get<double>();
    Vec2 origin = vec2_from_json(a["origin"], dim);
    auto fwd = well_separated(omega, sigma, eps, origin);
    double eps_rev = eps / (1 + eps);
    auto rev = well_separated(sigma, omega, eps_rev, origin);
    Outcome out;
    out.report = report_header(run);
    out.report["omega_points"] = omega.count();
    out.report["sigma_points"] = sigma.count();
    out.report["forward"] = separation_json(fwd, eps);
    out.report["reverse"] = separation_json(rev, eps_rev);
    out.report["verdict"] = fwd.verdict;
    out.summary.push_back(std::string("omega and sigma are ") + (fwd.verdict ? "" : "not ") + "well separated at eps " +
                          fmt(eps) + (fwd.vacuous ? " (vacuous: a set is empty)" : ", margin " + fmt(fwd.margin)));
    out.summary.push_back(std::string("reverse at eps/(1+eps) = ") + fmt(eps_rev) + ": " +
                          (rev.verdict ? "separated" : "not separated"));
    std::string path = output_path(out_dir, "separation.json");
    write_json_file(path, out.report);
    out.files.push_back(path);
    return out;
}

// ---- elliptic -----------------------------------------------------------------------

inline Outcome cmd_elliptic(const Run& run, const std::string& out_dir) {
    const json& cfg = run.config;
    const json& e = cfg["experiment"]["elliptic"];
    GainSpec spec;
    resolve_elliptic(e, &spec);
    ClassifyOptions opt = classify_options(cfg["analysis"]);
    opt.eps = spec.classify.eps;
    spec.classify = opt;
    WaveletSpec g = wavelet_from_json(e["wavelet"], 2);
    EllipticReport rep = regularity_gain_experiment(spec, g);
    Outcome out;
    out.report = report_header(run);
    out.report["result"] = rep.to_json();
    double want = e["expected_gain"].get<double>(), tol = e["gain_tolerance"].get<double>();
    out.report["within_tolerance"] = std::abs(rep.gain - want) <= tol;
    out.summary.push_back("alpha_f " + fmt(rep.alpha_f) + ", alpha_eta " + fmt(rep.alpha_eta) + ", gain " + fmt(rep.gain) +
                          " (expected " + fmt(want) + " +/- " + fmt(tol) + ")");
    if (rep.transfer_checked)
        out.summary.push_back("transfer identity residual " + fmt(rep.transfer.residual, 3) + ", sign " +
                              std::to_string(rep.transfer.sign));
    std::string path = output_path(out_dir, "elliptic.json");
    write_json_file(path, out.report);
    out.files.push_back(path);
    return out;
}

// ---- dispatch -----------------------------------------------------------------------

inline Outcome execute(const Run& run, const std::string& out_dir) {
    if (run.command == "verify") return cmd_verify(run, out_dir);
    if (run.command == "transform") return cmd_transform(run, out_dir);
    if (run.command == "classify") return cmd_classify(run, out_dir);
    if (run.command == "separation") return cmd_separation(run, out_dir);
    if (run.command == "elliptic") return cmd_elliptic(run, out_dir);
    return cmd_signals(run, out_dir);
}

} // namespace cuspscope::cli
