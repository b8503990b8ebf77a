#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "engine.hpp"
#include "error.hpp"
#include "grid.hpp"

// Binary dump layout: one line of JSON header, then little-endian float64
// (re, im) pairs in row-major order with the scale index outermost.

namespace cuspscope {

inline constexpr const char* field_format_name = "cuspscope-field";

inline nlohmann::json convention_json() {
    return {{"fourier", "s_hat(k) = integral exp(-i k x) s(x) dx"},
            {"forward", "W(b,a) = (2 pi)^-n integral conj(g_hat(a k)) s_hat(k) exp(i k b) dk"},
            {"synthesis", "M_h r = sum_j ln(q) (h_{a_j} * r_j), h_a(x) = a^-n h(x/a)"},
            {"layout", "scale outermost, then y, then x; x fastest"}};
}

namespace detail {

inline void write_f64_le(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    os.write(buf, 8);
}

inline double read_f64_le(std::istream& is) {
    char buf[8];
    is.read(buf, 8);
    require(is.good(), ErrorKind::io, "truncated binary payload");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

inline void write_payload(std::ostream& os, const cplx* p, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
        write_f64_le(os, p[i].real());
        write_f64_le(os, p[i].imag());
    }
}

} // namespace detail

inline nlohmann::json field_header(const HalfSpaceField& f, const nlohmann::json& extra = {}) {
    nlohmann::json h;
    h["format"] = field_format_name;
    h["kind"] = "field";
    h["dims"] = {{"dimension", f.dim}, {"n", f.n}, {"scales", f.scales.count}};
    h["grid"] = {{"length", f.length}, {"step", f.step()}};
    h["scales"] = {{"a_min", f.scales.a_min}, {"a_max", f.scales.a_max}, {"count", f.scales.count},
                   {"values", f.scales.values()}};
    h["wavelet"] = f.wavelet ? to_json(*f.wavelet) : nlohmann::json(nullptr);
    h["convention"] = convention_json();
    if (!extra.is_null()) h["meta"] = extra;
    return h;
}

inline void write_field(const std::string& path, const HalfSpaceField& f, const nlohmann::json& extra = {}) {
    std::ofstream os(path, std::ios::binary);
    require(os.good(), ErrorKind::io, "cannot open " + path + " for writing");
    os << field_header(f, extra).dump() << '\n';
    detail::write_payload(os, f.values.data(), f.values.size());
    require(os.good(), ErrorKind::io, "write failed for " + path);
}

inline nlohmann::json read_header_line(std::istream& is, const std::string& path) {
    std::string line;
    std::getline(is, line);
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        fail(ErrorKind::io, path + " does not start with a JSON header line");
    }
    require(h.value("format", std::string()) == field_format_name, ErrorKind::io, path + " is not a field dump");
    return h;
}

inline HalfSpaceField read_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), ErrorKind::io, "cannot open " + path);
    auto h = read_header_line(is, path);
    require(h["kind"] == "field", ErrorKind::io, path + " holds a signal, not a field");
    ScaleGrid sg(h["scales"]["a_min"].get<double>(), h["scales"]["a_max"].get<double>(),
                 h["scales"]["count"].get<std::size_t>());
    HalfSpaceField f(sg, h["dims"]["dimension"].get<int>(), h["dims"]["n"].get<std::size_t>(),
                     h["grid"]["length"].get<double>());
    if (!h["wavelet"].is_null()) f.wavelet = wavelet_from_json(h["wavelet"]);
    for (auto& z : f.values) {
        double re = detail::read_f64_le(is);
        double im = detail::read_f64_le(is);
        z = {re, im};
    }
    return f;
}

// A signal is stored as a field dump with a single slice and no scales.
inline void write_signal(const std::string& path, const GridSignal& s, const nlohmann::json& extra = {}) {
    std::ofstream os(path, std::ios::binary);
    require(os.good(), ErrorKind::io, "cannot open " + path + " for writing");
    nlohmann::json h;
    h["format"] = field_format_name;
    h["kind"] = "signal";
    h["dims"] = {{"dimension", s.dim}, {"n", s.n}, {"scales", 1}};
    h["grid"] = {{"length", s.length}, {"step", s.step()}};
    h["scales"] = nlohmann::json::array();
    h["wavelet"] = nullptr;
    h["convention"] = convention_json();
    if (!extra.is_null()) h["meta"] = extra;
    os << h.dump() << '\n';
    detail::write_payload(os, s.data.data(), s.data.size());
    require(os.good(), ErrorKind::io, "write failed for " + path);
}

inline GridSignal read_signal(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), ErrorKind::io, "cannot open " + path);
    auto h = read_header_line(is, path);
    require(h["kind"] == "signal", ErrorKind::io, path + " holds a field, not a signal");
    GridSignal s(h["dims"]["dimension"].get<int>(), h["dims"]["n"].get<std::size_t>(),
                 h["grid"]["length"].get<double>());
    for (auto& z : s.data) {
        double re = detail::read_f64_le(is);
        double im = detail::read_f64_le(is);
        z = {re, im};
    }
    return s;
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// CSV of |W| slices: scale_index, a, x[, y], absW. A non-null `meta` becomes a "# {json}" first line.
inline void write_field_csv(const std::string& path, const HalfSpaceField& f, std::vector<std::size_t> slices = {},
                            const nlohmann::json& meta = {}) {
    std::ofstream os(path);
    require(os.good(), ErrorKind::io, "cannot open " + path + " for writing");
    if (!meta.is_null()) os << "# " << meta.dump() << '\n';
    if (slices.empty())
        for (std::size_t j = 0; j < f.scales.count; ++j) slices.push_back(j);
    os << (f.dim == 1 ? "scale_index,a,x,absW\n" : "scale_index,a,x,y,absW\n");
    Lattice lat = f.lattice();
    for (auto j : slices) {
        require(j < f.scales.count, ErrorKind::config, "slice index out of range");
        double a = f.scales.scale(j);
        for (std::size_t i = 0; i < f.plane(); ++i) {
            Vec2 p = lat.position(i);
            os << j << ',' << format_double(a) << ',' << format_double(p[0]) << ',';
            if (f.dim == 2) os << format_double(p[1]) << ',';
            os << format_double(std::abs(f.at(j, i))) << '\n';
        }
    }
}

} // namespace cuspscope
