#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "cuspscope/io.hpp"
#include "cuspscope/microlocal.hpp"
#include "cuspscope/schema.hpp"

using namespace cuspscope;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("cuspscope_io_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::string> lines(const std::string& path) {
    std::ifstream is(path);
    std::vector<std::string> out;
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

HalfSpaceField sample_field(int dim, std::size_t n) {
    HalfSpaceField f(ScaleGrid(0.01, 0.2, 5), dim, n, 2.0);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    for (auto& z : f.values) z = {nd(rng), nd(rng)};
    f.wavelet = gaussian_derivative_wavelet(dim, 3);
    return f;
}

// ---- binary dumps -----------------------------------------------------------------------------

TEST(FieldDump, RoundTripIsBitExact) {
    TempDir t;
    for (int dim : {1, 2}) {
        auto f = sample_field(dim, dim == 1 ? 64 : 16);
        write_field(t.file("f.bin"), f, {{"note", "x"}});
        auto g = read_field(t.file("f.bin"));
        EXPECT_EQ(g.dim, f.dim);
        EXPECT_EQ(g.n, f.n);
        EXPECT_EQ(g.length, f.length);
        EXPECT_EQ(g.scales.a_min, f.scales.a_min);
        EXPECT_EQ(g.scales.count, f.scales.count);
        EXPECT_EQ(g.values, f.values);
        ASSERT_TRUE(g.wavelet.has_value());
        EXPECT_EQ(to_json(*g.wavelet), to_json(*f.wavelet));
    }
}

TEST(FieldDump, HeaderThenLittleEndianPayload) {
    TempDir t;
    HalfSpaceField f(ScaleGrid(0.1, 0.2, 2), 1, 4, 1.0);
    f.slice(0)[0] = {1.0, -2.0};
    write_field(t.file("f.bin"), f);
    std::ifstream is(t.file("f.bin"), std::ios::binary);
    std::string header;
    std::getline(is, header);
    auto h = json::parse(header);
    EXPECT_EQ(h["format"], "cuspscope-field");
    EXPECT_EQ(h["kind"], "field");
    EXPECT_EQ(h["dims"]["scales"], 2);
    EXPECT_TRUE(h.contains("convention"));
    unsigned char b[16];
    is.read(reinterpret_cast<char*>(b), 16);
    // 1.0 = 0x3FF0000000000000, -2.0 = 0xC000000000000000, least significant byte first
    EXPECT_EQ(b[7], 0x3F);
    EXPECT_EQ(b[6], 0xF0);
    EXPECT_EQ(b[15], 0xC0);
    EXPECT_EQ(b[0], 0x00);
    is.seekg(0, std::ios::end);
    EXPECT_EQ(static_cast<std::size_t>(is.tellg()), header.size() + 1 + 2 * 4 * 16);
}

TEST(FieldDump, TruncatedPayloadIsIoError) {
    TempDir t;
    write_field(t.file("f.bin"), sample_field(1, 32));
    fs::resize_file(t.file("f.bin"), fs::file_size(t.file("f.bin")) - 8);
    try {
        read_field(t.file("f.bin"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::io);
    }
}

TEST(FieldDump, RejectsForeignFiles) {
    TempDir t;
    std::ofstream(t.file("x.bin")) << "hello\n";
    EXPECT_THROW(read_field(t.file("x.bin")), Error);
    EXPECT_THROW(read_field(t.file("missing.bin")), Error);
}

TEST(SignalDump, RoundTripAndKindCheck) {
    TempDir t;
    GridSignal s(2, 8, 3.0);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = {0.1 * i, -1.0 / (i + 1)};
    write_signal(t.file("s.bin"), s);
    auto back = read_signal(t.file("s.bin"));
    EXPECT_EQ(back.data, s.data);
    EXPECT_EQ(back.length, 3.0);
    EXPECT_THROW(read_field(t.file("s.bin")), Error);
    write_field(t.file("f.bin"), sample_field(1, 8));
    EXPECT_THROW(read_signal(t.file("f.bin")), Error);
}

// ---- CSV ----------------------------------------------------------------------------------------

TEST(FieldCsv, MetadataLineAndColumns) {
    TempDir t;
    auto f = sample_field(2, 4);
    write_field_csv(t.file("f.csv"), f, {1}, {{"command", "transform"}});
    auto l = lines(t.file("f.csv"));
    ASSERT_EQ(l.size(), 2u + 16u);
    EXPECT_EQ(l[0].substr(0, 2), "# ");
    EXPECT_EQ(json::parse(l[0].substr(2))["command"], "transform");
    EXPECT_EQ(l[1], "scale_index,a,x,y,absW");
    std::stringstream row(l[2]);
    std::string cell;
    std::vector<double> v;
    while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 5u);
    EXPECT_EQ(v[0], 1.0);
    EXPECT_DOUBLE_EQ(v[1], f.scales.scale(1));
    EXPECT_DOUBLE_EQ(v[4], std::abs(f.at(1, 0)));
}

TEST(FieldCsv, NoMetadataMeansNoCommentLine) {
    TempDir t;
    write_field_csv(t.file("f.csv"), sample_field(1, 4));
    auto l = lines(t.file("f.csv"));
    EXPECT_EQ(l[0], "scale_index,a,x,absW");
    EXPECT_EQ(l.size(), 1u + 5u * 4u);
    EXPECT_THROW(write_field_csv(t.file("g.csv"), sample_field(1, 4), {9}), Error);
}

TEST(PathCsv, Columns) {
    TempDir t;
    PathSamples s;
    s.samples = {{0.1, 0.01, 2.0}, {0.2, 0.04, 0.0}};
    write_path_csv(t.file("p.csv"), s, {{"path_index", 0}});
    auto l = lines(t.file("p.csv"));
    ASSERT_EQ(l.size(), 4u);
    EXPECT_EQ(l[1], "lambda,a,absW,log_a,log_absW");
    EXPECT_NE(l[2].find(std::to_string(std::log(2.0)).substr(0, 6)), std::string::npos);
    EXPECT_NE(l[3].find("-inf"), std::string::npos);
}

// ---- schema validator ---------------------------------------------------------------------------

const json schema = json::parse(R"({
  "type": "object",
  "additionalProperties": false,
  "required": ["n"],
  "properties": {
    "n": {"type": "integer", "minimum": 8},
    "eps": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    "kind": {"enum": ["a", "b"]},
    "v": {"$ref": "#/$defs/vector"},
    "free": {"type": "object", "additionalProperties": {"type": "number"}}
  },
  "$defs": {"vector": {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 2}}
})");

TEST(Schema, AcceptsValidInstance) {
    SchemaValidator v(schema);
    EXPECT_TRUE(v.validate({{"n", 16}, {"eps", 0.5}, {"kind", "a"}, {"v", {1.0, 2.0}}, {"free", {{"x", 1}}}}).empty());
    EXPECT_TRUE(v.validate({{"n", 16.0}}).empty());  // integral float counts as integer
}

TEST(Schema, ReportsEachViolation) {
    SchemaValidator v(schema);
    auto has = [](const std::vector<std::string>& e, const std::string& s) {
        for (const auto& x : e)
            if (x.find(s) != std::string::npos) return true;
        return false;
    };
    EXPECT_TRUE(has(v.validate(json::object()), "missing \"n\""));
    EXPECT_TRUE(has(v.validate({{"n", 4}}), "$.n: must be >= 8"));
    EXPECT_TRUE(has(v.validate({{"n", 8.5}}), "$.n: expected type"));
    EXPECT_TRUE(has(v.validate({{"n", 8}, {"eps", 0}}), "$.eps: must be > 0"));
    EXPECT_TRUE(has(v.validate({{"n", 8}, {"eps", 2}}), "$.eps: must be <= 1"));
    EXPECT_TRUE(has(v.validate({{"n", 8}, {"kind", "c"}}), "$.kind: value"));
    EXPECT_TRUE(has(v.validate({{"n", 8}, {"v", json::array()}}), "at least 1"));
    EXPECT_TRUE(has(v.validate({{"n", 8}, {"v", {1, 2, 3}}}), "at most 2"));
    EXPECT_TRUE(has(v.validate({{"n", 8}, {"v", {1, "x"}}}), "$.v[1]"));
    EXPECT_TRUE(has(v.validate({{"n", 8}, {"extra", 1}}), "$.extra: not allowed"));
    EXPECT_TRUE(has(v.validate({{"n", 8}, {"free", {{"y", "s"}}}}), "$.free.y"));
}

TEST(Schema, UnresolvedReferenceIsConfigError) {
    SchemaValidator v(json::parse(R"({"properties": {"x": {"$ref": "#/$defs/nope"}}, "$defs": {}})"));
    try {
        v.validate({{"x", 1}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
    }
}

} // namespace
