#pragma once

// File formats: binary fields, CSV fields and traces, JSON documents, and a
// stable content hash for manifests.
//
// Binary field layout (little-endian):
//   char[4]  magic "FDLF"
//   uint32   version (1)
//   uint32   d
//   uint32   n
//   float64  L
//   float64  t
//   float64  values[n^d], row-major (axis 0 slowest)

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdlab/grid.hpp"

namespace fdlab::io {

inline constexpr char kFieldMagic[4] = {'F', 'D', 'L', 'F'};
inline constexpr std::uint32_t kFieldVersion = 1;

/// Binary field encoding: magic, version, d, n, L, t, then row-major doubles.
inline std::string field_bytes(const Field& f)
{
    const std::uint32_t hdr[3] = {kFieldVersion, static_cast<std::uint32_t>(f.grid.dim),
                                  static_cast<std::uint32_t>(f.grid.n)};
    std::string out(kFieldMagic, 4);
    out.append(reinterpret_cast<const char*>(hdr), sizeof(hdr));
    out.append(reinterpret_cast<const char*>(&f.grid.L), sizeof(double));
    out.append(reinterpret_cast<const char*>(&f.time_label), sizeof(double));
    out.append(reinterpret_cast<const char*>(f.values.data()), f.values.size() * sizeof(double));
    return out;
}

inline void write_field_binary(const Field& f, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const std::string bytes = field_bytes(f);
    os.write(bytes.data(), std::streamsize(bytes.size()));
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline Field read_field_binary(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kFieldMagic, 4) != 0) throw std::runtime_error(path.string() + ": bad magic");
    std::uint32_t hdr[3];
    is.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
    if (hdr[0] != kFieldVersion) throw std::runtime_error(path.string() + ": unsupported version");
    double L = 0.0, t = 0.0;
    is.read(reinterpret_cast<char*>(&L), sizeof(double));
    is.read(reinterpret_cast<char*>(&t), sizeof(double));
    Grid g(static_cast<int>(hdr[1]), static_cast<int>(hdr[2]), L);
    std::vector<double> v(g.size());
    is.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
    if (!is) throw std::runtime_error(path.string() + ": truncated payload");
    return Field(g, std::move(v), t);
}

/// Shortest round-trip decimal form; deterministic across runs.
inline std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// CSV with coordinate columns followed by the value.
inline void write_field_csv(const Field& f, const std::filesystem::path& path)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const Grid& g = f.grid;
    os << (g.dim == 1 ? "x,value\n" : "x0,x1,value\n");
    for (std::size_t k = 0; k < g.size(); ++k) {
        const auto [i0, i1] = g.unflatten(k);
        os << fmt(g.coord(i0)) << ',';
        if (g.dim == 2) os << fmt(g.coord(i1)) << ',';
        os << fmt(f.values[k]) << '\n';
    }
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return nlohmann::json::parse(is);
}

/// Simple column-oriented CSV writer.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> row)
    {
        if (row.size() != header_.size()) throw std::invalid_argument("CsvTable: row width mismatch");
        rows_.push_back(std::move(row));
    }

    std::string str() const
    {
        std::ostringstream os;
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << quote(r[i]);
            os << '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return os.str();
    }

    void write(const std::filesystem::path& path) const
    {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
        os << str();
    }

private:
    static std::string quote(const std::string& s)
    {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        return out + '"';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// 64-bit FNV-1a, hex encoded.
inline std::string content_hash(const std::string& text)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace fdlab::io
