#include "thermoflow/io.hpp"

#include <zlib.h>

#include <bit>
#include <charconv>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace thermoflow {

namespace fs = std::filesystem;

std::string format_double(double x) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw IoError("format_double: conversion failed");
    return std::string(buf, ptr);
}

const std::string& timeseries_header() {
    static const std::string h =
        "t,energy,entropy,entropy_production,fisher,higher_functional,theta_min,theta_max,u_h1,v_h1,theta_l2,"
        "lp_2,lp_4,lp_8,lp_16,lp_32";
    return h;
}

namespace {

std::vector<double*> columns(DiagnosticsRecord& r) {
    std::vector<double*> c{&r.t,         &r.energy,    &r.entropy, &r.entropy_production, &r.fisher,
                           &r.higher_functional, &r.theta_min, &r.theta_max, &r.u_h1, &r.v_h1, &r.theta_l2};
    for (auto& lp : r.lp_norms) c.push_back(&lp);
    return c;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void append_le(std::string& out, const Vector<double>& v) {
    const std::size_t start = out.size();
    out.resize(start + static_cast<std::size_t>(v.size()) * 8);
    for (Index i = 0; i < v.size(); ++i) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(v[i]);
        for (int b = 0; b < 8; ++b) out[start + static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)] =
            static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
}

Vector<double> read_le(const std::string& bytes, std::size_t offset, Index count) {
    Vector<double> v(count);
    for (Index i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(
                        static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)]))
                    << (8 * b);
        v[i] = std::bit_cast<double>(bits);
    }
    return v;
}

}  // namespace

void write_timeseries(const std::vector<DiagnosticsRecord>& records, const fs::path& path) {
    if (records.empty()) throw InvalidInput("write_timeseries: no records");
    auto out = open_out(path);
    out << timeseries_header() << '\n';
    for (DiagnosticsRecord r : records) {
        const auto cols = columns(r);
        for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << format_double(*cols[i]);
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<DiagnosticsRecord> read_timeseries(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != timeseries_header())
        throw ParseError(path.string() + ": header does not match the timeseries schema", 1);
    std::vector<DiagnosticsRecord> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        DiagnosticsRecord r;
        const auto cols = columns(r);
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i > 0) {
                if (p == end || *p != ',') throw ParseError(path.string() + ": too few columns", line_no);
                ++p;
            }
            const auto [next, ec] = std::from_chars(p, end, *cols[i]);
            if (ec != std::errc()) throw ParseError(path.string() + ": malformed number in column " + std::to_string(i), line_no);
            p = next;
        }
        if (p != end) throw ParseError(path.string() + ": too many columns", line_no);
        out.push_back(r);
    }
    return out;
}

std::uint32_t crc32_bytes(const void* data, std::size_t size) {
    uLong c = crc32(0L, Z_NULL, 0);
    const auto* bytes = static_cast<const Bytef*>(data);
    while (size > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
        c = crc32(c, bytes, chunk);
        bytes += chunk;
        size -= chunk;
    }
    return static_cast<std::uint32_t>(c);
}

std::uint32_t file_crc32(const fs::path& path) {
    const std::string bytes = slurp(path);
    return crc32_bytes(bytes.data(), bytes.size());
}

std::string hex32(std::uint32_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(8) << std::setfill('0') << v;
    return s.str();
}

fs::path snapshot_sidecar(const fs::path& path) { return fs::path(path.string() + ".json"); }

bool is_snapshot_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    char magic[16] = {};
    in.read(magic, 16);
    return in.gcount() == 16 && std::memcmp(magic, kSnapshotMagic, 16) == 0;
}

void write_snapshot(const State<double>& s, const fs::path& path) {
    validate_state(s);
    const Grid<double>& g = s.grid();
    std::string bytes(kSnapshotMagic, 16);
    nlohmann::ordered_json arrays = nlohmann::ordered_json::array();
    auto add = [&](const std::string& name, const Vector<double>& v) {
        const std::size_t offset = bytes.size();
        append_le(bytes, v);
        arrays.push_back({{"name", name},
                          {"offset", offset},
                          {"count", v.size()},
                          {"crc32", hex32(crc32_bytes(bytes.data() + offset, bytes.size() - offset))}});
    };
    add("theta", s.theta.values);
    for (int c = 0; c < g.dim(); ++c) add("u" + std::to_string(c), s.u[c].values);
    for (int c = 0; c < g.dim(); ++c) add("v" + std::to_string(c), s.v[c].values);

    nlohmann::ordered_json meta;
    meta["format"] = "THERMOFLOW-SNAP1";
    meta["byte_order"] = "little";
    meta["dim"] = g.dim();
    std::vector<long> dims;
    std::vector<double> ext;
    for (int a = 0; a < g.dim(); ++a) {
        dims.push_back(static_cast<long>(g.points(a)));
        ext.push_back(g.length(a));
    }
    meta["dims"] = dims;
    meta["extents"] = ext;
    meta["time"] = s.t;
    meta["arrays"] = arrays;

    {
        auto out = open_out(path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for " + path.string());
    }
    auto side = open_out(snapshot_sidecar(path));
    side << meta.dump(2) << '\n';
    if (!side) throw IoError("write failed for " + snapshot_sidecar(path).string());
}

State<double> read_snapshot(const fs::path& path) {
    const std::string bytes = slurp(path);
    const std::string where = path.string();
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kSnapshotMagic, 16) != 0)
        throw CorruptSnapshot(where + ": missing THERMOFLOW-SNAP1 magic");
    const fs::path side = snapshot_sidecar(path);
    if (!fs::exists(side)) throw CorruptSnapshot(where + ": metadata sidecar " + side.string() + " not found");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(slurp(side));
        const int dim = meta.at("dim").get<int>();
        const auto dims = meta.at("dims").get<std::vector<long>>();
        const auto ext = meta.at("extents").get<std::vector<double>>();
        if (dim < 1 || dim > 3 || static_cast<int>(dims.size()) != dim || static_cast<int>(ext.size()) != dim)
            throw CorruptSnapshot(where + ": sidecar grid description is inconsistent");
        std::array<Index, 3> pts{1, 1, 1};
        std::array<double, 3> len{1, 1, 1};
        for (int a = 0; a < dim; ++a) {
            pts[static_cast<std::size_t>(a)] = dims[static_cast<std::size_t>(a)];
            len[static_cast<std::size_t>(a)] = ext[static_cast<std::size_t>(a)];
        }
        const Grid<double> g(dim, pts, len);
        const auto& arrays = meta.at("arrays");
        const std::size_t expected_arrays = 1 + 2 * static_cast<std::size_t>(dim);
        if (arrays.size() != expected_arrays) throw CorruptSnapshot(where + ": sidecar lists the wrong number of arrays");
        const std::size_t expected_bytes = 16 + expected_arrays * static_cast<std::size_t>(g.size()) * 8;
        if (bytes.size() != expected_bytes)
            throw CorruptSnapshot(where + ": file holds " + std::to_string(bytes.size()) + " bytes, grid " + g.describe() +
                                  " requires " + std::to_string(expected_bytes));
        std::vector<Vector<double>> data;
        for (const auto& a : arrays) {
            const auto offset = a.at("offset").get<std::size_t>();
            const auto count = a.at("count").get<Index>();
            if (count != g.size() || offset + static_cast<std::size_t>(count) * 8 > bytes.size())
                throw CorruptSnapshot(where + ": array " + a.at("name").get<std::string>() +
                                      " does not match the grid size");
            const std::string crc = hex32(crc32_bytes(bytes.data() + offset, static_cast<std::size_t>(count) * 8));
            if (crc != a.at("crc32").get<std::string>())
                throw CorruptSnapshot(where + ": checksum mismatch in array " + a.at("name").get<std::string>());
            data.push_back(read_le(bytes, offset, count));
        }
        std::vector<ScalarField<double>> u, v;
        for (int c = 0; c < dim; ++c) {
            u.emplace_back(g, data[1 + static_cast<std::size_t>(c)], BoundaryTag::DirichletZero);
            v.emplace_back(g, data[1 + static_cast<std::size_t>(dim + c)], BoundaryTag::DirichletZero);
        }
        State<double> s{meta.at("time").get<double>(), VectorField<double>(std::move(u)),
                        VectorField<double>(std::move(v)), ScalarField<double>(g, data[0], BoundaryTag::NeumannZero)};
        validate_state(s);
        return s;
    } catch (const CorruptSnapshot&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptSnapshot(where + ": unreadable sidecar: " + e.what());
    } catch (const Error& e) {
        throw CorruptSnapshot(where + ": " + e.what());
    }
}

void RunManifest::collect_files(const fs::path& dir) {
    files.clear();
    std::vector<fs::path> paths;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "manifest.json") paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths)
        files.push_back({fs::relative(p, dir).generic_string(), fs::file_size(p), hex32(file_crc32(p))});
}

nlohmann::ordered_json report_json(const CheckReport& r) {
    return {{"name", r.name},
            {"passed", r.passed},
            {"indeterminate", r.indeterminate},
            {"measured", r.measured},
            {"threshold", r.threshold},
            {"direction", r.direction == CheckDirection::UpperBound ? "upper" : "lower"},
            {"details", r.details}};
}

nlohmann::ordered_json RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["code_version"] = code_version;
    j["start_time"] = start_time;
    j["end_time"] = end_time;
    j["config"] = config;
    j["files"] = nlohmann::ordered_json::array();
    for (const auto& f : files) j["files"].push_back({{"path", f.path}, {"bytes", f.bytes}, {"crc32", f.crc32}});
    j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : checks) j["checks"].push_back(report_json(c));
    return j;
}

void RunManifest::write(const fs::path& path) const {
    auto out = open_out(path);
    out << to_json().dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace thermoflow
