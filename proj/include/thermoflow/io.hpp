#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermoflow/diagnostics.hpp"
#include "thermoflow/verify.hpp"

namespace thermoflow {

inline constexpr const char* kVersion = "thermoflow 0.1.0";
inline constexpr const char kSnapshotMagic[17] = "THERMOFLOW-SNAP1";

// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

const std::string& timeseries_header();
void write_timeseries(const std::vector<DiagnosticsRecord>& records, const std::filesystem::path& path);
std::vector<DiagnosticsRecord> read_timeseries(const std::filesystem::path& path);

// Binary layout: 16-byte magic, then little-endian float64 arrays
// theta, u_0..u_{d-1}, v_0..v_{d-1} in grid order. Metadata (grid, time,
// per-array CRC-32) lives in the sidecar `<path>.json`.
void write_snapshot(const State<double>& s, const std::filesystem::path& path);
State<double> read_snapshot(const std::filesystem::path& path);
std::filesystem::path snapshot_sidecar(const std::filesystem::path& path);
bool is_snapshot_file(const std::filesystem::path& path);

std::uint32_t crc32_bytes(const void* data, std::size_t size);
std::uint32_t file_crc32(const std::filesystem::path& path);
std::string hex32(std::uint32_t v);

struct ManifestFile {
    std::string path;  // relative to the run directory
    std::uintmax_t bytes = 0;
    std::string crc32;
};

struct RunManifest {
    nlohmann::ordered_json config;
    std::string code_version = kVersion;
    std::string start_time;
    std::string end_time;
    std::vector<ManifestFile> files;
    std::vector<CheckReport> checks;

    // Lists every regular file under dir except the manifest itself.
    void collect_files(const std::filesystem::path& dir);
    nlohmann::ordered_json to_json() const;
    void write(const std::filesystem::path& path) const;
};

nlohmann::ordered_json report_json(const CheckReport& r);
std::string utc_timestamp();

}  // namespace thermoflow
