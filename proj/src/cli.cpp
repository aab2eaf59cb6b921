#include "thermoflow/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>

#include "thermoflow/suites.hpp"

namespace thermoflow {

namespace fs = std::filesystem;

namespace {

nlohmann::ordered_json config_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json entries;
    for (const auto& e : cfg.entries) entries[e.key] = e.value;
    j["entries"] = entries;
    const Grid<double>& g = cfg.grid;
    std::vector<long> pts;
    std::vector<double> len, h;
    for (int a = 0; a < g.dim(); ++a) {
        pts.push_back(static_cast<long>(g.points(a)));
        len.push_back(g.length(a));
        h.push_back(g.spacing(a));
    }
    j["grid"] = {{"dim", g.dim()}, {"n_points", pts}, {"lengths", len}, {"spacing", h}, {"measure", g.measure()}};
    const SimConfig& s = cfg.sim;
    j["sim"] = {{"mu", s.mu},
                {"dt", s.dt},
                {"t_end", s.t_end},
                {"heat_form", to_string(s.heat_form)},
                {"galerkin_modes", s.galerkin_modes ? nlohmann::ordered_json(*s.galerkin_modes) : nlohmann::ordered_json()},
                {"record_every", s.record_every},
                {"solver_tol", s.solver.rel_tolerance},
                {"coupling_passes", s.coupling_passes}};
    j["seed"] = cfg.seed;
    j["snapshot_every"] = cfg.snapshot_every;
    return j;
}

std::string step_name(long k) {
    std::ostringstream s;
    s << "snapshots/step_" << std::setw(8) << std::setfill('0') << k << ".bin";
    return s.str();
}

void print_field_stats(std::ostream& out, const std::string& name, const ScalarField<double>& f) {
    const double mean = integrate(f) / f.grid.measure();
    out << "  " << std::left << std::setw(6) << name << std::right << " min " << std::setw(13) << f.values.minCoeff()
        << "  max " << std::setw(13) << f.values.maxCoeff() << "  mean " << std::setw(13) << mean << "  L2 "
        << std::setw(13) << l2_norm(f) << '\n';
}

int inspect_snapshot(const fs::path& p, std::ostream& out) {
    const State<double> s = read_snapshot(p);
    out << "snapshot " << p.string() << " (checksums verified)\n";
    out << "  grid " << s.grid().describe() << ", t = " << s.t << '\n';
    print_field_stats(out, "theta", s.theta);
    for (int c = 0; c < s.grid().dim(); ++c) print_field_stats(out, "u" + std::to_string(c), s.u[c]);
    for (int c = 0; c < s.grid().dim(); ++c) print_field_stats(out, "v" + std::to_string(c), s.v[c]);
    const DiagnosticsRecord r = diagnose(s);
    out << "  energy " << format_double(r.energy) << ", entropy " << format_double(r.entropy) << ", u_h1 "
        << format_double(r.u_h1) << ", v_h1 " << format_double(r.v_h1) << '\n';
    out << "  predicted equilibrium temperature " << format_double(predicted_equilibrium(s).theta_inf) << '\n';
    return kExitOk;
}

int inspect_timeseries(const fs::path& p, std::ostream& out) {
    const auto recs = read_timeseries(p);
    out << "timeseries " << p.string() << ": " << recs.size() << " records\n";
    if (recs.empty()) return kExitOk;
    double lo = recs.front().theta_min, hi = recs.front().theta_max, drift = 0;
    for (const auto& r : recs) {
        lo = std::min(lo, r.theta_min);
        hi = std::max(hi, r.theta_max);
        drift = std::max(drift, std::abs(r.energy - recs.front().energy) / std::abs(recs.front().energy));
    }
    out << "  t in [" << format_double(recs.front().t) << ", " << format_double(recs.back().t) << "]\n";
    out << "  energy " << format_double(recs.front().energy) << " -> " << format_double(recs.back().energy)
        << ", max relative drift " << format_double(drift) << '\n';
    out << "  entropy " << format_double(recs.front().entropy) << " -> " << format_double(recs.back().entropy) << '\n';
    out << "  theta range [" << format_double(lo) << ", " << format_double(hi) << "]\n";
    out << "  final u_h1 " << format_double(recs.back().u_h1) << ", v_h1 " << format_double(recs.back().v_h1) << '\n';
    return kExitOk;
}

int inspect_manifest(const fs::path& p, std::ostream& out) {
    std::ifstream in(p);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(p.string() + ": not a readable manifest: " + e.what());
    }
    out << "manifest " << p.string() << " (" << j.value("code_version", "?") << ")\n";
    bool ok = true;
    for (const auto& f : j.at("files")) {
        const fs::path file = p.parent_path() / f.at("path").get<std::string>();
        std::string status = "ok";
        if (!fs::exists(file))
            status = "MISSING";
        else if (hex32(file_crc32(file)) != f.at("crc32").get<std::string>())
            status = "CHECKSUM MISMATCH";
        if (status != "ok") ok = false;
        out << "  " << std::left << std::setw(40) << f.at("path").get<std::string>() << std::right << " " << status
            << '\n';
    }
    for (const auto& c : j.at("checks"))
        out << "  check " << c.at("name").get<std::string>() << ": " << (c.at("passed").get<bool>() ? "pass" : "FAIL")
            << '\n';
    if (!ok) throw CorruptSnapshot(p.string() + ": listed files do not match their checksums");
    return kExitOk;
}

int inspect(const fs::path& p, std::ostream& out) {
    if (!fs::exists(p)) throw IoError("no such file: " + p.string());
    if (is_snapshot_file(p)) return inspect_snapshot(p, out);
    std::ifstream in(p);
    std::string first;
    std::getline(in, first);
    if (first == timeseries_header()) return inspect_timeseries(p, out);
    if (!first.empty() && first.front() == '{') return inspect_manifest(p, out);
    throw CorruptSnapshot(p.string() + ": neither a snapshot, a timeseries nor a manifest");
}

// Usage-level failures: bad command lines, unreadable or invalid configs.
struct UsageError : Error {
    using Error::Error;
};

}  // namespace

RunOutcome run_to_directory(const RunConfig& cfg, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir / "snapshots", ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    RunManifest m;
    m.config = config_json(cfg);
    m.start_time = utc_timestamp();
    std::vector<DiagnosticsRecord> records;
    RunHooks<double> hooks;
    hooks.on_record = [&](const DiagnosticsRecord& r) { records.push_back(r); };
    hooks.on_step = [&](const State<double>& s, long k) {
        if (k == 0)
            write_snapshot(s, out_dir / "snapshots/initial.bin");
        else if (cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0)
            write_snapshot(s, out_dir / step_name(k));
    };
    State<double> final_state = run(cfg.initial, cfg.sim, hooks);
    write_snapshot(final_state, out_dir / "snapshots/final.bin");
    write_timeseries(records, out_dir / "timeseries.csv");

    if (records.size() >= 2) {
        m.checks.push_back(check_energy_balance(records, default_energy_threshold(cfg.sim.t_end)));
        m.checks.push_back(check_entropy_balance(records, std::numeric_limits<double>::infinity()).monotonicity);
    }
    double inf_theta = std::numeric_limits<double>::infinity();
    for (const auto& r : records) inf_theta = std::min(inf_theta, r.theta_min);
    m.checks.push_back(make_report("theta_min_positive", inf_theta, 0.0,
                                   "inf theta_min " + format_double(inf_theta) + " over all records",
                                   CheckDirection::LowerBound));
    m.checks.back().passed = inf_theta > 0;
    m.end_time = utc_timestamp();
    m.collect_files(out_dir);
    m.write(out_dir / "manifest.json");
    return {std::move(m), std::move(final_state)};
}

std::pair<std::string, std::vector<double>> parse_sweep(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidInput("--vary expects key=a:b:n, got '" + spec + "'");
    const std::string key = spec.substr(0, eq);
    std::vector<std::string> parts;
    std::stringstream rest(spec.substr(eq + 1));
    for (std::string p; std::getline(rest, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw InvalidInput("--vary expects key=a:b:n, got '" + spec + "'");
    double a = 0, b = 0;
    long n = 0;
    try {
        std::size_t used = 0;
        a = std::stod(parts[0], &used);
        if (used != parts[0].size()) throw std::invalid_argument("a");
        b = std::stod(parts[1], &used);
        if (used != parts[1].size()) throw std::invalid_argument("b");
        n = std::stol(parts[2], &used);
        if (used != parts[2].size()) throw std::invalid_argument("n");
    } catch (const std::exception&) {
        throw InvalidInput("--vary: a and b must be numbers and n an integer in '" + spec + "'");
    }
    if (n < 1) throw InvalidInput("--vary: n must be >= 1");
    std::vector<double> values;
    for (long i = 0; i < n; ++i)
        values.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    return {key, values};
}

std::string format_report_table(const std::vector<CheckReport>& reports) {
    std::size_t width = 4;
    for (const auto& r : reports) width = std::max(width, r.name.size());
    std::ostringstream s;
    s << std::left << std::setw(static_cast<int>(width)) << "check" << "  result  " << std::setw(12) << "measured"
      << "  " << std::setw(12) << "threshold" << "  details\n";
    for (const auto& r : reports) {
        const char* verdict = r.indeterminate ? "indet " : (r.passed ? "PASS  " : "FAIL  ");
        std::ostringstream m, t;
        m << std::setprecision(5) << r.measured;
        t << (r.direction == CheckDirection::UpperBound ? "<= " : ">= ") << std::setprecision(5) << r.threshold;
        s << std::left << std::setw(static_cast<int>(width)) << r.name << "  " << verdict << "  " << std::setw(12)
          << m.str() << "  " << std::setw(12) << t.str() << "  " << r.details << '\n';
    }
    return s.str();
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"thermoflow: thermoelastic simulator and verification lab", "thermoflow"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", kVersion);

    std::string run_config, run_out;
    auto* run_cmd = app.add_subcommand("run", "simulate one trajectory");
    run_cmd->add_option("--config", run_config, "config file")->required();
    run_cmd->add_option("--out", run_out, "output directory")->required();

    std::string suite = "all", verify_config, verify_report;
    std::uint64_t seed = 1;
    long samples = 100;
    auto* verify_cmd = app.add_subcommand("verify", "run verification suites");
    verify_cmd->add_option("--suite", suite, "balance, inequality, asymptotics, stability or all")
        ->check(CLI::IsMember({"balance", "inequality", "asymptotics", "stability", "all"}));
    verify_cmd->add_option("--config", verify_config, "scenario config (default: the 1D reference scenario)");
    verify_cmd->add_option("--seed", seed, "seed for the random field ensemble");
    verify_cmd->add_option("--samples", samples, "ensemble size for the inequality suite")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--report", verify_report, "write the reports as JSON");

    std::string sweep_config, sweep_out = "sweep", sweep_vary;
    auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep, one run directory per value");
    sweep_cmd->add_option("--config", sweep_config, "base config file")->required();
    sweep_cmd->add_option("--vary", sweep_vary, "key=a:b:n")->required();
    sweep_cmd->add_option("--out", sweep_out, "parent output directory");

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "print statistics of a snapshot, timeseries or manifest");
    inspect_cmd->add_option("--snapshot", inspect_path, "file to inspect")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kExitUsage;
    }

    auto load = [](const std::string& path, const ConfigOverrides& ov = {}) {
        try {
            return load_config(path, ov);
        } catch (const ParseError& e) {
            throw UsageError(e.what());
        } catch (const IoError& e) {
            throw UsageError(e.what());
        }
    };

    try {
        if (*run_cmd) {
            const RunConfig cfg = load(run_config);
            const auto outcome = run_to_directory(cfg, run_out);
            out << "wrote " << outcome.manifest.files.size() << " files to " << run_out << '\n';
            out << format_report_table(outcome.manifest.checks);
            for (const auto& r : outcome.manifest.checks)
                if (!r.passed) return kExitCheckFailed;
            return kExitOk;
        }
        if (*verify_cmd) {
            SuiteOptions opt;
            if (!verify_config.empty()) opt.scenario = load(verify_config);
            opt.seed = seed;
            opt.fisher_samples = samples;
            std::mutex log_mutex;
            const auto reports = run_suite(suite, opt, [&](const std::string& msg) {
                std::lock_guard lock(log_mutex);
                err << "[verify] " << msg << '\n';
            });
            out << format_report_table(reports);
            bool all = true;
            for (const auto& r : reports) all = all && r.passed;
            if (!verify_report.empty()) {
                nlohmann::ordered_json j = nlohmann::ordered_json::array();
                for (const auto& r : reports) j.push_back(report_json(r));
                std::ofstream f(verify_report);
                if (!f) throw IoError("cannot write " + verify_report);
                f << j.dump(2) << '\n';
            }
            out << (all ? "all checks passed\n" : "some checks FAILED\n");
            return all ? kExitOk : kExitCheckFailed;
        }
        if (*sweep_cmd) {
            std::pair<std::string, std::vector<double>> sweep;
            try {
                sweep = parse_sweep(sweep_vary);
            } catch (const InvalidInput& e) {
                throw UsageError(e.what());
            }
            const auto& [key, values] = sweep;
            load(sweep_config, {{key, format_double(values.front())}});  // validates key and first value up front
            std::vector<std::string> dirs(values.size()), failures(values.size());
            parallel_for(static_cast<long>(values.size()), [&](long i) {
                const auto idx = static_cast<std::size_t>(i);
                const std::string v = format_double(values[idx]);
                dirs[idx] = key + "_" + v;
                try {
                    const RunConfig cfg = load(sweep_config, {{key, v}});
                    run_to_directory(cfg, fs::path(sweep_out) / dirs[idx]);
                } catch (const std::exception& e) {
                    failures[idx] = e.what();
                }
            });
            nlohmann::ordered_json summary;
            summary["vary"] = key;
            summary["runs"] = nlohmann::ordered_json::array();
            bool ok = true;
            for (std::size_t i = 0; i < values.size(); ++i) {
                summary["runs"].push_back({{"value", values[i]},
                                           {"directory", dirs[i]},
                                           {"status", failures[i].empty() ? "ok" : failures[i]}});
                out << dirs[i] << ": " << (failures[i].empty() ? "ok" : failures[i]) << '\n';
                ok = ok && failures[i].empty();
            }
            std::ofstream f(fs::path(sweep_out) / "sweep.json");
            f << summary.dump(2) << '\n';
            return ok ? kExitOk : kExitRuntime;
        }
        if (*inspect_cmd) return inspect(inspect_path, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace thermoflow
