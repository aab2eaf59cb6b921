#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "thermoflow/config.hpp"
#include "thermoflow/verify.hpp"

namespace thermoflow {

using ProgressLog = std::function<void(const std::string&)>;

struct SuiteOptions {
    RunConfig scenario = reference_config();
    std::uint64_t seed = 1;
    long fisher_samples = 100;
    Index fisher_points = 33;
    double balance_horizon = 10;
    double agreement_horizon = 5;
    double stability_horizon = 1;
    double stability_amplitude = 1e-3;
};

const std::vector<std::string>& suite_names();

// The scenario with one heat formulation and end time, recording every step.
SimConfig scenario_config(const RunConfig& scenario, HeatForm form, double t_end, long record_every = 1);

// Adds amplitude * cos(pi x / L) along the first axis to the temperature.
State<double> perturb_temperature(const State<double>& s, double amplitude);

std::vector<CheckReport> balance_suite(const SuiteOptions& opt, const ProgressLog& log = {});
std::vector<CheckReport> inequality_suite(const SuiteOptions& opt, const ProgressLog& log = {});
std::vector<CheckReport> asymptotics_suite(const SuiteOptions& opt, const ProgressLog& log = {});
std::vector<CheckReport> stability_suite(const SuiteOptions& opt, const ProgressLog& log = {});

// name is one of suite_names() or "all".
std::vector<CheckReport> run_suite(std::string_view name, const SuiteOptions& opt, const ProgressLog& log = {});

}  // namespace thermoflow
