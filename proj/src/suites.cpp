#include "thermoflow/suites.hpp"

#include "thermoflow/io.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace thermoflow {

namespace {

void say(const ProgressLog& log, const std::string& msg) {
    if (log) log(msg);
}

// Two independent trajectories, run concurrently when threads allow.
std::array<Trajectory<double>, 2> simulate_pair(const State<double>& init, const SimConfig& a, const SimConfig& b) {
    std::array<std::optional<Trajectory<double>>, 2> out;
    parallel_for(2, [&](long i) { out[static_cast<std::size_t>(i)] = simulate(init, i == 0 ? a : b); });
    return {std::move(*out[0]), std::move(*out[1])};
}

CheckReport ratio_report(std::string name, double coarse, double fine, double minimum, const std::string& what) {
    std::ostringstream d;
    d << what << " " << detail::sci(coarse) << " at dt, " << detail::sci(fine) << " at dt/2";
    // Both at rounding level: nothing left to converge.
    if (coarse < 1e-13 && fine < 1e-13) {
        CheckReport r = make_report(std::move(name), 0, minimum, d.str() + "; both at rounding level",
                                    CheckDirection::LowerBound);
        r.passed = true;
        r.indeterminate = true;
        return r;
    }
    const double ratio = fine > 0 ? coarse / fine : std::numeric_limits<double>::infinity();
    d << ", ratio " << ratio << " (order " << std::log2(ratio) << ")";
    return make_report(std::move(name), ratio, minimum, d.str(), CheckDirection::LowerBound);
}

double run_horizon(const RunConfig& sc, double cap) { return sc.sim.t_end > 0 ? std::min(cap, sc.sim.t_end) : cap; }

}  // namespace

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"balance", "inequality", "asymptotics", "stability"};
    return names;
}

SimConfig scenario_config(const RunConfig& scenario, HeatForm form, double t_end, long record_every) {
    SimConfig c = scenario.sim;
    c.heat_form = form;
    c.t_end = t_end;
    c.record_every = record_every;
    return c;
}

State<double> perturb_temperature(const State<double>& s, double amplitude) {
    State<double> out = s;
    const Grid<double>& g = s.grid();
    const double L = g.length(0);
    for (Index p = 0; p < g.size(); ++p)
        out.theta[p] += amplitude * std::cos(std::numbers::pi * g.position(p)[0] / L);
    validate_state(out);
    return out;
}

std::vector<CheckReport> balance_suite(const SuiteOptions& opt, const ProgressLog& log) {
    const RunConfig& sc = opt.scenario;
    const double T = run_horizon(sc, opt.balance_horizon);
    std::vector<CheckReport> out;

    say(log, "balance: energy, ThetaForm on [0, " + format_double(T) + "] at dt and dt/2");
    SimConfig a = scenario_config(sc, HeatForm::ThetaForm, T);
    SimConfig b = a;
    b.dt = a.dt / 2;
    b.record_every = 2;
    auto theta = simulate_pair(sc.initial, a, b);
    const CheckReport e_coarse = check_energy_balance(theta[0].records, default_energy_threshold(T));
    const CheckReport e_fine = check_energy_balance(theta[1].records, default_energy_threshold(T));
    out.push_back(e_coarse);
    out.push_back(ratio_report("energy_order", e_coarse.measured, e_fine.measured, 3.5, "energy drift"));

    say(log, "balance: entropy, TauForm on [0, " + format_double(T) + "] at dt and dt/2");
    a.heat_form = b.heat_form = HeatForm::TauForm;
    auto tau = simulate_pair(sc.initial, a, b);
    const auto s_coarse = check_entropy_balance(tau[0].records, 1e-4);
    const auto s_fine = check_entropy_balance(tau[1].records, 1e-4);
    out.push_back(s_coarse.monotonicity);
    out.push_back(s_fine.monotonicity);
    out.back().name = "entropy_monotonicity_half_dt";
    out.push_back(s_coarse.balance);
    out.push_back(ratio_report("entropy_balance_order", s_coarse.balance.measured, s_fine.balance.measured, 3.5,
                               "entropy balance residual"));

    if (sc.grid.interior_size() >= 4) {
        say(log, "balance: Galerkin energy with 4 modes");
        SimConfig g = scenario_config(sc, HeatForm::ThetaForm, T);
        g.galerkin_modes = 4;
        CheckReport r = check_energy_balance(simulate(sc.initial, g).records, default_energy_threshold(T));
        r.name = "galerkin_energy_balance";
        out.push_back(r);
    }
    return out;
}

std::vector<CheckReport> inequality_suite(const SuiteOptions& opt, const ProgressLog& log) {
    const auto grid = Grid<double>::cube(3, opt.fisher_points);
    say(log, "inequality: " + std::to_string(opt.fisher_samples) + " random fields on " + grid.describe());
    const auto ens = fisher_hessian_ensemble(grid, opt.fisher_samples, opt.seed);
    std::vector<CheckReport> out;
    CheckReport r = make_report("fisher_hessian_ensemble", ens.max_ratio, kFisherHessianConstant + 0.05,
                                "max ratio over " + std::to_string(opt.fisher_samples) + " samples (seed " +
                                    std::to_string(opt.seed) + ") at sample " + std::to_string(ens.worst_sample));
    r.passed = r.passed && ens.passed();
    out.push_back(r);

    const double eps = 1e-3;
    const auto phi = ScalarField<double>::sample(
        grid,
        [&](const std::array<double, 3>& x) {
            const double pi = std::numbers::pi;
            return 1.0 + eps * std::cos(pi * x[0]) * std::cos(pi * x[1]) * std::cos(pi * x[2]);
        },
        BoundaryTag::NeumannZero);
    CheckReport lim = check_fisher_hessian_inequality(phi, 0.0);
    lim.name = "fisher_hessian_small_perturbation";
    lim.threshold = 2.2411;
    lim.passed = lim.measured <= lim.threshold;
    out.push_back(lim);
    return out;
}

std::vector<CheckReport> asymptotics_suite(const SuiteOptions& opt, const ProgressLog& log) {
    const RunConfig& sc = opt.scenario;
    const double T = sc.sim.t_end;
    const long steps = std::max(1L, step_count(scenario_config(sc, HeatForm::ThetaForm, T)));
    const long every = std::max(1L, std::min(sc.sim.record_every, steps / 20));
    say(log, "asymptotics: both formulations on [0, " + format_double(T) + "]");
    const SimConfig a = scenario_config(sc, HeatForm::ThetaForm, T, every);
    const SimConfig b = scenario_config(sc, HeatForm::TauForm, T, every);
    auto runs = simulate_pair(sc.initial, a, b);
    const auto prediction = predicted_equilibrium(sc.initial);

    std::vector<CheckReport> out;
    out.push_back(check_convergence_to_equilibrium(runs[0].records, runs[0].final_state, prediction));
    out.push_back(check_boundedness(runs[0].records));
    CheckReport p_theta = check_positivity(runs[0].records);
    p_theta.name = "positivity_theta_form";
    out.push_back(p_theta);
    CheckReport p_tau = check_positivity(runs[1].records);
    p_tau.name = "positivity_tau_form";
    out.push_back(p_tau);
    const auto ent = check_entropy_balance(runs[0].records, std::numeric_limits<double>::infinity());
    out.push_back(make_report("entropy_production_tail", ent.tail_fraction, 0.01,
                              "share of cumulative production " + detail::sci(ent.cumulative_production) +
                                  " arriving in the last 10% of the run"));
    return out;
}

std::vector<CheckReport> stability_suite(const SuiteOptions& opt, const ProgressLog& log) {
    const RunConfig& sc = opt.scenario;
    std::vector<CheckReport> out;
    say(log, "stability: paired runs to t = " + format_double(opt.stability_horizon));
    const SimConfig cfg = scenario_config(sc, sc.sim.heat_form, opt.stability_horizon, 10);
    const State<double> b = perturb_temperature(sc.initial, opt.stability_amplitude);
    out.push_back(check_stability(cfg, sc.initial, b, opt.stability_horizon).report);

    const double T = run_horizon(sc, opt.agreement_horizon);
    say(log, "stability: ThetaForm vs TauForm on [0, " + format_double(T) + "]");
    out.push_back(check_formulation_agreement(scenario_config(sc, HeatForm::ThetaForm, T), sc.initial, T));
    return out;
}

std::vector<CheckReport> run_suite(std::string_view name, const SuiteOptions& opt, const ProgressLog& log) {
    if (name == "balance") return balance_suite(opt, log);
    if (name == "inequality") return inequality_suite(opt, log);
    if (name == "asymptotics") return asymptotics_suite(opt, log);
    if (name == "stability") return stability_suite(opt, log);
    if (name == "all") {
        std::vector<CheckReport> all;
        for (const auto& n : suite_names()) {
            auto part = run_suite(n, opt, log);
            all.insert(all.end(), part.begin(), part.end());
        }
        return all;
    }
    throw InvalidInput("unknown suite '" + std::string(name) + "'");
}

}  // namespace thermoflow
