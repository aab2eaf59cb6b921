#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "thermoflow/diagnostics.hpp"
#include "thermoflow/dynamics.hpp"
#include "thermoflow/parallel.hpp"

namespace thermoflow {

enum class CheckDirection { UpperBound, LowerBound };

/// Outcome of one executable check. For upper-bound checks
/// passed == (measured <= threshold); lower-bound checks flip the comparison.
/// Indeterminate reports (0/0 ratios) are flagged and count as passed.
struct CheckReport {
    std::string name;
    bool passed = false;
    double measured = 0;
    double threshold = 0;
    CheckDirection direction = CheckDirection::UpperBound;
    std::string details;
    bool indeterminate = false;
};

inline CheckReport make_report(std::string name, double measured, double threshold, std::string details,
                               CheckDirection dir = CheckDirection::UpperBound) {
    CheckReport r;
    r.name = std::move(name);
    r.measured = measured;
    r.threshold = threshold;
    r.direction = dir;
    r.details = std::move(details);
    r.passed = dir == CheckDirection::UpperBound ? measured <= threshold : measured >= threshold;
    return r;
}

/// theta_inf = E_0 / |Omega|, the temperature of the rest state every
/// trajectory approaches.
struct EquilibriumPrediction {
    double theta_inf = 0;
    double e0 = 0;
    double omega_measure = 0;
};

template <typename Scalar>
EquilibriumPrediction predicted_equilibrium(const State<Scalar>& init) {
    validate_state(init);
    EquilibriumPrediction p;
    p.e0 = static_cast<double>(total_energy(init));
    p.omega_measure = static_cast<double>(init.grid().measure());
    p.theta_inf = p.e0 / p.omega_measure;
    return p;
}

namespace detail {
inline std::string sci(double x) {
    std::ostringstream s;
    s.precision(3);
    s << std::scientific << x;
    return s.str();
}

inline void require_records(const std::vector<DiagnosticsRecord>& traj, std::size_t n, const char* where) {
    if (traj.size() < n)
        throw InvalidInput(std::string(where) + ": need at least " + std::to_string(n) + " records");
}
}  // namespace detail

/// max_k |E(t_k) - E(t_0)| / |E(t_0)|.
inline CheckReport check_energy_balance(const std::vector<DiagnosticsRecord>& traj, double threshold) {
    detail::require_records(traj, 2, "check_energy_balance");
    const double e0 = traj.front().energy;
    double drift = 0;
    double at = traj.front().t;
    for (const auto& r : traj) {
        const double d = std::abs(r.energy - e0) / std::abs(e0);
        if (d > drift) {
            drift = d;
            at = r.t;
        }
    }
    return make_report("energy_balance", drift, threshold,
                       "max relative drift " + detail::sci(drift) + " at t = " + std::to_string(at));
}

// Default drift allowance: 1e-5 per unit of simulated time.
inline double default_energy_threshold(double t_end) { return 1e-5 * std::max(t_end, 1.0); }

struct EntropyBalanceReport {
    CheckReport monotonicity;  // largest per-record entropy decrease
    CheckReport balance;       // |S(T) - S(0) - trapezoid(production)|
    double cumulative_production = 0;
    double tail_fraction = 0;  // share of the production arriving in the last 10% of the run

    bool passed() const { return monotonicity.passed && balance.passed; }
};

inline EntropyBalanceReport check_entropy_balance(const std::vector<DiagnosticsRecord>& traj, double balance_tol,
                                                  double decrease_tol = 1e-10) {
    detail::require_records(traj, 2, "check_entropy_balance");
    double worst_decrease = 0;
    double integral = 0;
    const double t_tail = traj.front().t + 0.9 * (traj.back().t - traj.front().t);
    double tail = 0;
    for (std::size_t k = 1; k < traj.size(); ++k) {
        const auto& a = traj[k - 1];
        const auto& b = traj[k];
        worst_decrease = std::max(worst_decrease, a.entropy - b.entropy);
        const double piece = 0.5 * (b.t - a.t) * (a.entropy_production + b.entropy_production);
        integral += piece;
        if (a.t >= t_tail) tail += piece;
    }
    const double change = traj.back().entropy - traj.front().entropy;
    const double residual = std::abs(change - integral);
    EntropyBalanceReport out;
    out.monotonicity = make_report("entropy_monotonicity", worst_decrease, decrease_tol,
                                   "largest entropy decrease between records " + detail::sci(worst_decrease));
    out.balance = make_report("entropy_balance", residual, balance_tol,
                              "dS = " + detail::sci(change) + ", integrated production = " + detail::sci(integral));
    out.cumulative_production = integral;
    out.tail_fraction = integral > 0 ? tail / integral : 0.0;
    return out;
}

// (11 + 4 sqrt 3) / 8, the constant bounding int |D^2 sqrt(phi)|^2 by int phi |D^2 log phi|^2.
inline constexpr double kFisherHessianConstant = (11.0 + 4.0 * std::numbers::sqrt3) / 8.0;

template <typename Scalar>
struct FisherHessianTerms {
    Scalar sqrt_hessian = 0;      // int |D^2 sqrt(phi)|^2
    Scalar weighted_log_hessian = 0;  // int phi |D^2 log phi|^2
};

template <typename Scalar>
FisherHessianTerms<Scalar> fisher_hessian_terms(const ScalarField<Scalar>& phi) {
    if (phi.bc != BoundaryTag::NeumannZero) throw InvalidInput("fisher_hessian: NeumannZero field required");
    detail::require_positive(phi, "fisher_hessian");
    const ScalarField<Scalar> root(phi.grid, phi.values.array().sqrt().matrix(), BoundaryTag::NeumannZero);
    const ScalarField<Scalar> logp(phi.grid, phi.values.unaryExpr([](Scalar x) { return std::log(x); }),
                                   BoundaryTag::NeumannZero);
    const auto& w = phi.grid.weights();
    FisherHessianTerms<Scalar> t;
    t.sqrt_hessian = w.dot(hessian_norm_squared(root));
    t.weighted_log_hessian = w.dot(hessian_norm_squared(logp).cwiseProduct(phi.values));
    return t;
}

/// Ratio int |D^2 sqrt(phi)|^2 / int phi |D^2 log phi|^2 against the constant
/// plus a stencil allowance. Only asserted in 3D; lower dimensions report.
template <typename Scalar>
CheckReport check_fisher_hessian_inequality(const ScalarField<Scalar>& phi, double allowance = 0.05) {
    const auto terms = fisher_hessian_terms(phi);
    const double num = static_cast<double>(terms.sqrt_hessian);
    const double den = static_cast<double>(terms.weighted_log_hessian);
    const double threshold = kFisherHessianConstant + allowance;
    const double scale = static_cast<double>(phi.values.cwiseAbs().maxCoeff());
    if (den <= 1e-28 * scale * scale && num <= 1e-28 * scale * scale) {
        CheckReport r = make_report("fisher_hessian", 0.0, threshold, "both integrals vanish; ratio indeterminate");
        r.indeterminate = true;
        r.passed = true;
        return r;
    }
    const double ratio = num / den;
    CheckReport r = make_report("fisher_hessian", ratio, threshold,
                                "ratio " + std::to_string(ratio) + " vs " + std::to_string(kFisherHessianConstant) +
                                    " + allowance " + std::to_string(allowance));
    if (phi.grid.dim() != 3) {
        r.passed = true;
        r.details += "; not asserted outside 3D";
    }
    return r;
}

/// phi = exp(g), g a random cosine polynomial with wavenumbers 0..max_wavenumber
/// per axis (the constant mode excluded). Cosines make phi Neumann-compatible.
template <typename Scalar>
ScalarField<Scalar> random_neumann_field(const Grid<Scalar>& grid, std::uint64_t seed, double amplitude = 0.5,
                                         int max_wavenumber = 3) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const int kmax = max_wavenumber;
    const int ky = grid.dim() > 1 ? kmax : 0;
    const int kz = grid.dim() > 2 ? kmax : 0;
    struct Mode {
        int k[3];
        double c;
    };
    std::vector<Mode> modes;
    for (int a = 0; a <= kmax; ++a)
        for (int b = 0; b <= ky; ++b)
            for (int c = 0; c <= kz; ++c) {
                if (a == 0 && b == 0 && c == 0) continue;
                const double decay = 1.0 + a * a + b * b + c * c;
                modes.push_back({{a, b, c}, amplitude * unit(rng) / decay});
            }
    const double pi = std::numbers::pi;
    return ScalarField<Scalar>::sample(
        grid,
        [&](const std::array<Scalar, 3>& x) {
            double g = 0;
            for (const auto& m : modes) {
                double term = m.c;
                for (int ax = 0; ax < grid.dim(); ++ax)
                    term *= std::cos(m.k[ax] * pi * static_cast<double>(x[static_cast<std::size_t>(ax)]) /
                                     static_cast<double>(grid.length(ax)));
                g += term;
            }
            return static_cast<Scalar>(std::exp(g));
        },
        BoundaryTag::NeumannZero);
}

struct FisherEnsembleResult {
    std::vector<CheckReport> samples;
    double max_ratio = 0;
    long worst_sample = -1;

    bool passed() const {
        for (const auto& s : samples)
            if (!s.passed) return false;
        return true;
    }
};

/// Evaluates the Fisher-Hessian ratio over `count` random fields; sample i is
/// seeded with seed + i, so results do not depend on the thread count.
template <typename Scalar>
FisherEnsembleResult fisher_hessian_ensemble(const Grid<Scalar>& grid, long count, std::uint64_t seed,
                                             double allowance = 0.05, double amplitude = 0.5) {
    FisherEnsembleResult out;
    out.samples.resize(static_cast<std::size_t>(count));
    parallel_for(count, [&](long i) {
        const auto phi = random_neumann_field(grid, seed + static_cast<std::uint64_t>(i), amplitude);
        out.samples[static_cast<std::size_t>(i)] = check_fisher_hessian_inequality(phi, allowance);
    });
    for (long i = 0; i < count; ++i) {
        const double m = out.samples[static_cast<std::size_t>(i)].measured;
        if (m > out.max_ratio) {
            out.max_ratio = m;
            out.worst_sample = i;
        }
    }
    return out;
}

namespace detail {
inline bool in_second_half(const DiagnosticsRecord& r, double t_mid) { return r.t > t_mid; }
}  // namespace detail

/// Stabilisation of the boundedness ladder: for theta_max, every L^p norm and
/// the higher-order functional, sup over the second half of the run must not
/// exceed 1.05 x sup over the first half; theta_min must stay positive.
/// measured is the worst second/first ratio (infinite on a positivity failure).
inline CheckReport check_boundedness(const std::vector<DiagnosticsRecord>& traj, double growth_allowance = 1.05) {
    detail::require_records(traj, 2, "check_boundedness");
    const double t_mid = 0.5 * (traj.front().t + traj.back().t);
    struct Series {
        std::string name;
        double first = -std::numeric_limits<double>::infinity();
        double second = -std::numeric_limits<double>::infinity();
    };
    std::vector<Series> series{{"theta_max"}, {"higher_functional"}};
    for (int m = 1; m <= kLadderDepth; ++m) series.push_back({"lp_" + std::to_string(1 << m)});
    double inf_theta = std::numeric_limits<double>::infinity();
    double inf_at = traj.front().t;
    for (const auto& r : traj) {
        std::vector<double> vals{r.theta_max, r.higher_functional};
        for (double lp : r.lp_norms) vals.push_back(lp);
        const bool late = detail::in_second_half(r, t_mid);
        for (std::size_t i = 0; i < series.size(); ++i) {
            double& slot = late ? series[i].second : series[i].first;
            slot = std::max(slot, vals[i]);
        }
        if (r.theta_min < inf_theta) {
            inf_theta = r.theta_min;
            inf_at = r.t;
        }
    }
    double worst = 0;
    std::string worst_name;
    std::ostringstream details;
    for (const auto& s : series) {
        // A vanishing first-half sup (e.g. a zero functional at rest) with a
        // vanishing second half counts as stable.
        double ratio;
        if (s.second <= 0 && s.first <= 0)
            ratio = 0;
        else if (s.first <= 0)
            ratio = std::numeric_limits<double>::infinity();
        else
            ratio = s.second / s.first;
        details << s.name << " sup " << detail::sci(std::max(s.first, s.second)) << " (late/early " << ratio << "); ";
        if (ratio > worst || worst_name.empty()) {
            worst = ratio;
            worst_name = s.name;
        }
    }
    details << "inf theta_min " << inf_theta << " at t = " << inf_at << "; worst " << worst_name;
    if (!(inf_theta > 0)) {
        details << "; VIOLATION: theta_min reached " << inf_theta << " at t = " << inf_at;
        worst = std::numeric_limits<double>::infinity();
    }
    return make_report("boundedness", worst, growth_allowance, details.str());
}

/// Positivity plateau: theta_min > 0 at every record, and over the second half
/// of the run theta_min varies by at most `plateau_tol` relative to its minimum.
inline CheckReport check_positivity(const std::vector<DiagnosticsRecord>& traj, double plateau_tol = 0.05) {
    detail::require_records(traj, 2, "check_positivity");
    const double t_mid = 0.5 * (traj.front().t + traj.back().t);
    double inf_all = std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& r : traj) {
        inf_all = std::min(inf_all, r.theta_min);
        if (detail::in_second_half(r, t_mid)) {
            lo = std::min(lo, r.theta_min);
            hi = std::max(hi, r.theta_min);
        }
    }
    double variation = lo > 0 ? (hi - lo) / lo : std::numeric_limits<double>::infinity();
    if (!(inf_all > 0)) variation = std::numeric_limits<double>::infinity();
    std::ostringstream d;
    d << "inf theta_min " << inf_all << ", late plateau theta* = " << lo << ", late variation " << detail::sci(variation);
    return make_report("positivity", variation, plateau_tol, d.str());
}

struct ConvergenceThresholds {
    double u_h1 = 1e-3;
    double v_h1 = 1e-3;
    double theta_rel = 1e-3;
    int windows = 10;
};

/// Final-time distance to the predicted rest state, plus a windowed-envelope
/// decrease test: the maxima of u_h1, v_h1 and the relative sup deviation of
/// theta from theta_inf over consecutive windows must not increase.
/// measured = max of the three final values scaled by their thresholds; it is
/// set to infinity when an envelope increases.
template <typename Scalar>
CheckReport check_convergence_to_equilibrium(const std::vector<DiagnosticsRecord>& traj,
                                             const State<Scalar>& final_state,
                                             const EquilibriumPrediction& prediction,
                                             const ConvergenceThresholds& thr = {}) {
    detail::require_records(traj, 10, "check_convergence_to_equilibrium");
    const double u_final = static_cast<double>(h1_norm(final_state.u));
    const double v_final = static_cast<double>(h1_norm(final_state.v));
    const ScalarField<Scalar> dev(final_state.theta.grid,
                                  (final_state.theta.values.array() - static_cast<Scalar>(prediction.theta_inf)).matrix(),
                                  BoundaryTag::NeumannZero);
    const double theta_final = static_cast<double>(l2_norm(dev)) / prediction.theta_inf;

    const int windows = std::max(2, std::min<int>(thr.windows, static_cast<int>(traj.size())));
    const std::size_t per = traj.size() / static_cast<std::size_t>(windows);
    std::vector<std::array<double, 3>> env(static_cast<std::size_t>(windows), {0, 0, 0});
    std::vector<double> centre(static_cast<std::size_t>(windows), 0);
    for (int w = 0; w < windows; ++w) {
        const std::size_t begin = static_cast<std::size_t>(w) * per;
        const std::size_t end = w + 1 == windows ? traj.size() : begin + per;
        for (std::size_t k = begin; k < end; ++k) {
            const auto& r = traj[k];
            const double theta_dev =
                std::max(std::abs(r.theta_max - prediction.theta_inf), std::abs(r.theta_min - prediction.theta_inf)) /
                prediction.theta_inf;
            auto& e = env[static_cast<std::size_t>(w)];
            e[0] = std::max(e[0], r.u_h1);
            e[1] = std::max(e[1], r.v_h1);
            e[2] = std::max(e[2], theta_dev);
        }
        centre[static_cast<std::size_t>(w)] = 0.5 * (traj[begin].t + traj[end - 1].t);
    }
    bool envelope_ok = true;
    std::string envelope_note;
    const char* names[3] = {"u_h1", "v_h1", "theta"};
    for (std::size_t w = 1; w < env.size(); ++w)
        for (int q = 0; q < 3; ++q)
            if (env[w][q] > env[w - 1][q] * (1 + 1e-9) + 1e-13 && envelope_ok) {
                envelope_ok = false;
                envelope_note = std::string("; envelope of ") + names[q] + " increases in window " + std::to_string(w);
            }

    // Least-squares exponential rate of the v_h1 envelope, reported only.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int used = 0;
    for (std::size_t w = 0; w < env.size(); ++w) {
        if (env[w][1] <= 0) continue;
        const double x = centre[w], y = std::log(env[w][1]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
        ++used;
    }
    double rate = 0;
    if (used >= 2 && used * sxx - sx * sx > 0) rate = -(used * sxy - sx * sy) / (used * sxx - sx * sx);

    const double measured =
        std::max({u_final / thr.u_h1, v_final / thr.v_h1, theta_final / thr.theta_rel});
    std::ostringstream d;
    d << "final u_h1 " << detail::sci(u_final) << ", v_h1 " << detail::sci(v_final) << ", |theta - theta_inf|/theta_inf "
      << detail::sci(theta_final) << ", theta_inf " << prediction.theta_inf << ", fitted v_h1 decay rate " << rate
      << envelope_note;
    return make_report("convergence_to_equilibrium", envelope_ok ? measured : std::numeric_limits<double>::infinity(),
                       1.0, d.str());
}

template <typename Scalar>
double perturbation_distance(const State<Scalar>& a, const State<Scalar>& b) {
    const ScalarField<Scalar> dtheta = a.theta - b.theta;
    return static_cast<double>(h1_norm(a.u - b.u) + h1_norm(a.v - b.v) + l2_norm(dtheta));
}

struct StabilityReport {
    CheckReport report;
    double growth_full = 0;  // max_t d(t)/d(0) for (a, b)
    double growth_half = 0;  // same for (a, a + (b - a)/2)
    double final_full = 0;   // d(horizon)/d(0) for (a, b)
    double final_half = 0;
};

/// Runs a, b and the half-way state c = a + (b - a)/2 to `horizon` in lockstep
/// and compares the growth factors max_t d(t)/d(0). The check passes when both
/// are finite and differ by less than 10% (linear response).
template <typename Scalar>
StabilityReport check_stability(const SimConfig& cfg, const State<Scalar>& init_a, const State<Scalar>& init_b,
                                double horizon, double tolerance = 0.10) {
    validate_state(init_a);
    validate_state(init_b);
    if (init_a.grid() != init_b.grid()) throw InvalidInput("check_stability: initial states on different grids");
    const double d0 = perturbation_distance(init_a, init_b);
    if (!(d0 > 0))
        throw InvalidInput("check_stability: identical initial data is degenerate; use a uniqueness check instead");

    State<Scalar> init_c = init_a;
    init_c.u = init_a.u + Scalar(0.5) * (init_b.u - init_a.u);
    init_c.v = init_a.v + Scalar(0.5) * (init_b.v - init_a.v);
    init_c.theta = init_a.theta + Scalar(0.5) * (init_b.theta - init_a.theta);

    SimConfig run_cfg = cfg;
    run_cfg.t_end = horizon;
    CoupledStepper<Scalar> sa(init_a.grid(), run_cfg), sb(init_a.grid(), run_cfg), sc(init_a.grid(), run_cfg);
    State<Scalar> a = sa.project(init_a), b = sb.project(init_b), c = sc.project(init_c);
    const double dab0 = perturbation_distance(a, b);
    const double dac0 = perturbation_distance(a, c);
    if (!(dab0 > 0) || !(dac0 > 0)) throw InvalidInput("check_stability: perturbation vanishes after projection");
    double g_ab = 1, g_ac = 1, f_ab = 1, f_ac = 1;
    const long steps = step_count(run_cfg);
    for (long k = 1; k <= steps; ++k) {
        const double t_next = std::min(static_cast<double>(k) * run_cfg.dt, horizon);
        const double h = t_next - (static_cast<double>(k - 1) * run_cfg.dt);
        a = sa.step(a, h);
        b = sb.step(b, h);
        c = sc.step(c, h);
        if (k % run_cfg.record_every == 0 || k == steps) {
            f_ab = perturbation_distance(a, b) / dab0;
            f_ac = perturbation_distance(a, c) / dac0;
            g_ab = std::max(g_ab, f_ab);
            g_ac = std::max(g_ac, f_ac);
        }
    }
    StabilityReport out;
    out.growth_full = g_ab;
    out.growth_half = g_ac;
    out.final_full = f_ab;
    out.final_half = f_ac;
    double change = std::abs(g_ab - g_ac) / g_ab;
    if (!std::isfinite(g_ab) || !std::isfinite(g_ac)) change = std::numeric_limits<double>::infinity();
    std::ostringstream d;
    d << "growth factor " << g_ab << " (d0 = " << detail::sci(dab0) << "), " << g_ac << " at half perturbation; final d/d0 "
      << f_ab << ", " << f_ac << " at half perturbation";
    out.report = make_report("stability", change, tolerance, d.str());
    return out;
}

/// Proxy for uniqueness: sup over records of ||theta_ThetaForm - theta_TauForm||_inf
/// from identical data on [0, horizon], at dt and dt/2. First-order schemes
/// differ at O(dt), so the distance should halve; passes when the ratio is
/// within `tolerance` (relative) of 2.
template <typename Scalar>
CheckReport check_formulation_agreement(const SimConfig& cfg, const State<Scalar>& init, double horizon,
                                        double tolerance = 0.30) {
    auto distance = [&](double dt) {
        SimConfig c = cfg;
        c.dt = dt;
        c.t_end = horizon;
        SimConfig ct = c, cu = c;
        ct.heat_form = HeatForm::ThetaForm;
        cu.heat_form = HeatForm::TauForm;
        CoupledStepper<Scalar> st(init.grid(), ct), su(init.grid(), cu);
        State<Scalar> a = st.project(init), b = su.project(init);
        double sup = 0;
        const long steps = step_count(c);
        // Sample on a fixed time lattice: every cfg.record_every coarse steps.
        const long stride = std::max(1L, std::lround(static_cast<double>(cfg.record_every) * cfg.dt / dt));
        for (long k = 1; k <= steps; ++k) {
            const double t_next = std::min(static_cast<double>(k) * dt, horizon);
            const double h = t_next - static_cast<double>(k - 1) * dt;
            a = st.step(a, h);
            b = su.step(b, h);
            if (k % stride == 0 || k == steps)
                sup = std::max(sup, static_cast<double>((a.theta.values - b.theta.values).cwiseAbs().maxCoeff()));
        }
        return sup;
    };
    const double coarse = distance(cfg.dt);
    const double fine = distance(cfg.dt / 2);
    const double ratio = fine > 0 ? coarse / fine : std::numeric_limits<double>::infinity();
    std::ostringstream d;
    d << "sup distance " << detail::sci(coarse) << " at dt, " << detail::sci(fine) << " at dt/2, ratio " << ratio;
    return make_report("formulation_agreement", std::abs(ratio - 2.0) / 2.0, tolerance, d.str());
}

}  // namespace thermoflow
