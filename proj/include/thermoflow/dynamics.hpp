#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "thermoflow/diagnostics.hpp"
#include "thermoflow/elliptic.hpp"
#include "thermoflow/galerkin.hpp"
#include "thermoflow/operators.hpp"
#include "thermoflow/state.hpp"

// Time integration of
//   u_tt - lap u - lap u_tt = mu grad theta,   u = 0 on the boundary,
//   theta_t - lap theta = mu theta div u_t,    d_n theta = 0 on the boundary.

namespace thermoflow {

template <typename Scalar>
struct MomentumUpdate {
    VectorField<Scalar> u;
    VectorField<Scalar> v;
    VectorField<Scalar> v_mid;         // (v_old + v_new) / 2
    VectorField<Scalar> acceleration;  // (v_new - v_old) / dt
};

namespace detail {

template <typename Scalar>
ScalarField<Scalar> as_dirichlet(Vector<Scalar> values, const Grid<Scalar>& g) {
    ScalarField<Scalar> f(g, std::move(values), BoundaryTag::DirichletZero);
    f.enforce_boundary();
    return f;
}

template <typename Scalar>
ScalarField<Scalar> midpoint(const ScalarField<Scalar>& a, const ScalarField<Scalar>& b) {
    return ScalarField<Scalar>(a.grid, Scalar(0.5) * (a.values + b.values), a.bc);
}

}  // namespace detail

/// Acceleration a with (I - shift lap_D) a = lap_D u_eff + mu grad theta, per
/// component, optionally restricted to a Galerkin subspace.
template <typename Scalar>
VectorField<Scalar> solve_acceleration(const VectorField<Scalar>& u_eff, const ScalarField<Scalar>& theta, double mu,
                                       Scalar shift, const SolverSpec& solver,
                                       const SineProjector<Scalar>* projector = nullptr,
                                       const VectorField<Scalar>* guess = nullptr) {
    const Grid<Scalar>& g = theta.grid;
    VectorField<Scalar> a = VectorField<Scalar>::zeros(g);
    for (int c = 0; c < g.dim(); ++c) {
        Vector<Scalar> rhs = laplacian(u_eff[c]).values;
        if (mu != 0.0) rhs += static_cast<Scalar>(mu) * partial(theta, c).values;
        ScalarField<Scalar> rhs_field = detail::as_dirichlet(std::move(rhs), g);
        if (projector) rhs_field = projector->project(rhs_field);
        a[c] = solve_shifted_dirichlet(rhs_field, shift, solver, guess ? &(*guess)[c] : nullptr);
        if (projector) a[c] = projector->project(a[c]);
    }
    return a;
}

/// Implicit-midpoint update of the momentum equation with the coupling force
/// evaluated at `theta_mid`. With u_mid = (u_old + u_new)/2 and
/// a = (v_new - v_old)/dt, solves (I - lap_D) a = lap_D u_mid + mu grad theta_mid,
/// which after eliminating u_new is a shifted solve with shift 1 + dt^2/4.
/// For mu = 0 it conserves wave_energy up to the solver tolerance.
template <typename Scalar>
MomentumUpdate<Scalar> step_momentum(const State<Scalar>& s, const ScalarField<Scalar>& theta_mid,
                                     const SimConfig& cfg, double dt,
                                     const SineProjector<Scalar>* projector = nullptr,
                                     const VectorField<Scalar>* guess = nullptr) {
    if (!(dt > 0.0)) throw InvalidInput("step_momentum: dt must be positive");
    const Scalar h = static_cast<Scalar>(dt);
    const VectorField<Scalar> u_eff = s.u + (h / Scalar(2)) * s.v;
    const Scalar shift = Scalar(1) + h * h / Scalar(4);
    VectorField<Scalar> a = solve_acceleration(u_eff, theta_mid, cfg.mu, shift, cfg.solver, projector, guess);
    MomentumUpdate<Scalar> out{s.u, s.v, s.v, a};
    out.v_mid = s.v + (h / Scalar(2)) * a;
    out.v = s.v + h * a;
    out.u = s.u + h * out.v_mid;
    return out;
}

template <typename Scalar>
MomentumUpdate<Scalar> step_momentum(const State<Scalar>& s, const ScalarField<Scalar>& theta_mid,
                                     const SimConfig& cfg) {
    return step_momentum(s, theta_mid, cfg, cfg.dt);
}

/// Semi-implicit temperature step:
///   (I - dt lap_N) theta_new = theta_old + dt mu theta_half div_v_mid.
/// Without an explicit `theta_half` the source is predicted by the half-step
/// implicit reaction theta_old / (1 - dt/2 mu div_v_mid).
template <typename Scalar>
ScalarField<Scalar> step_heat_theta(const State<Scalar>& s, const ScalarField<Scalar>& div_v_mid, const SimConfig& cfg,
                                    double dt, const std::type_identity_t<ScalarField<Scalar>>* theta_half = nullptr,
                                    const std::type_identity_t<ScalarField<Scalar>>* guess = nullptr) {
    const Grid<Scalar>& g = s.theta.grid;
    detail::require_same_grid(div_v_mid.grid, g, "step_heat_theta");
    detail::require_positive(s.theta, "step_heat_theta");
    const Scalar h = static_cast<Scalar>(dt);
    const Scalar mu = static_cast<Scalar>(cfg.mu);
    Vector<Scalar> half;
    if (theta_half) {
        half = theta_half->values;
    } else {
        const Vector<Scalar> denom = (Scalar(1) - (h / Scalar(2)) * mu * div_v_mid.values.array()).matrix();
        Index p;
        if (denom.minCoeff(&p) < Scalar(0.1)) {
            std::ostringstream msg;
            msg << "step_heat_theta: source denominator " << static_cast<double>(denom[p]) << " at point " << p
                << " is below 0.1; reduce dt";
            throw TimeStepTooLarge(msg.str());
        }
        half = (s.theta.values.array() / denom.array()).matrix();
    }
    ScalarField<Scalar> rhs(g, s.theta.values + (h * mu) * half.cwiseProduct(div_v_mid.values), BoundaryTag::NeumannZero);
    ScalarField<Scalar> theta_new = solve_implicit_heat(rhs, h, cfg.solver, guess ? guess : &s.theta);
    for (Index p = 0; p < g.size(); ++p) {
        if (!(theta_new[p] > Scalar(0))) {
            const auto x = g.position(p);
            std::ostringstream msg;
            msg << "step_heat_theta: temperature " << static_cast<double>(theta_new[p]) << " at point " << p << " (x = "
                << static_cast<double>(x[0]) << ", " << static_cast<double>(x[1]) << ", " << static_cast<double>(x[2])
                << ") is not positive";
            throw PositivityViolation(msg.str(), p);
        }
    }
    return theta_new;
}

/// Entropy-variable step for tau = log theta:
///   (I - dt lap_N) tau_new = tau_old + dt (|grad tau_ref|^2 + mu div_v_mid),
/// tau_ref = tau_old unless a midpoint estimate is supplied. Returns exp(tau_new).
template <typename Scalar>
ScalarField<Scalar> step_heat_tau(const State<Scalar>& s, const ScalarField<Scalar>& div_v_mid, const SimConfig& cfg,
                                  double dt, const std::type_identity_t<ScalarField<Scalar>>* tau_ref = nullptr,
                                  std::string* warning = nullptr) {
    const Grid<Scalar>& g = s.theta.grid;
    detail::require_same_grid(div_v_mid.grid, g, "step_heat_tau");
    const ScalarField<Scalar> tau_old = log_temperature(s.theta);
    const Scalar h = static_cast<Scalar>(dt);
    const Vector<Scalar> grad_sq = gradient_density(tau_ref ? *tau_ref : tau_old);
    if (warning && h * grad_sq.maxCoeff() > Scalar(0.5)) {
        std::ostringstream msg;
        msg << "step_heat_tau: dt * max|grad tau|^2 = " << static_cast<double>(h * grad_sq.maxCoeff())
            << " exceeds 0.5; explicit gradient term may be unstable";
        *warning = msg.str();
    }
    ScalarField<Scalar> rhs(g, tau_old.values + h * (grad_sq + static_cast<Scalar>(cfg.mu) * div_v_mid.values),
                            BoundaryTag::NeumannZero);
    const ScalarField<Scalar> tau_new = solve_implicit_heat(rhs, h, cfg.solver, tau_ref ? tau_ref : &tau_old);
    Index p;
    if (tau_new.values.maxCoeff(&p) > Scalar(700))
        throw Divergence("step_heat_tau: log temperature exceeds 700 at point " + std::to_string(p));
    return ScalarField<Scalar>(g, tau_new.values.unaryExpr([](Scalar x) { return std::exp(x); }),
                               BoundaryTag::NeumannZero);
}

/// Staggered coupled stepper. Holds the Galerkin projector (when configured),
/// warm-start caches for the iterative solves, and the last TauForm warning.
template <typename Scalar = double>
class CoupledStepper {
public:
    CoupledStepper(const Grid<Scalar>& grid, SimConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        if (cfg_.galerkin_modes) projector_.emplace(grid, static_cast<Index>(*cfg_.galerkin_modes));
    }

    const SimConfig& config() const noexcept { return cfg_; }
    const SineProjector<Scalar>* projector() const { return projector_ ? &*projector_ : nullptr; }
    const std::string& last_warning() const noexcept { return warning_; }
    long warning_count() const noexcept { return warning_count_; }

    // Restricts u and v to the Galerkin subspace; identity without one.
    State<Scalar> project(State<Scalar> s) const {
        if (projector_) {
            s.u = projector_->project(s.u);
            s.v = projector_->project(s.v);
        }
        return s;
    }

    /// One step of size dt:
    ///  (i)   provisional midpoint velocity v + dt/2 a(t) for the heat source,
    ///  (ii)  heat step in the configured formulation,
    ///  (iii) momentum step forced by theta_mid = (theta_old + theta_new)/2,
    ///  repeated coupling_passes times with (ii) re-centred on the previous
    ///  pass's div v_mid and theta_mid (tau_mid for TauForm),
    ///  (iv)  Galerkin projection of u and v when configured.
    State<Scalar> step(const State<Scalar>& s, double dt) {
        const Scalar h = static_cast<Scalar>(dt);
        const SineProjector<Scalar>* proj = projector();

        const VectorField<Scalar> a0 = solve_acceleration(s.u, s.theta, cfg_.mu, Scalar(1), cfg_.solver, proj,
                                                          accel_ ? &*accel_ : nullptr);
        VectorField<Scalar> v_mid = s.v + (h / Scalar(2)) * a0;

        std::optional<ScalarField<Scalar>> theta_new;
        std::optional<ScalarField<Scalar>> centre;  // theta_mid or tau_mid of the previous pass
        std::optional<MomentumUpdate<Scalar>> mom;
        const ScalarField<Scalar> tau_old =
            cfg_.heat_form == HeatForm::TauForm ? log_temperature(s.theta) : s.theta;
        for (int pass = 0; pass < cfg_.coupling_passes; ++pass) {
            const ScalarField<Scalar> div_v = divergence(v_mid);
            const ScalarField<Scalar>* ref = centre ? &*centre : nullptr;
            if (cfg_.heat_form == HeatForm::ThetaForm) {
                theta_new = step_heat_theta(s, div_v, cfg_, dt, ref, theta_new ? &*theta_new : nullptr);
            } else {
                std::string warning;
                theta_new = step_heat_tau(s, div_v, cfg_, dt, ref, &warning);
                if (!warning.empty()) {
                    warning_ = warning;
                    ++warning_count_;
                }
            }
            const ScalarField<Scalar> theta_mid = detail::midpoint(s.theta, *theta_new);
            mom = step_momentum(s, theta_mid, cfg_, dt, proj, mom ? &mom->acceleration : (accel_ ? &*accel_ : nullptr));
            v_mid = mom->v_mid;
            if (cfg_.heat_form == HeatForm::ThetaForm)
                centre = theta_mid;
            else
                centre = detail::midpoint(tau_old, log_temperature(*theta_new));
        }
        accel_ = mom->acceleration;

        State<Scalar> out{s.t + dt, std::move(mom->u), std::move(mom->v), std::move(*theta_new)};
        return project(std::move(out));
    }

private:
    SimConfig cfg_;
    std::optional<SineProjector<Scalar>> projector_;
    std::optional<VectorField<Scalar>> accel_;
    std::string warning_;
    long warning_count_ = 0;
};

template <typename Scalar>
State<Scalar> step_coupled(const State<Scalar>& s, const SimConfig& cfg) {
    CoupledStepper<Scalar> stepper(s.theta.grid, cfg);
    return stepper.step(s, cfg.dt);
}

template <typename Scalar>
struct RunHooks {
    std::function<void(const DiagnosticsRecord&)> on_record;
    std::function<void(const State<Scalar>&, long step)> on_step;  // called for the initial state and after every step
};

/// Number of steps of size dt needed to reach t_end; the last one may be shorter.
inline long step_count(const SimConfig& cfg) {
    const double ratio = cfg.t_end / cfg.dt;
    const long full = static_cast<long>(std::floor(ratio + 1e-9));
    return full + (cfg.t_end - static_cast<double>(full) * cfg.dt > 1e-12 * cfg.dt ? 1 : 0);
}

/// Advances init to t_end, emitting a record at t = 0, every record_every
/// steps and at t_end. With galerkin_modes set the initial u and v are first
/// projected onto the Galerkin subspace.
template <typename Scalar>
State<Scalar> run(const State<Scalar>& init, const SimConfig& cfg, const RunHooks<Scalar>& hooks = {},
                  CoupledStepper<Scalar>* external_stepper = nullptr) {
    validate_state(init);
    std::optional<CoupledStepper<Scalar>> own;
    if (!external_stepper) own.emplace(init.theta.grid, cfg);
    CoupledStepper<Scalar>& stepper = external_stepper ? *external_stepper : *own;

    State<Scalar> s = stepper.project(init);
    const double t0 = s.t;
    const long steps = step_count(cfg);
    if (hooks.on_record) hooks.on_record(diagnose(s));
    if (hooks.on_step) hooks.on_step(s, 0);
    for (long k = 1; k <= steps; ++k) {
        const double t_next = std::min(t0 + static_cast<double>(k) * cfg.dt, t0 + cfg.t_end);
        try {
            s = stepper.step(s, t_next - s.t);
        } catch (Error& e) {
            std::ostringstream ctx;
            ctx << "step " << k << ", t = " << s.t;
            e.add_context(ctx.str());
            throw;
        }
        s.t = t_next;
        const bool record = (k % cfg.record_every == 0) || k == steps;
        if (record && hooks.on_record) hooks.on_record(diagnose(s));
        if (hooks.on_step) hooks.on_step(s, k);
    }
    return s;
}

template <typename Scalar>
struct Trajectory {
    State<Scalar> final_state;
    std::vector<DiagnosticsRecord> records;
};

template <typename Scalar>
Trajectory<Scalar> simulate(const State<Scalar>& init, const SimConfig& cfg) {
    std::vector<DiagnosticsRecord> records;
    RunHooks<Scalar> hooks;
    hooks.on_record = [&](const DiagnosticsRecord& r) { records.push_back(r); };
    State<Scalar> final_state = run(init, cfg, hooks);
    return {std::move(final_state), std::move(records)};
}

}  // namespace thermoflow
