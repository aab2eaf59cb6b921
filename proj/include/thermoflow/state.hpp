#pragma once

#include <optional>
#include <string>

#include "thermoflow/elliptic.hpp"

namespace thermoflow {

enum class HeatForm {
    ThetaForm,  // advance the temperature directly
    TauForm,    // advance the entropy variable log(theta)
};

inline const char* to_string(HeatForm f) { return f == HeatForm::ThetaForm ? "theta" : "tau"; }

struct SimConfig {
    double mu = 1.0;
    double dt = 1e-3;
    double t_end = 1.0;
    HeatForm heat_form = HeatForm::ThetaForm;
    std::optional<long> galerkin_modes;
    SolverSpec solver;
    long record_every = 1;
    // Heat/momentum sweeps per step. The first sweep uses predicted midpoint
    // data; each further sweep re-centres the coupling terms on the previous
    // sweep's result.
    int coupling_passes = 2;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("dt must be positive");
        if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidInput("t_end must be >= 0");
        if (!std::isfinite(mu)) throw InvalidInput("mu must be finite");
        if (record_every < 1) throw InvalidInput("record_every must be >= 1");
        if (coupling_passes < 1) throw InvalidInput("coupling_passes must be >= 1");
        if (galerkin_modes && *galerkin_modes < 1) throw InvalidInput("galerkin_modes must be >= 1");
        solver.validate();
    }
};

/// (u, u_t, theta) at one instant.
template <typename Scalar = double>
struct State {
    double t = 0.0;
    VectorField<Scalar> u;
    VectorField<Scalar> v;
    ScalarField<Scalar> theta;

    const Grid<Scalar>& grid() const { return theta.grid; }

    static State equilibrium(const Grid<Scalar>& g, Scalar temperature) {
        return State{0.0, VectorField<Scalar>::zeros(g), VectorField<Scalar>::zeros(g),
                     ScalarField<Scalar>::constant(g, temperature, BoundaryTag::NeumannZero)};
    }
};

/// Throws when the state breaks an invariant: tags, grids, finiteness, theta > 0.
template <typename Scalar>
void validate_state(const State<Scalar>& s) {
    const auto& g = s.theta.grid;
    if (s.theta.bc != BoundaryTag::NeumannZero) throw InvalidInput("state: theta must be NeumannZero");
    for (const VectorField<Scalar>* w : {&s.u, &s.v}) {
        if (w->dim() != g.dim() || w->grid() != g) throw InvalidInput("state: fields on different grids");
        if (w->bc() != BoundaryTag::DirichletZero) throw InvalidInput("state: u and v must be DirichletZero");
        if (!w->all_finite()) throw InvalidInput("state: displacement or velocity not finite");
        for (const auto& c : w->components)
            for (Index p = 0; p < g.size(); ++p)
                if (g.on_boundary(p) && c[p] != Scalar(0)) throw InvalidInput("state: u, v must vanish on the boundary");
    }
    if (!s.theta.all_finite()) throw InvalidInput("state: temperature not finite");
    Index where;
    if (s.theta.values.minCoeff(&where) <= Scalar(0))
        throw PositivityViolation("state: temperature not positive at point " + std::to_string(where), where);
}

}  // namespace thermoflow
