#pragma once

#include <cmath>
#include <string>
#include <type_traits>

#include "thermoflow/operators.hpp"

namespace thermoflow {

struct SolverSpec {
    double rel_tolerance = 1e-10;
    // 0 selects the default 10 * (points)^(1/dim), i.e. ten sweeps per axis length.
    long max_iterations = 0;

    void validate() const {
        if (!(rel_tolerance > 0.0) || rel_tolerance > 1e-4)
            throw InvalidInput("solver tolerance must lie in (0, 1e-4]");
        if (max_iterations < 0) throw InvalidInput("max_iterations must be >= 1");
    }

    template <typename Scalar>
    long iteration_cap(const Grid<Scalar>& g) const {
        if (max_iterations > 0) return max_iterations;
        const double per_axis = std::pow(static_cast<double>(g.size()), 1.0 / g.dim());
        return static_cast<long>(std::ceil(10.0 * per_axis));
    }
};

struct SolveStats {
    long iterations = 0;
    double relative_residual = 0.0;
};

namespace detail {

// Conjugate gradients for an operator that is self-adjoint and positive
// definite in the quadrature inner product. apply(x, out) writes A x to out.
template <typename Scalar, typename Apply>
Vector<Scalar> conjugate_gradient(Apply&& apply, const Vector<Scalar>& weights, const Vector<Scalar>& b,
                                  Vector<Scalar> x, double tol, long max_it, SolveStats& stats,
                                  const char* what) {
    auto dot = [&](const Vector<Scalar>& p, const Vector<Scalar>& q) {
        return (weights.array() * p.array() * q.array()).sum();
    };
    const Scalar b_norm = std::sqrt(dot(b, b));
    stats = {};
    if (b_norm == Scalar(0)) return Vector<Scalar>::Zero(b.size());

    Vector<Scalar> ap(b.size());
    apply(x, ap);
    Vector<Scalar> r = b - ap;
    Scalar rr = dot(r, r);
    const Scalar target = static_cast<Scalar>(tol) * b_norm;
    Vector<Scalar> p = r;
    long it = 0;
    while (std::sqrt(rr) > target) {
        if (it >= max_it) {
            const double rel = static_cast<double>(std::sqrt(rr) / b_norm);
            throw SolverFailure(std::string(what) + ": no convergence after " + std::to_string(it) +
                                    " iterations, relative residual " + std::to_string(rel),
                                rel, it);
        }
        apply(p, ap);
        const Scalar alpha = rr / dot(p, ap);
        x.noalias() += alpha * p;
        r.noalias() -= alpha * ap;
        const Scalar rr_new = dot(r, r);
        p = r + (rr_new / rr) * p;
        rr = rr_new;
        ++it;
    }
    stats.iterations = it;
    stats.relative_residual = static_cast<double>(std::sqrt(rr) / b_norm);
    return x;
}

}  // namespace detail

/// Solves (I - shift * lap_D) x = rhs for a DirichletZero rhs, shift >= 0.
///
/// `guess`, when given, seeds the iteration (a warm start across time steps).
template <typename Scalar>
ScalarField<Scalar> solve_shifted_dirichlet(const ScalarField<Scalar>& rhs, std::type_identity_t<Scalar> shift,
                                            const SolverSpec& spec,
                                            const std::type_identity_t<ScalarField<Scalar>>* guess = nullptr,
                                            SolveStats* stats = nullptr) {
    spec.validate();
    detail::require_finite(rhs, "solve_shifted_dirichlet");
    if (rhs.bc != BoundaryTag::DirichletZero) throw InvalidInput("solve_shifted_dirichlet: rhs must be DirichletZero");
    if (!(shift >= Scalar(0))) throw InvalidInput("solve_shifted_dirichlet: shift must be >= 0");
    const Grid<Scalar>& g = rhs.grid;
    auto apply = [&](const Vector<Scalar>& x, Vector<Scalar>& out) {
        detail::apply_laplacian(g, BoundaryTag::DirichletZero, x, out);
        out = x - shift * out;
    };
    Vector<Scalar> x0 = Vector<Scalar>::Zero(g.size());
    if (guess) {
        detail::require_same_grid(guess->grid, g, "solve_shifted_dirichlet");
        x0 = guess->retagged(BoundaryTag::DirichletZero).values;
    }
    SolveStats local;
    Vector<Scalar> x = detail::conjugate_gradient<Scalar>(apply, g.weights(), rhs.values, std::move(x0),
                                                          spec.rel_tolerance, spec.iteration_cap(g), local,
                                                          "solve_shifted_dirichlet");
    if (stats) *stats = local;
    ScalarField<Scalar> out(g, std::move(x), BoundaryTag::DirichletZero);
    out.enforce_boundary();
    return out;
}

/// Solves (I - dt_coeff * lap_N) x = rhs for a NeumannZero rhs, dt_coeff > 0.
///
/// The integral of the solution equals the integral of rhs; the iterate is
/// shifted by a constant after convergence so this holds to rounding.
template <typename Scalar>
ScalarField<Scalar> solve_implicit_heat(const ScalarField<Scalar>& rhs, std::type_identity_t<Scalar> dt_coeff,
                                        const SolverSpec& spec,
                                        const std::type_identity_t<ScalarField<Scalar>>* guess = nullptr,
                                        SolveStats* stats = nullptr) {
    spec.validate();
    detail::require_finite(rhs, "solve_implicit_heat");
    if (rhs.bc != BoundaryTag::NeumannZero) throw InvalidInput("solve_implicit_heat: rhs must be NeumannZero");
    if (!(dt_coeff > Scalar(0))) throw InvalidInput("solve_implicit_heat: dt_coeff must be > 0");
    const Grid<Scalar>& g = rhs.grid;
    auto apply = [&](const Vector<Scalar>& x, Vector<Scalar>& out) {
        detail::apply_laplacian(g, BoundaryTag::NeumannZero, x, out);
        out = x - dt_coeff * out;
    };
    Vector<Scalar> x0 = Vector<Scalar>::Zero(g.size());
    if (guess) {
        detail::require_same_grid(guess->grid, g, "solve_implicit_heat");
        x0 = guess->values;
    }
    SolveStats local;
    Vector<Scalar> x = detail::conjugate_gradient<Scalar>(apply, g.weights(), rhs.values, std::move(x0),
                                                          spec.rel_tolerance, spec.iteration_cap(g), local,
                                                          "solve_implicit_heat");
    if (stats) *stats = local;
    const auto& w = g.weights();
    const Scalar mass_defect = (w.dot(rhs.values) - w.dot(x)) / g.measure();
    x.array() += mass_defect;
    return ScalarField<Scalar>(g, std::move(x), BoundaryTag::NeumannZero);
}

}  // namespace thermoflow
