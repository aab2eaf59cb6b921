#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "thermoflow/operators.hpp"
#include "thermoflow/state.hpp"

namespace thermoflow {

// Depth of the L^{2^m} ladder: m = 1..kLadderDepth, i.e. L^2 .. L^32.
inline constexpr int kLadderDepth = 5;

/// One row of a trajectory's diagnostics. Field order is the CSV column order.
struct DiagnosticsRecord {
    double t = 0;
    double energy = 0;
    double entropy = 0;
    double entropy_production = 0;
    double fisher = 0;
    double higher_functional = 0;
    double theta_min = 0;
    double theta_max = 0;
    double u_h1 = 0;
    double v_h1 = 0;
    double theta_l2 = 0;
    std::array<double, kLadderDepth> lp_norms{};  // ||theta||_{L^{2^m}}, m = 1..5

    bool operator==(const DiagnosticsRecord&) const = default;
};

namespace detail {
template <typename Scalar>
void require_positive(const ScalarField<Scalar>& theta, const char* where) {
    Index p;
    if (!(theta.values.minCoeff(&p) > Scalar(0)))
        throw DomainError(std::string(where) + ": temperature not positive at point " + std::to_string(p));
}
}  // namespace detail

template <typename Scalar>
ScalarField<Scalar> log_temperature(const ScalarField<Scalar>& theta) {
    detail::require_positive(theta, "log_temperature");
    // Scalar std::log: the vectorised path can round lanes differently.
    return ScalarField<Scalar>(theta.grid, theta.values.unaryExpr([](Scalar x) { return std::log(x); }),
                               BoundaryTag::NeumannZero);
}

/// 1/2 int |u_t|^2 + 1/2 int |grad u|^2 + 1/2 int |grad u_t|^2, with the
/// gradient integrals taken as the Dirichlet forms matching the Laplacian.
template <typename Scalar>
Scalar wave_energy(const VectorField<Scalar>& u, const VectorField<Scalar>& v) {
    return Scalar(0.5) * (inner(v, v) + dirichlet_form(u) + dirichlet_form(v));
}

template <typename Scalar>
Scalar total_energy(const State<Scalar>& s) {
    return wave_energy(s.u, s.v) + integrate(s.theta);
}

template <typename Scalar>
Scalar entropy(const ScalarField<Scalar>& theta) {
    return integrate(log_temperature(theta));
}

template <typename Scalar>
Scalar entropy(const State<Scalar>& s) {
    return entropy(s.theta);
}

// Pointwise |grad log theta|^2, the same density the tau step uses.
template <typename Scalar>
Vector<Scalar> production_density(const ScalarField<Scalar>& theta) {
    return gradient_density(log_temperature(theta));
}

// int |grad log theta|^2
template <typename Scalar>
Scalar entropy_production(const ScalarField<Scalar>& theta) {
    return theta.grid.weights().dot(production_density(theta));
}

template <typename Scalar>
Scalar entropy_production(const State<Scalar>& s) {
    return entropy_production(s.theta);
}

// Pointwise |grad theta|^2 / theta, evaluated as theta |grad log theta|^2.
template <typename Scalar>
Vector<Scalar> fisher_density(const ScalarField<Scalar>& theta) {
    return production_density(theta).cwiseProduct(theta.values);
}

template <typename Scalar>
Scalar fisher_information(const ScalarField<Scalar>& theta) {
    return theta.grid.weights().dot(fisher_density(theta));
}

template <typename Scalar>
Scalar fisher_information(const State<Scalar>& s) {
    return fisher_information(s.theta);
}

/// int |grad theta|^2/theta + int |div u_t|^2 + int |grad div u|^2 + int |grad div u_t|^2
template <typename Scalar>
Scalar higher_order_functional(const State<Scalar>& s) {
    const auto div_u = divergence(s.u);
    const auto div_v = divergence(s.v);
    const auto grad_div_u = gradient(div_u);
    const auto grad_div_v = gradient(div_v);
    return fisher_information(s.theta) + inner(div_v, div_v) + inner(grad_div_u, grad_div_u) +
           inner(grad_div_v, grad_div_v);
}

template <typename Scalar>
Scalar h1_norm(const VectorField<Scalar>& w) {
    return std::sqrt(inner(w, w) + dirichlet_form(w));
}

template <typename Scalar>
Scalar lp_norm(const ScalarField<Scalar>& f, int p) {
    const Scalar pp = static_cast<Scalar>(p);
    return std::pow(f.grid.weights().dot(f.values.array().abs().pow(pp).matrix()), Scalar(1) / pp);
}

struct Norms {
    double u_h1 = 0;
    double v_h1 = 0;
    double theta_l2 = 0;
    std::vector<double> lp_norms;  // m = 1..depth
};

template <typename Scalar>
Norms norms(const State<Scalar>& s, int depth = kLadderDepth) {
    Norms n;
    n.u_h1 = static_cast<double>(h1_norm(s.u));
    n.v_h1 = static_cast<double>(h1_norm(s.v));
    n.theta_l2 = static_cast<double>(l2_norm(s.theta));
    for (int m = 1; m <= depth; ++m) n.lp_norms.push_back(static_cast<double>(lp_norm(s.theta, 1 << m)));
    return n;
}

template <typename Scalar>
DiagnosticsRecord diagnose(const State<Scalar>& s) {
    DiagnosticsRecord r;
    r.t = s.t;
    r.energy = static_cast<double>(total_energy(s));
    r.entropy = static_cast<double>(entropy(s));
    r.entropy_production = static_cast<double>(entropy_production(s));
    r.fisher = static_cast<double>(fisher_information(s));
    r.higher_functional = static_cast<double>(higher_order_functional(s));
    r.theta_min = static_cast<double>(s.theta.values.minCoeff());
    r.theta_max = static_cast<double>(s.theta.values.maxCoeff());
    const Norms n = norms(s);
    r.u_h1 = n.u_h1;
    r.v_h1 = n.v_h1;
    r.theta_l2 = n.theta_l2;
    for (int m = 0; m < kLadderDepth; ++m) r.lp_norms[static_cast<std::size_t>(m)] = n.lp_norms[static_cast<std::size_t>(m)];
    return r;
}

}  // namespace thermoflow
