#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "thermoflow/grid.hpp"

namespace tf_test {

using thermoflow::BoundaryTag;
using thermoflow::Grid;
using thermoflow::Index;
using thermoflow::ScalarField;
using thermoflow::VectorField;
using Pos = std::array<double, 3>;

inline constexpr double pi = std::numbers::pi;

template <typename Fn>
ScalarField<double> field(const Grid<double>& g, Fn fn, BoundaryTag tag) {
    return ScalarField<double>::sample(g, fn, tag);
}

// Random interior values, exact zeros on the boundary.
inline ScalarField<double> random_dirichlet(const Grid<double>& g, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return ScalarField<double>::sample(g, [&](const Pos&) { return n(rng); }, BoundaryTag::DirichletZero);
}

inline ScalarField<double> random_neumann(const Grid<double>& g, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return ScalarField<double>::sample(g, [&](const Pos&) { return n(rng); }, BoundaryTag::NeumannZero);
}

inline VectorField<double> random_vector(const Grid<double>& g, std::mt19937_64& rng) {
    std::vector<ScalarField<double>> c;
    for (int a = 0; a < g.dim(); ++a) c.push_back(random_dirichlet(g, rng));
    return VectorField<double>(std::move(c));
}

// Max |f - g| over points whose index along every used axis lies in [lo, n-1-lo].
template <typename Fn>
double max_error(const ScalarField<double>& f, Fn exact, Index lo = 0) {
    const auto& g = f.grid;
    double e = 0;
    for (Index p = 0; p < g.size(); ++p) {
        const auto idx = g.unravel(p);
        bool skip = false;
        for (int a = 0; a < g.dim(); ++a)
            if (idx[a] < lo || idx[a] > g.points(a) - 1 - lo) skip = true;
        if (!skip) e = std::max(e, std::abs(f[p] - exact(g.position(p))));
    }
    return e;
}

// lambda_h = (2/h^2)(1 - cos(k pi h)) on [0, 1].
inline double lambda_h(double h, int k = 1) { return 2.0 / (h * h) * (1.0 - std::cos(k * pi * h)); }

}  // namespace tf_test
