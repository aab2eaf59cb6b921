#include <doctest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "thermoflow/elliptic.hpp"

using namespace thermoflow;
using namespace tf_test;

TEST_CASE("SolverSpec validation") {
    SolverSpec s;
    CHECK_NOTHROW(s.validate());
    s.rel_tolerance = 1e-3;
    CHECK_THROWS_AS(s.validate(), InvalidInput);
    s.rel_tolerance = 0;
    CHECK_THROWS_AS(s.validate(), InvalidInput);
    s = SolverSpec{};
    CHECK(s.iteration_cap(Grid<double>::cube(2, 17)) == 170);
}

TEST_CASE("shifted Dirichlet solve: worked examples") {
    const SolverSpec spec;
    const auto g = Grid<double>::cube(1, 257);
    CHECK(solve_shifted_dirichlet(ScalarField<double>::zeros(g, BoundaryTag::DirichletZero), 1.0, spec)
              .values.cwiseAbs()
              .maxCoeff() == 0.0);

    const auto s = field(g, [](const Pos& x) { return std::sin(pi * x[0]); }, BoundaryTag::DirichletZero);
    const auto x = solve_shifted_dirichlet(s, 1.0, spec);
    const double lam = lambda_h(g.spacing(0));
    CHECK((x.values - s.values / (1 + lam)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(x.bc == BoundaryTag::DirichletZero);
    CHECK(x[0] == 0.0);

    std::mt19937_64 rng(11);
    const auto g1 = Grid<double>::cube(1, 65);
    const auto rhs = random_dirichlet(g1, rng);
    const auto xs = solve_shifted_dirichlet(rhs, 1.0, spec);
    const auto ref = dense_solve(dense_shifted_operator(g1, 1.0, false), rhs.values);
    CHECK((xs.values - ref).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("implicit heat solve: worked examples") {
    const SolverSpec spec;
    const auto g = Grid<double>::cube(1, 257);
    const auto c = ScalarField<double>::constant(g, 1.75);
    CHECK((solve_implicit_heat(c, 0.1, spec).values.array() - 1.75).abs().maxCoeff() == 0.0);

    const auto f = field(g, [](const Pos& x) { return 1 + std::cos(pi * x[0]); }, BoundaryTag::NeumannZero);
    const auto x = solve_implicit_heat(f, 0.1, spec);
    const double lam = lambda_h(g.spacing(0));
    const auto expect = field(
        g, [&](const Pos& p) { return 1 + std::cos(pi * p[0]) / (1 + 0.1 * lam); }, BoundaryTag::NeumannZero);
    CHECK((x.values - expect.values).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(std::abs(integrate(x) - integrate(f)) <= spec.rel_tolerance * std::abs(integrate(f)));

    std::mt19937_64 rng(5);
    const auto g1 = Grid<double>::cube(1, 65);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    const auto rhs = ScalarField<double>::sample(g1, [&](const Pos&) { return u(rng); }, BoundaryTag::NeumannZero);
    const auto xs = solve_implicit_heat(rhs, 0.01, spec);
    const auto ref = dense_solve(dense_shifted_operator(g1, 0.01, true), rhs.values);
    CHECK((xs.values - ref).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("2D solves match the dense oracle") {
    std::mt19937_64 rng(17);
    const auto g = Grid<double>::cube(2, 17);
    const auto rd = random_dirichlet(g, rng);
    CHECK((solve_shifted_dirichlet(rd, 1.0, SolverSpec{}).values -
           dense_solve(dense_shifted_operator(g, 1.0, false), rd.values))
              .cwiseAbs()
              .maxCoeff() <= 1e-8);
    const auto rn = random_neumann(g, rng);
    CHECK((solve_implicit_heat(rn, 0.05, SolverSpec{}).values -
           dense_solve(dense_shifted_operator(g, 0.05, true), rn.values))
              .cwiseAbs()
              .maxCoeff() <= 1e-8);
}

TEST_CASE("residual guarantee, symmetry and damping") {
    std::mt19937_64 rng(23);
    const auto g = Grid<double>::cube(2, 21);
    const SolverSpec spec;
    const auto b = random_dirichlet(g, rng);
    SolveStats stats;
    const auto x = solve_shifted_dirichlet(b, 1.0, spec, nullptr, &stats);
    const auto r = x - 1.0 * laplacian(x) - b;
    CHECK(l2_norm(r) <= spec.rel_tolerance * l2_norm(b) * (1 + 1e-6));
    CHECK(stats.relative_residual <= spec.rel_tolerance);
    CHECK(stats.iterations > 0);

    const auto f = random_dirichlet(g, rng);
    const auto h = random_dirichlet(g, rng);
    const double lhs = inner(solve_shifted_dirichlet(f, 1.0, spec), h);
    const double rhs = inner(f, solve_shifted_dirichlet(h, 1.0, spec));
    CHECK(std::abs(lhs - rhs) <= 1e-8 * l2_norm(f) * l2_norm(h));

    const auto fn = random_neumann(g, rng);
    const auto hn = random_neumann(g, rng);
    CHECK(std::abs(inner(solve_implicit_heat(fn, 0.1, spec), hn) - inner(fn, solve_implicit_heat(hn, 0.1, spec))) <=
          1e-8 * l2_norm(fn) * l2_norm(hn));

    for (int k = 1; k <= 4; ++k) {
        const auto e = field(g, [&](const Pos& p) { return std::sin(k * pi * p[0]) * std::sin(pi * p[1]); },
                             BoundaryTag::DirichletZero);
        CHECK(l2_norm(solve_shifted_dirichlet(e, 1.0, spec)) <= l2_norm(e));
    }
}

TEST_CASE("solver errors") {
    const auto g = Grid<double>::cube(1, 65);
    const auto n = ScalarField<double>::constant(g, 1.0);
    CHECK_THROWS_AS(solve_shifted_dirichlet(n, 1.0, SolverSpec{}), InvalidInput);
    const auto d = field(g, [](const Pos& x) { return std::sin(pi * x[0]); }, BoundaryTag::DirichletZero);
    CHECK_THROWS_AS(solve_implicit_heat(d, 1.0, SolverSpec{}), InvalidInput);
    CHECK_THROWS_AS(solve_shifted_dirichlet(d, -1.0, SolverSpec{}), InvalidInput);
    CHECK_THROWS_AS(solve_implicit_heat(n, 0.0, SolverSpec{}), InvalidInput);

    std::mt19937_64 rng(2);
    SolverSpec tight;
    tight.max_iterations = 2;
    try {
        solve_shifted_dirichlet(random_dirichlet(g, rng), 1.0, tight);
        FAIL("expected SolverFailure");
    } catch (const SolverFailure& e) {
        CHECK(e.iterations() == 2);
        CHECK(e.residual() > tight.rel_tolerance);
    }
}

TEST_CASE("warm start does not change the answer") {
    std::mt19937_64 rng(9);
    const auto g = Grid<double>::cube(1, 65);
    const auto b = random_dirichlet(g, rng);
    const auto cold = solve_shifted_dirichlet(b, 1.0, SolverSpec{});
    SolveStats warm_stats;
    const auto warm = solve_shifted_dirichlet(b, 1.0, SolverSpec{}, &cold, &warm_stats);
    CHECK((warm.values - cold.values).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(warm_stats.iterations <= 1);
}
