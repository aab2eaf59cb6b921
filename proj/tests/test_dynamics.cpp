#include <doctest.h>

#include "helpers.hpp"
#include "thermoflow/dynamics.hpp"

using namespace thermoflow;
using namespace tf_test;

namespace {

State<double> scenario(Index n, double v_amp = 0.2, double theta_amp = 0.3) {
    const auto g = Grid<double>::cube(1, n);
    State<double> s = State<double>::equilibrium(g, 1.0);
    s.v = VectorField<double>(
        {field(g, [&](const Pos& x) { return v_amp * std::sin(pi * x[0]); }, BoundaryTag::DirichletZero)});
    s.theta = field(g, [&](const Pos& x) { return 1 + theta_amp * std::cos(pi * x[0]); }, BoundaryTag::NeumannZero);
    return s;
}

State<double> scenario_2d(Index n) {
    const auto g = Grid<double>::cube(2, n);
    State<double> s = State<double>::equilibrium(g, 1.0);
    s.u = VectorField<double>(
        {field(g, [](const Pos& x) { return 0.05 * std::sin(pi * x[0]) * std::sin(pi * x[1]); }, BoundaryTag::DirichletZero),
         ScalarField<double>::zeros(g, BoundaryTag::DirichletZero)});
    s.v = VectorField<double>(
        {ScalarField<double>::zeros(g, BoundaryTag::DirichletZero),
         field(g, [](const Pos& x) { return 0.1 * std::sin(2 * pi * x[0]) * std::sin(pi * x[1]); }, BoundaryTag::DirichletZero)});
    s.theta = field(g, [](const Pos& x) { return 1 + 0.2 * std::cos(pi * x[0]) * std::cos(pi * x[1]); },
                    BoundaryTag::NeumannZero);
    return s;
}

double max_relative_drift(const std::vector<DiagnosticsRecord>& recs) {
    double d = 0;
    for (const auto& r : recs) d = std::max(d, std::abs(r.energy - recs.front().energy) / std::abs(recs.front().energy));
    return d;
}

}  // namespace

TEST_CASE("state validation") {
    const auto g = Grid<double>::cube(1, 9);
    State<double> s = State<double>::equilibrium(g, 2.0);
    CHECK_NOTHROW(validate_state(s));
    s.theta[3] = 0.0;
    CHECK_THROWS_AS(validate_state(s), PositivityViolation);
    s = State<double>::equilibrium(g, 2.0);
    s.u[0].values[0] = 1e-3;
    CHECK_THROWS_AS(validate_state(s), InvalidInput);
    s = State<double>::equilibrium(g, 2.0);
    s.theta.bc = BoundaryTag::DirichletZero;
    CHECK_THROWS_AS(validate_state(s), InvalidInput);

    SimConfig c;
    c.dt = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = SimConfig{};
    c.galerkin_modes = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = SimConfig{};
    CHECK_THROWS_AS(CoupledStepper<double>(g, [] { SimConfig k; k.galerkin_modes = 8; return k; }()), InvalidInput);
}

TEST_CASE("momentum step: equilibrium and decoupled invariants") {
    SimConfig cfg;
    cfg.mu = 0;
    const auto g = Grid<double>::cube(1, 65);
    const State<double> rest = State<double>::equilibrium(g, 1.0);
    const auto m = step_momentum(rest, rest.theta, cfg);
    CHECK(m.u[0].values.cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.v[0].values.cwiseAbs().maxCoeff() == 0.0);

    // Wave energy over 1e4 steps.
    cfg.solver.rel_tolerance = 1e-12;
    State<double> s = scenario(65);
    s.u = VectorField<double>({field(g, [](const Pos& x) { return 0.1 * std::sin(2 * pi * x[0]); }, BoundaryTag::DirichletZero)});
    const double e0 = wave_energy(s.u, s.v);
    double drift = 0;
    for (int k = 0; k < 10000; ++k) {
        const auto up = step_momentum(s, s.theta, cfg);
        s.u = up.u;
        s.v = up.v;
        drift = std::max(drift, std::abs(wave_energy(s.u, s.v) - e0) / e0);
    }
    CHECK(drift <= 1e-9);
}

TEST_CASE("momentum step: dispersion of the first sine mode") {
    SimConfig cfg;
    cfg.mu = 0;
    cfg.dt = 1e-3;
    const auto g = Grid<double>::cube(1, 65);
    State<double> s = State<double>::equilibrium(g, 1.0);
    s.u = VectorField<double>({field(g, [](const Pos& x) { return std::sin(pi * x[0]); }, BoundaryTag::DirichletZero)});
    const double lam = lambda_h(g.spacing(0));
    const double omega_h = std::sqrt(lam / (1 + lam));
    const Index mid = 32;
    double prev = s.u[0][mid], t = 0;
    std::vector<double> roots;
    while (roots.size() < 3) {
        const auto up = step_momentum(s, s.theta, cfg);
        s.u = up.u;
        s.v = up.v;
        t += cfg.dt;
        const double cur = s.u[0][mid];
        if ((prev > 0) != (cur > 0)) roots.push_back(t - cfg.dt * cur / (cur - prev));
        prev = cur;
    }
    const double period = roots[2] - roots[0];
    CHECK(std::abs(2 * pi / period - omega_h) / omega_h <= 1e-3);
}

TEST_CASE("theta heat step examples") {
    SimConfig cfg;
    cfg.mu = 0;
    cfg.dt = 1e-3;
    const auto g = Grid<double>::cube(1, 65);
    State<double> s = State<double>::equilibrium(g, 2.5);
    const auto zero_div = ScalarField<double>::zeros(g, BoundaryTag::None);
    for (int k = 0; k < 5; ++k) s.theta = step_heat_theta(s, zero_div, cfg, cfg.dt);
    CHECK((s.theta.values.array() - 2.5).abs().maxCoeff() == 0.0);

    s.theta = field(g, [](const Pos& x) { return 1 + 0.5 * std::cos(pi * x[0]); }, BoundaryTag::NeumannZero);
    const double mean0 = integrate(s.theta);
    const int steps = 50;
    for (int k = 0; k < steps; ++k) s.theta = step_heat_theta(s, zero_div, cfg, cfg.dt);
    const double factor = std::pow(1 + cfg.dt * lambda_h(g.spacing(0)), -steps);
    const auto expect = field(g, [&](const Pos& x) { return 1 + 0.5 * factor * std::cos(pi * x[0]); },
                              BoundaryTag::NeumannZero);
    CHECK((s.theta.values - expect.values).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(std::abs(integrate(s.theta) - mean0) <= 1e-12);
}

TEST_CASE("theta heat step errors") {
    SimConfig cfg;
    cfg.mu = 1;
    cfg.dt = 0.1;
    const auto g = Grid<double>::cube(1, 17);
    const State<double> s = State<double>::equilibrium(g, 1.0);
    // dt/2 * mu * div = 0.95 leaves a denominator of 0.05.
    const auto big = ScalarField<double>::constant(g, 19.0, BoundaryTag::None);
    CHECK_THROWS_AS(step_heat_theta(s, big, cfg, cfg.dt), TimeStepTooLarge);
    // dt * mu * div = -3: the source drives theta negative.
    const auto sink = ScalarField<double>::constant(g, -30.0, BoundaryTag::None);
    try {
        step_heat_theta(s, sink, cfg, cfg.dt);
        FAIL("expected PositivityViolation");
    } catch (const PositivityViolation& e) {
        CHECK(std::string(e.what()).find("point") != std::string::npos);
    }
}

TEST_CASE("tau heat step examples") {
    SimConfig cfg;
    cfg.mu = 0;
    cfg.dt = 1e-3;
    cfg.heat_form = HeatForm::TauForm;
    const auto g = Grid<double>::cube(1, 65);
    State<double> s = State<double>::equilibrium(g, 0.7);
    const auto zero_div = ScalarField<double>::zeros(g, BoundaryTag::None);
    s.theta = step_heat_tau(s, zero_div, cfg, cfg.dt);
    CHECK((s.theta.values.array() - 0.7).abs().maxCoeff() <= 1e-15);

    s.theta = field(g, [](const Pos& x) { return std::exp(std::cos(pi * x[0])); }, BoundaryTag::NeumannZero);
    double prev = entropy(s.theta);
    double worst = 0;
    for (int k = 0; k < 2000; ++k) {
        s.theta = step_heat_tau(s, zero_div, cfg, cfg.dt);
        CHECK(s.theta.values.minCoeff() > 0);
        const double now = entropy(s.theta);
        worst = std::max(worst, prev - now);
        prev = now;
    }
    CHECK(worst <= 1e-10);
    const double spread = s.theta.values.maxCoeff() - s.theta.values.minCoeff();
    CHECK(spread < 1e-3);

    const State<double> hot = State<double>::equilibrium(g, std::exp(699.5));
    const auto source = ScalarField<double>::constant(g, 1000.0, BoundaryTag::None);
    SimConfig coupled = cfg;
    coupled.mu = 1;
    CHECK_THROWS_AS(step_heat_tau(hot, source, coupled, cfg.dt), Divergence);

    State<double> steep = State<double>::equilibrium(g, 1.0);
    steep.theta = field(g, [](const Pos& x) { return std::exp(5 * std::cos(pi * x[0])); }, BoundaryTag::NeumannZero);
    std::string warning;
    step_heat_tau(steep, zero_div, cfg, 0.01, nullptr, &warning);
    CHECK(warning.find("exceeds 0.5") != std::string::npos);
}

TEST_CASE("coupled step: equilibrium is a fixed point") {
    for (HeatForm form : {HeatForm::ThetaForm, HeatForm::TauForm}) {
        SimConfig cfg;
        cfg.heat_form = form;
        const auto g = Grid<double>::cube(2, 9);
        const State<double> rest = State<double>::equilibrium(g, 1.3);
        const State<double> next = step_coupled(rest, cfg);
        CHECK((next.theta.values.array() - 1.3).abs().maxCoeff() <= 1e-14);
        CHECK(next.u[0].values.cwiseAbs().maxCoeff() == 0.0);
        CHECK(next.v[1].values.cwiseAbs().maxCoeff() == 0.0);
        CHECK(next.t == doctest::Approx(cfg.dt));
    }
}

TEST_CASE("coupled step: energy drift and its order") {
    auto drift = [](double dt) {
        SimConfig cfg;
        cfg.dt = dt;
        cfg.t_end = 1;
        return max_relative_drift(simulate(scenario(65), cfg).records);
    };
    const double coarse = drift(1e-3);
    const double fine = drift(5e-4);
    CHECK(coarse <= 1e-6);
    CHECK(coarse / fine >= 3.5);

    SimConfig cfg;
    cfg.t_end = 0.2;
    cfg.dt = 2e-3;
    CHECK(max_relative_drift(simulate(scenario_2d(17), cfg).records) <= 1e-6);
}

TEST_CASE("coupled step: sign symmetry in (u, v, mu)") {
    SimConfig cfg;
    cfg.t_end = 0.3;
    State<double> s = scenario(33);
    s.u = VectorField<double>(
        {field(s.grid(), [](const Pos& x) { return 0.05 * std::sin(2 * pi * x[0]); }, BoundaryTag::DirichletZero)});
    State<double> flipped = s;
    flipped.u = -1.0 * s.u;
    flipped.v = -1.0 * s.v;
    SimConfig neg = cfg;
    neg.mu = -cfg.mu;
    const auto a = simulate(s, cfg);
    const auto b = simulate(flipped, neg);
    CHECK((a.final_state.theta.values - b.final_state.theta.values).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((a.final_state.u[0].values + b.final_state.u[0].values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("formulations approach each other as dt shrinks") {
    auto distance = [](double dt) {
        SimConfig a;
        a.dt = dt;
        a.t_end = 0.5;
        SimConfig b = a;
        b.heat_form = HeatForm::TauForm;
        CoupledStepper<double> sa(Grid<double>::cube(1, 33), a), sb(Grid<double>::cube(1, 33), b);
        State<double> x = scenario(33), y = scenario(33);
        double sup = 0;
        for (long k = 0; k < step_count(a); ++k) {
            x = sa.step(x, dt);
            y = sb.step(y, dt);
            sup = std::max(sup, (x.theta.values - y.theta.values).cwiseAbs().maxCoeff());
        }
        return sup;
    };
    const double d1 = distance(2e-3), d2 = distance(1e-3);
    CHECK(d2 < d1);
    CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("Galerkin truncation") {
    const State<double> s = scenario(33);
    SimConfig cfg;
    cfg.t_end = 0.5;
    cfg.galerkin_modes = 3;
    const auto traj = simulate(s, cfg);
    CHECK(max_relative_drift(traj.records) <= 1e-6);
    const SineProjector<double> proj(s.grid(), 3);
    CHECK((proj.project(traj.final_state.u[0]).values - traj.final_state.u[0].values).cwiseAbs().maxCoeff() <= 1e-14);

    // Tight solves: at the default tolerance CG stopping noise alone is ~1e-11.
    SimConfig none = cfg;
    none.solver.rel_tolerance = 1e-13;
    none.galerkin_modes.reset();
    SimConfig full = none;
    full.galerkin_modes = s.grid().interior_size();
    const auto a = simulate(s, full).final_state;
    const auto b = simulate(s, none).final_state;
    CHECK((a.theta.values - b.theta.values).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((a.v[0].values - b.v[0].values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("run bookkeeping") {
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.t_end = 0.105;
    cfg.record_every = 3;
    CHECK(step_count(cfg) == 11);
    const auto a = simulate(scenario(17), cfg);
    // t = 0, steps 3, 6, 9 and the final partial step.
    REQUIRE(a.records.size() == 5);
    CHECK(a.records.back().t == doctest::Approx(0.105).epsilon(1e-14));
    CHECK(a.final_state.t == doctest::Approx(0.105).epsilon(1e-14));
    const auto b = simulate(scenario(17), cfg);
    CHECK(a.records == b.records);

    SimConfig zero = cfg;
    zero.t_end = 0;
    CHECK(simulate(scenario(17), zero).records.size() == 1);

    SimConfig harsh;
    harsh.dt = 0.5;
    harsh.t_end = 1;
    harsh.mu = 50;
    try {
        simulate(scenario(17, 2.0), harsh);
        FAIL("expected a step failure");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("step 1") != std::string::npos);
    }
}
