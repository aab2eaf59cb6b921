#include <doctest.h>

#include "helpers.hpp"
#include "thermoflow/verify.hpp"

using namespace thermoflow;
using namespace tf_test;

namespace {

State<double> reference(Index n, double mu_sign = 1) {
    const auto g = Grid<double>::cube(1, n);
    State<double> s = State<double>::equilibrium(g, 1.0);
    s.v = VectorField<double>(
        {field(g, [&](const Pos& x) { return mu_sign * 0.2 * std::sin(pi * x[0]); }, BoundaryTag::DirichletZero)});
    s.theta = field(g, [](const Pos& x) { return 1 + 0.3 * std::cos(pi * x[0]); }, BoundaryTag::NeumannZero);
    return s;
}

std::vector<DiagnosticsRecord> flat_records(int count, double theta) {
    std::vector<DiagnosticsRecord> out;
    for (int k = 0; k < count; ++k) {
        DiagnosticsRecord r;
        r.t = 0.1 * k;
        r.energy = theta;
        r.entropy = std::log(theta);
        r.theta_min = r.theta_max = theta;
        r.theta_l2 = theta;
        for (auto& lp : r.lp_norms) lp = theta;
        out.push_back(r);
    }
    return out;
}

}  // namespace

TEST_CASE("report direction semantics") {
    CHECK(make_report("a", 1.0, 2.0, "").passed);
    CHECK(make_report("a", 2.0, 2.0, "").passed);
    CHECK_FALSE(make_report("a", 2.5, 2.0, "").passed);
    CHECK(make_report("b", 2.5, 2.0, "", CheckDirection::LowerBound).passed);
    CHECK_FALSE(make_report("b", 1.5, 2.0, "", CheckDirection::LowerBound).passed);
    CHECK_FALSE(make_report("c", std::nan(""), 1.0, "").passed);
}

TEST_CASE("predicted equilibrium") {
    const auto g = Grid<double>::cube(2, 9);
    const auto p = predicted_equilibrium(State<double>::equilibrium(g, 2.0));
    CHECK(p.theta_inf == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(p.theta_inf == p.e0 / p.omega_measure);

    auto with_v = [](Index n) {
        const auto g1 = Grid<double>::cube(1, n);
        State<double> s = State<double>::equilibrium(g1, 1.0);
        s.v = VectorField<double>(
            {field(g1, [](const Pos& x) { return std::sin(pi * x[0]); }, BoundaryTag::DirichletZero)});
        return predicted_equilibrium(s).theta_inf;
    };
    const double oracle = 0.25 + pi * pi / 4 + 1;
    CHECK(std::abs(with_v(257) - oracle) <= 1e-3);
    const double e1 = std::abs(with_v(33) - oracle), e2 = std::abs(with_v(65) - oracle);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.3 / 4));

    State<double> bad = State<double>::equilibrium(g, 1.0);
    bad.theta[4] = -1;
    CHECK_THROWS_AS(predicted_equilibrium(bad), PositivityViolation);
}

TEST_CASE("checks on an equilibrium trajectory") {
    SimConfig cfg;
    cfg.t_end = 0.2;
    cfg.dt = 0.01;
    const auto g = Grid<double>::cube(2, 9);
    const State<double> rest = State<double>::equilibrium(g, 1.4);
    const auto traj = simulate(rest, cfg);
    REQUIRE(traj.records.size() == 21);
    const auto energy = check_energy_balance(traj.records, default_energy_threshold(cfg.t_end));
    CHECK(energy.passed);
    CHECK(energy.measured <= 1e-12);
    const auto ent = check_entropy_balance(traj.records, 1e-4);
    CHECK(ent.passed());
    CHECK(ent.balance.measured == 0.0);
    CHECK(ent.cumulative_production == 0.0);
    CHECK(check_boundedness(traj.records).passed);
    CHECK(check_positivity(traj.records).passed);
    const auto conv = check_convergence_to_equilibrium(traj.records, traj.final_state, predicted_equilibrium(rest));
    CHECK(conv.passed);
    CHECK(conv.measured <= 1e-9);

    CHECK_THROWS_AS(check_energy_balance(std::vector<DiagnosticsRecord>(1), 1.0), InvalidInput);
    const std::vector<DiagnosticsRecord> short_traj(traj.records.begin(), traj.records.begin() + 5);
    CHECK_THROWS_AS(check_convergence_to_equilibrium(short_traj, rest, predicted_equilibrium(rest)), InvalidInput);
}

TEST_CASE("boundedness and positivity negative controls") {
    // Temperature decaying to zero.
    auto decaying = flat_records(20, 1.0);
    for (std::size_t k = 0; k < decaying.size(); ++k) decaying[k].theta_min = std::exp(-double(k)) - std::exp(-19.0);
    const auto b = check_boundedness(decaying);
    CHECK_FALSE(b.passed);
    CHECK(b.details.find("VIOLATION") != std::string::npos);
    CHECK(b.details.find("theta_min") != std::string::npos);
    CHECK_FALSE(check_positivity(decaying).passed);

    // Ladder still growing in the second half.
    auto growing = flat_records(20, 1.0);
    for (std::size_t k = 0; k < growing.size(); ++k) growing[k].lp_norms[4] = 1.0 + 0.02 * double(k);
    const auto g = check_boundedness(growing);
    CHECK_FALSE(g.passed);
    CHECK(g.details.find("worst lp_32") != std::string::npos);

    // A drifting plateau fails the positivity plateau test but not boundedness.
    auto drifting = flat_records(20, 1.0);
    for (std::size_t k = 10; k < drifting.size(); ++k) drifting[k].theta_min = 1.0 - 0.01 * double(k - 10);
    CHECK(check_boundedness(drifting).passed);
    CHECK_FALSE(check_positivity(drifting).passed);
}

TEST_CASE("entropy balance on a decoupled diffusion run") {
    SimConfig cfg;
    cfg.mu = 0;
    cfg.t_end = 1;
    cfg.heat_form = HeatForm::TauForm;
    const auto g = Grid<double>::cube(1, 65);
    State<double> s = State<double>::equilibrium(g, 1.0);
    s.theta = field(g, [](const Pos& x) { return 1 + 0.5 * std::cos(pi * x[0]); }, BoundaryTag::NeumannZero);
    const auto traj = simulate(s, cfg);
    const auto rep = check_entropy_balance(traj.records, 1e-4);
    CHECK(rep.monotonicity.passed);
    CHECK(rep.balance.passed);
    for (std::size_t k = 1; k < 200; ++k) CHECK(traj.records[k].entropy > traj.records[k - 1].entropy);
    // Flat by the end: the last increments are tiny.
    const auto& r = traj.records;
    CHECK(r.back().entropy - r[r.size() - 2].entropy <= 1e-6);
    CHECK(rep.tail_fraction <= 0.01);

    auto broken = traj.records;
    broken[5].entropy = broken[4].entropy - 1e-6;
    CHECK_FALSE(check_entropy_balance(broken, 1e-4).monotonicity.passed);
}

TEST_CASE("Fisher-Hessian inequality") {
    const auto g3 = Grid<double>::cube(3, 9);
    const auto flat = check_fisher_hessian_inequality(ScalarField<double>::constant(g3, 2.0));
    CHECK(flat.indeterminate);
    CHECK(flat.passed);
    CHECK(flat.details.find("indeterminate") != std::string::npos);

    auto neg = ScalarField<double>::constant(g3, 1.0);
    neg[10] = -0.5;
    CHECK_THROWS_AS(check_fisher_hessian_inequality(neg), DomainError);
    const auto dir = ScalarField<double>::zeros(g3, BoundaryTag::DirichletZero);
    CHECK_THROWS_AS(check_fisher_hessian_inequality(dir), InvalidInput);

    // Lower dimensions report without asserting.
    const auto g1 = Grid<double>::cube(1, 33);
    const auto r1 = check_fisher_hessian_inequality(random_neumann_field(g1, 4, 3.0));
    CHECK(r1.passed);
    CHECK(r1.details.find("not asserted") != std::string::npos);

    // Small perturbations of a constant: sqrt(1 + e psi) ~ 1 + e psi / 2 and
    // log(1 + e psi) ~ e psi, so the ratio tends to 1/4.
    const auto g = Grid<double>::cube(3, 13);
    auto bump = [&](double eps) {
        return field(g,
                     [&](const Pos& x) {
                         return 1.7 * (1 + eps * std::cos(pi * x[0]) * std::cos(pi * x[1]) * std::cos(pi * x[2]));
                     },
                     BoundaryTag::NeumannZero);
    };
    const double r_small = check_fisher_hessian_inequality(bump(1e-3)).measured;
    CHECK(std::abs(r_small - 0.25) <= 1e-3);
    CHECK(r_small <= 2.2411);

    const auto ens = fisher_hessian_ensemble(Grid<double>::cube(3, 13), 6, 99);
    REQUIRE(ens.samples.size() == 6);
    CHECK(ens.passed());
    CHECK(ens.max_ratio <= 2.30);
    const auto again = fisher_hessian_ensemble(Grid<double>::cube(3, 13), 6, 99);
    for (std::size_t i = 0; i < 6; ++i) CHECK(again.samples[i].measured == ens.samples[i].measured);

    // Neumann compatibility of the random fields: phi(h) - phi(0) = O(h^2).
    const auto coarse = random_neumann_field(Grid<double>::cube(1, 33), 5);
    const auto fine = random_neumann_field(Grid<double>::cube(1, 65), 5);
    CHECK((coarse[1] - coarse[0]) / (fine[1] - fine[0]) == doctest::Approx(4.0).epsilon(0.05));
    CHECK(coarse.values.minCoeff() > 0.0);
}

TEST_CASE("stability check") {
    SimConfig cfg;
    cfg.dt = 2e-3;
    const State<double> a = reference(33);
    CHECK_THROWS_AS(check_stability(cfg, a, a, 0.2), InvalidInput);

    State<double> b = a;
    b.theta = b.theta + field(a.grid(), [](const Pos& x) { return 1e-3 * std::cos(pi * x[0]); }, BoundaryTag::NeumannZero);
    const auto rep = check_stability(cfg, a, b, 0.2);
    CHECK(std::isfinite(rep.growth_full));
    CHECK(rep.growth_full >= 1.0);
    CHECK(rep.report.passed);
    CHECK(std::abs(rep.growth_full - rep.growth_half) / rep.growth_full <= 0.10);
    const auto again = check_stability(cfg, a, b, 0.2);
    CHECK(again.report.measured == rep.report.measured);

    State<double> other = State<double>::equilibrium(Grid<double>::cube(1, 17), 1.0);
    CHECK_THROWS_AS(check_stability(cfg, a, other, 0.2), InvalidInput);
}

TEST_CASE("convergence check: decoupled negative control") {
    SimConfig cfg;
    cfg.mu = 0;
    cfg.dt = 5e-3;
    cfg.t_end = 5;
    cfg.record_every = 20;
    const State<double> s = reference(33);
    const auto traj = simulate(s, cfg);
    const auto rep = check_convergence_to_equilibrium(traj.records, traj.final_state, predicted_equilibrium(s));
    CHECK_FALSE(rep.passed);
    CHECK(rep.measured > 1.0);
    CHECK(check_energy_balance(traj.records, 1e-5).passed);
}

TEST_CASE("formulation agreement check") {
    SimConfig cfg;
    cfg.dt = 2e-3;
    const auto rep = check_formulation_agreement(cfg, reference(33), 0.5);
    CHECK(rep.passed);
    CHECK(rep.details.find("ratio") != std::string::npos);
}
