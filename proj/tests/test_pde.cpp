#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hqlab/errors.hpp"
#include "hqlab/pde.hpp"
#include "hqlab/presets.hpp"
#include "hqlab/random.hpp"

using namespace hqlab;

namespace {

GridFunction grid2(int points, double a = 1.0) { return GridFunction::on_box(Box::cube(2, a), points); }

ManufacturedField diag_quadratic(Point d) {
    ManufacturedField f;
    f.name = "diag";
    f.value = [d](const Point& x) { return 0.5 * (d.array() * x.array() * x.array()).sum(); };
    f.gradient = [d](const Point& x) { return Point(d.array() * x.array()); };
    f.hessian = [d](const Point&) { return Eigen::Matrix3d(d.asDiagonal()); };
    return f;
}

double sup_error(const SolveResult& r, const ScalarField& exact) {
    return max_abs_diff(r.u, sample_field(exact, r.u));
}

// Central difference of the residual along v against J v.
double jacobian_mismatch(const ProblemSpec& spec, const GridFunction& u) {
    const auto inner = u.interior();
    Rng rng(42);
    Eigen::VectorXd v(static_cast<Eigen::Index>(inner.size()));
    for (auto& x : v) x = uniform(rng, -1.0, 1.0);
    const double eps = 1e-5;
    GridFunction up = u, um = u;
    for (std::size_t m = 0; m < inner.size(); ++m) {
        up[inner[m]] += eps * v[static_cast<Eigen::Index>(m)];
        um[inner[m]] -= eps * v[static_cast<Eigen::Index>(m)];
    }
    const auto rp = residual(up, spec);
    const auto rm = residual(um, spec);
    const Eigen::VectorXd jv = assemble_jacobian(u, spec) * v;
    double err = 0.0, scale = 0.0;
    for (std::size_t m = 0; m < inner.size(); ++m) {
        const double fd = (rp[inner[m]] - rm[inner[m]]) / (2.0 * eps);
        err = std::max(err, std::abs(fd - jv[static_cast<Eigen::Index>(m)]));
        scale = std::max(scale, std::abs(fd));
    }
    return err / scale;
}

}  // namespace

TEST_CASE("discrete hessian") {
    auto u = grid2(21);
    u.fill([](const Point& x) { return x[0] * x[1]; });
    const long c = u.index(10, 10);
    auto H = hessian_at(u, c);
    CHECK(std::abs(H(0, 1) - 1.0) <= 1e-12);
    CHECK(std::abs(H(1, 0) - 1.0) <= 1e-12);
    CHECK(std::abs(H(0, 0)) <= 1e-12);

    u.fill([](const Point& x) { return 0.5 * x.squaredNorm(); });
    H = hessian_at(u, u.index(3, 17));
    CHECK((H - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <= 1e-11);

    u.fill([](const Point& x) { return x[0] * x[0] * x[0]; });
    const long p = u.index(15, 4);  // x0 = 0.5
    CHECK(u.point(p)[0] == doctest::Approx(0.5));
    CHECK(std::abs(hessian_at(u, p)(0, 0) - 3.0) <= 0.03);

    CHECK_THROWS_AS((void)hessian_at(u, u.index(0, 4)), DomainError);
    const Point g = gradient_at(u, p);
    // central difference of x^3 is 3x^2 + h^2
    CHECK(std::abs(g[0] - 0.76) <= 1e-12);
}

TEST_CASE("3d grid geometry") {
    auto u = GridFunction::on_box(Box::cube(3, 1.0), 9);
    CHECK(u.size() == 729);
    CHECK(u.interior().size() == 343u);
    u.fill([](const Point& x) { return x[0] * x[2] + 2.0 * x[1] * x[1]; });
    const auto H = hessian_at(u, u.index(4, 4, 4));
    CHECK(std::abs(H(0, 2) - 1.0) <= 1e-12);
    CHECK(std::abs(H(1, 1) - 4.0) <= 1e-12);
    CHECK(std::abs(H(0, 1)) <= 1e-12);
    CHECK_THROWS_AS(GridFunction(2, {4, 4, 1}, 0.1, Point::Zero()), DomainError);
}

TEST_CASE("residual values") {
    const auto field = diag_quadratic(Point(1.0, 1.0, 1.0));
    const auto spec = manufacture(field, OperatorKind::Quotient, Box::cube(3, 1.0));
    auto u = GridFunction::on_box(spec.domain, 9);
    u.fill(field.value);
    const auto r = residual(u, spec);
    for (long p = 0; p < u.size(); ++p) CHECK(std::abs(r[p]) <= 1e-12);

    // sigma2/sigma1 of I_3 is 1; against psi = 1/2 the residual is 1/2
    ProblemSpec half = spec;
    half.psi = [](const Point&, double, const Point&) { return 0.5; };
    const auto r2 = residual(u, half);
    CHECK(std::abs(r2[u.index(4, 4, 4)] - 0.5) <= 1e-12);
    CHECK(r2[u.index(0, 4, 4)] == 0.0);

    ProblemSpec s2 = spec;
    s2.kind = OperatorKind::Sigma2;
    s2.psi = [](const Point&, double, const Point&) { return 1.0; };
    CHECK(std::abs(residual(u, s2)[u.index(2, 3, 5)] - 2.0) <= 1e-12);
}

TEST_CASE("cone guard") {
    const auto saddle = diag_quadratic(Point(1.0, 1.0, -1.5));
    CHECK_THROWS_AS((void)manufacture(saddle, OperatorKind::Sigma2, Box::cube(3, 1.0)), ConeViolation);
    CHECK_THROWS_AS((void)make_problem(find_preset("saddle3d")), ConeViolation);

    const auto spec = manufacture(diag_quadratic(Point(1.0, 1.0, 1.0)), OperatorKind::Sigma2, Box::cube(3, 1.0));
    auto u = GridFunction::on_box(spec.domain, 9);
    u.fill(saddle.value);
    CHECK_THROWS_AS((void)residual(u, spec, true), ConeViolation);
    // sigma2(1, 1, -1.5) = 1 - 3 = -2, psi = 3
    CHECK(std::abs(residual(u, spec, false)[u.index(4, 4, 4)] + 5.0) <= 1e-12);

    const auto cs = cone_stats(u);
    CHECK(cs.worst_index >= 0);
    CHECK(cs.min_sigma2 == doctest::Approx(-2.0));

    ProblemSpec q = spec;
    q.kind = OperatorKind::Quotient;
    u.fill([](const Point& x) { return -0.5 * x.squaredNorm(); });
    CHECK_THROWS_AS((void)residual(u, q, false), ConeViolation);
}

TEST_CASE("quadratic exactness") {
    for (const char* name : {"quadratic2d", "quadratic3d"}) {
        for (auto kind : {OperatorKind::Quotient, OperatorKind::Sigma2}) {
            const auto preset = find_preset(name);
            const auto spec = make_problem(preset, kind);
            SolverConfig cfg;
            cfg.grid_points = preset.dim == 2 ? 33 : 17;
            const auto r = newton_solve(spec, cfg);
            CAPTURE(name);
            CHECK(r.report.converged);
            CHECK(r.report.iterations <= 3);
            CHECK(r.report.final_residual_norm <= 1e-10);
            CHECK(sup_error(r, preset.exact.value) <= 1e-10);
        }
    }
}

TEST_CASE("quadratic exactness from a perturbed guess") {
    const auto preset = find_preset("quadratic2d");
    const auto spec = make_problem(preset);
    SolverConfig cfg;
    cfg.grid_points = 17;
    cfg.initial_guess = InitialGuess::Supplied;
    GridFunction g = GridFunction::on_box(spec.domain, 17);
    g.fill([&](const Point& x) { return preset.exact.value(x) + 0.02 * (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]); });
    cfg.initial = g;
    const auto r = newton_solve(spec, cfg);
    CHECK(r.report.converged);
    CHECK(r.report.iterations <= 6);
    CHECK(sup_error(r, preset.exact.value) <= 1e-10);
}

TEST_CASE("manufactured convergence order") {
    const auto preset = find_preset("bump2d");
    const auto spec = make_problem(preset);
    std::vector<double> errs;
    for (int n : {17, 33, 65}) {
        SolverConfig cfg;
        cfg.grid_points = n;
        const auto r = newton_solve(spec, cfg);
        REQUIRE(r.report.converged);
        errs.push_back(sup_error(r, preset.exact.value));
    }
    for (std::size_t k = 1; k < errs.size(); ++k) {
        const double order = std::log2(errs[k - 1] / errs[k]);
        CAPTURE(order);
        CHECK(order >= 1.8);
        CHECK(order <= 2.2);
    }
}

TEST_CASE("jacobian against finite differences") {
    for (const char* name : {"bump2d", "coupled2d", "gradient2d", "bump3d"}) {
        const auto preset = find_preset(name);
        const auto spec = make_problem(preset);
        const auto u = quadratic_fit_guess(spec, preset.dim == 2 ? 17 : 9);
        CAPTURE(name);
        CHECK(jacobian_mismatch(spec, u) <= 1e-4);
    }
}

TEST_CASE("psi must be positive") {
    ProblemSpec spec = manufacture(diag_quadratic(Point(1.0, 1.0, 0.0)), OperatorKind::Quotient, Box::cube(2, 1.0));
    spec.psi = [](const Point& x, double, const Point&) { return x[0]; };
    SolverConfig cfg;
    cfg.grid_points = 17;
    CHECK_THROWS_AS((void)newton_solve(spec, cfg), DomainError);
}

TEST_CASE("gradient dependent psi needs sigma2") {
    const auto preset = find_preset("gradient2d");
    CHECK_THROWS_AS((void)make_problem(preset, OperatorKind::Quotient), Error);
    const auto spec = make_problem(preset);
    CHECK(spec.kind == OperatorKind::Sigma2);
    CHECK(spec.gradient_dependent);
    ProblemSpec bad = spec;
    bad.kind = OperatorKind::Quotient;
    SolverConfig cfg;
    cfg.grid_points = 17;
    CHECK_THROWS_AS((void)newton_solve(bad, cfg), DomainError);
}

TEST_CASE("non-convergence is reported") {
    const auto spec = make_problem(find_preset("bump2d"));
    SolverConfig cfg;
    cfg.grid_points = 33;
    cfg.max_newton_iters = 1;
    cfg.residual_tol = 1e-15;
    const auto r = newton_solve(spec, cfg);
    CHECK_FALSE(r.report.converged);
    CHECK(r.report.iterations <= 1);
    CHECK_FALSE(r.report.message.empty());
}

TEST_CASE("residual history decreases") {
    const auto spec = make_problem(find_preset("coupled2d"));
    SolverConfig cfg;
    cfg.grid_points = 33;
    const auto r = newton_solve(spec, cfg);
    REQUIRE(r.report.converged);
    const auto& h = r.report.residual_history;
    REQUIRE(h.size() >= 2);
    for (std::size_t k = 1; k < h.size(); ++k) CHECK(h[k] < h[k - 1]);
    CHECK(r.report.min_sigma2_over_grid > 0.0);
}

TEST_CASE("field csv") {
    auto u = grid2(5);
    u.fill([](const Point& x) { return x[0] + 2.0 * x[1]; });
    const auto csv = field_to_csv(u);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "i,j,k,x0,x1,x2,u");
    std::getline(in, line);
    CHECK(line == "0,0,0,-1,-1,0,-3");
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 25);
    CHECK(field_to_csv(u) == csv);
}

TEST_CASE("presets") {
    const auto names = preset_names();
    CHECK(names.size() >= 19u);
    CHECK(doubling_family_names().size() >= 10u);
    CHECK_THROWS_AS((void)find_preset("nope"), UsageError);
}
