#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "hqlab/errors.hpp"
#include "hqlab/estimates.hpp"
#include "hqlab/inequality.hpp"

using namespace hqlab;

namespace {

ManufacturedField diag_quadratic(Point d) {
    ManufacturedField f;
    f.name = "diag";
    f.value = [d](const Point& x) { return 0.5 * (d.array() * x.array() * x.array()).sum(); };
    f.gradient = [d](const Point& x) { return Point(d.array() * x.array()); };
    f.hessian = [d](const Point&) { return Eigen::Matrix3d(d.asDiagonal()); };
    return f;
}

// |x|^2/2 + |x|^4/12 in 3D: Delta u = 3 + 5 r^2 / 3.
ManufacturedField radial_quartic() {
    ManufacturedField f;
    f.name = "radial";
    f.value = [](const Point& x) {
        const double s = x.squaredNorm();
        return 0.5 * s + s * s / 12.0;
    };
    f.gradient = [](const Point& x) { return Point((1.0 + x.squaredNorm() / 3.0) * x); };
    f.hessian = [](const Point& x) {
        return Eigen::Matrix3d((1.0 + x.squaredNorm() / 3.0) * Eigen::Matrix3d::Identity() +
                               (2.0 / 3.0) * x * x.transpose());
    };
    return f;
}

GridFunction on_b4(const ScalarField& f, int points = 33) {
    auto u = GridFunction::on_box(Box::cube(3, 4.0), points);
    u.fill(f);
    return u;
}

ProblemSpec constant_psi(double c) {
    ProblemSpec s;
    s.kind = OperatorKind::Sigma2;
    s.domain = Box::cube(3, 4.0);
    s.psi = [c](const Point&, double, const Point&) { return c; };
    s.dirichlet = [](const Point&) { return 0.0; };
    s.name = "constant";
    return s;
}

}  // namespace

TEST_CASE("unit paraboloid") {
    const auto field = diag_quadratic(Point(1.0, 1.0, 1.0));
    const auto spec = manufacture(field, OperatorKind::Quotient, Box::cube(3, 4.0));
    const auto u = on_b4(field.value);
    const auto r = doubling_report(u, spec);
    CHECK(r.n == 3);
    CHECK(std::abs(r.M1 - 3.0) <= 1e-10);
    CHECK(std::abs(r.M2 - 3.0) <= 1e-10);
    CHECK(std::abs(r.ratio - 0.75) <= 1e-10);
    CHECK(std::abs(r.dyn_margin - (1.0 / 3.0 + cn(3))) <= 1e-10);
    CHECK(std::abs(r.semiconvex_modulus - 1.0) <= 1e-10);
    CHECK(std::abs(r.min_sigma2 - 3.0) <= 1e-10);
    CHECK(r.two_convex);
    CHECK(r.condition_holds);
    CHECK(r.params_ordered);

    // W = (9 - r^2) exp(0.03 r^2) log 2 decreases in r, so the max sits at 0
    CHECK(std::abs(r.W_max - 9.0 * std::log(2.0)) <= 1e-10);
    CHECK(r.max_point == u.index(16, 16, 16));
    CHECK(r.diag.x.norm() <= 1e-12);
    CHECK_FALSE(r.diag.log_branch_active);
    CHECK(r.diag.critical_residual <= 1e-10);
    REQUIRE(r.diag.lambda.size() == 3u);
    for (double l : r.diag.lambda) CHECK(std::abs(l - 1.0) <= 1e-10);
    // grad f of sigma2/sigma1 at I_3: (sigma_{1;i}^2 - sigma_{2;i}) / sigma_1^2 = 1/3
    for (double g : r.diag.grad_f) CHECK(std::abs(g - 1.0 / 3.0) <= 1e-10);
}

TEST_CASE("anisotropic paraboloid") {
    const auto u = on_b4(diag_quadratic(Point(1.0, 1.0, 4.0)).value);
    CHECK(std::abs(sup_laplacian(u, 1.0) - 6.0) <= 1e-10);
    CHECK(std::abs(sup_laplacian(u, 2.0) - 6.0) <= 1e-10);
    // lambda_min / Delta u = 1/6
    CHECK(std::abs(dynamic_condition_margin(u, 3) - (1.0 / 6.0 + cn(3))) <= 1e-10);
}

TEST_CASE("radial quartic") {
    const auto field = radial_quartic();
    const auto u = on_b4(field.value);
    const double h = u.h();
    // second difference of x^4 is 12 x^2 + 2 h^2
    const double m1 = 3.0 + 5.0 / 3.0 + h * h / 2.0;
    const double m2 = 3.0 + 20.0 / 3.0 + h * h / 2.0;
    CHECK(std::abs(sup_laplacian(u, 1.0) - m1) <= 1e-10);
    CHECK(std::abs(sup_laplacian(u, 2.0) - m2) <= 1e-10);
    const auto spec = manufacture(field, OperatorKind::Quotient, Box::cube(3, 4.0));
    const auto r = doubling_report(u, spec);
    CHECK(std::abs(r.ratio - m2 / (1.0 + m1)) <= 1e-10);
    CHECK(r.condition_holds);
}

TEST_CASE("sup laplacian grows with the radius") {
    const auto u = on_b4(radial_quartic().value);
    double prev = 0.0;
    for (double rad = 0.25; rad <= 3.5; rad += 0.25) {
        const double m = sup_laplacian(u, rad);
        CHECK(m >= prev);
        prev = m;
    }
}

TEST_CASE("ball must fit") {
    const auto u = on_b4(radial_quartic().value);
    CHECK_THROWS_AS((void)sup_laplacian(u, 4.0), DomainError);
    CHECK_THROWS_AS((void)sup_laplacian(u, -1.0), DomainError);
    auto small = GridFunction::on_box(Box::cube(3, 1.0), 9);
    CHECK_THROWS_AS((void)sup_laplacian(small, 2.0), DomainError);
    CHECK_THROWS_AS((void)dynamic_condition_margin(u, 2), DomainError);
}

TEST_CASE("linear field") {
    const auto u = on_b4([](const Point& x) { return x[0] - 2.0 * x[2]; });
    CHECK(std::abs(sup_laplacian(u, 1.0)) <= 1e-12);
    CHECK_THROWS_AS((void)dynamic_condition_margin(u, 3), ConeViolation);
    CHECK_THROWS_AS((void)doubling_report(u, constant_psi(1.0)), ConeViolation);
}

TEST_CASE("non 2-convex field is flagged") {
    // Delta u = 1/2 > 0 but sigma2 = 1 - 3 = -2
    const auto u = on_b4(diag_quadratic(Point(1.0, 1.0, -1.5)).value);
    const auto r = doubling_report(u, constant_psi(1.0));
    CHECK_FALSE(r.two_convex);
    CHECK_FALSE(r.condition_holds);
    CHECK(std::abs(r.dyn_margin - (-3.0 + cn(3))) <= 1e-10);
    CHECK(std::abs(r.min_sigma2 + 2.0) <= 1e-10);
    CHECK(std::abs(r.semiconvex_modulus + 1.5) <= 1e-10);
}

TEST_CASE("test function options") {
    const auto field = diag_quadratic(Point(1.0, 1.0, 1.0));
    const auto spec = manufacture(field, OperatorKind::Quotient, Box::cube(3, 4.0));
    const auto u = on_b4(field.value);
    TestFunctionParams p;
    p.M1 = 3.0;
    p.alpha = 2.0;
    CHECK(std::abs(test_function_scan(u, p, spec).W_max - 81.0 * std::log(2.0)) <= 1e-9);
    p.alpha = 1.0;
    p.log_outside = true;
    // max{log 1, 2} = 2
    CHECK(std::abs(test_function_scan(u, p, spec).W_max - 18.0) <= 1e-9);
    p.gamma = 1.0;
    CHECK_THROWS_AS((void)test_function_scan(u, p, spec), DomainError);

    TestFunctionParams q;
    q.a = 0.2;
    CHECK_FALSE(q.ordered());
    CHECK(TestFunctionParams{}.ordered());
}

TEST_CASE("report serialization") {
    const auto field = diag_quadratic(Point(1.0, 1.0, 1.0));
    const auto spec = manufacture(field, OperatorKind::Quotient, Box::cube(3, 4.0));
    const auto r = doubling_report(on_b4(field.value, 17), spec);
    const auto j = nlohmann::json::parse(doubling_to_json(r, "para"));
    CHECK(j.at("instance_id") == "para");
    CHECK(j.at("ratio").get<double>() == doctest::Approx(0.75));
    CHECK(j.at("condition_holds").get<bool>());
    CHECK(doubling_csv_header() == "instance_id,M1,M2,ratio,dyn_margin,semiconvex_modulus,max_point,W_max\n");
    const auto row = doubling_csv_row("para", r);
    CHECK(row.rfind("para,", 0) == 0);
    CHECK(row.back() == '\n');
    CHECK(std::count(row.begin(), row.end(), ',') == 7);
}
