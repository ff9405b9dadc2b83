#include <doctest.h>

#include <cmath>
#include <limits>

#include "hqlab/errors.hpp"
#include "hqlab/lagrange.hpp"

using namespace hqlab;

namespace {

ConstraintData worked() {
    ConstraintData c;
    c.fvec = Eigen::Vector3d(0.2, 0.3, 0.5);
    c.i = 0;
    c.B = 1.0;
    c.G = 0.0;
    return c;
}

}  // namespace

TEST_CASE("worked instance") {
    const auto c = worked();
    const auto s = closed_form_minimize(c);
    CHECK(std::abs(s.t[0] + 60.0 / 17) <= 1e-12);
    CHECK(std::abs(s.t[1] - 5.0 / 17) <= 1e-12);
    CHECK(std::abs(s.t[2] - 55.0 / 17) <= 1e-12);
    CHECK(std::abs(s.qmin - 15.0 / 0.34) <= 1e-9);
    CHECK(std::abs(s.qmin - lagrange_objective(s.t, 0)) <= 1e-12 * s.qmin);
    CHECK(constraint_residual(c, s.t) <= 1e-14);
    // R = 0.38 + 0.08, S = 1 + 0.4, denom = 5 R - S^2
    CHECK(s.R == doctest::Approx(0.46));
    CHECK(s.S == doctest::Approx(1.4));
    CHECK(s.denom == doctest::Approx(0.34));

    const auto k = kkt_oracle(c);
    CHECK((k.t - s.t).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK(std::abs(k.mu1 - s.mu1) <= 1e-10 * (1.0 + std::abs(s.mu1)));
    CHECK(std::abs(k.mu2 - s.mu2) <= 1e-10 * (1.0 + std::abs(s.mu2)));

    const double gap = feasible_sample_check(c, 10000, 1);
    CHECK(gap >= -1e-10);
    CHECK(gap < 1.0);
    CHECK(feasible_sample_check(c, 0, 1) == std::numeric_limits<double>::infinity());
}

TEST_CASE("zero data and degenerate constraints") {
    auto c = worked();
    c.B = 0.0;
    const auto s = closed_form_minimize(c);
    CHECK(s.t.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(s.qmin == 0.0);
    CHECK(kkt_oracle(c).t.lpNorm<Eigen::Infinity>() == 0.0);

    ConstraintData d;
    d.fvec = Eigen::Vector3d(0.5, 0.5, 0.5);
    d.B = 2.0;
    CHECK_THROWS_AS((void)closed_form_minimize(d), DegenerateError);
    CHECK_THROWS_AS((void)kkt_oracle(d), DegenerateError);
    CHECK_THROWS_AS((void)feasible_sample_check(d, 10, 1), DegenerateError);

    d.fvec = Eigen::Vector3d(0.2, 0.3, 0.5);
    d.i = 3;
    CHECK_THROWS_AS((void)closed_form_minimize(d), DomainError);
}

TEST_CASE("n = 2 feasible point is unique") {
    ConstraintData c;
    c.fvec = Eigen::Vector2d(0.4, 0.6);
    c.i = 0;
    c.B = 1.3;
    c.G = -0.7;
    // 0.4 t1 + 0.6 t2 = B, t1 + t2 = G
    const double t2 = (c.B - 0.4 * c.G) / 0.2;
    const double t1 = c.G - t2;
    for (const auto& s : {closed_form_minimize(c), kkt_oracle(c)}) {
        CHECK(s.t[0] == doctest::Approx(t1).epsilon(1e-12));
        CHECK(s.t[1] == doctest::Approx(t2).epsilon(1e-12));
        CHECK(s.qmin == doctest::Approx(t1 * t1 + 3 * t2 * t2).epsilon(1e-12));
    }
    CHECK_THROWS_AS((void)feasible_sample_check(c, 10, 1), DomainError);
}

TEST_CASE("curvature along the feasible set") {
    const auto c = worked();
    const auto s = closed_form_minimize(c);
    // null space of [f; 1] for f = (0.2, 0.3, 0.5): f x (1, 1, 1) ~ (2, -3, 1)
    Eigen::Vector3d d(2, -3, 1);
    d.normalize();
    CHECK(std::abs(c.fvec.dot(d)) <= 1e-15);
    CHECK(std::abs(d.sum()) <= 1e-15);
    const double up = lagrange_objective(s.t + d, 0) - s.qmin;
    const double down = lagrange_objective(s.t - d, 0) - s.qmin;
    const double curvature = 3.0 - 2.0 * d[0] * d[0];
    CHECK(up == doctest::Approx(curvature).epsilon(1e-12));
    CHECK(down == doctest::Approx(curvature).epsilon(1e-12));
}

TEST_CASE("closed form against the KKT oracle on random instances") {
    const auto inst = sample_instances(10000, 3);
    REQUIRE(inst.size() == 10000);
    int failed = 0;
    for (std::size_t m = 0; m < inst.size(); ++m) {
        const auto& c = inst[m];
        CHECK(c.n() >= 3);
        CHECK(c.n() <= 8);
        const auto s = closed_form_minimize(c);
        const auto k = kkt_oracle(c);
        const double tinf = s.t.lpNorm<Eigen::Infinity>();
        if ((s.t - k.t).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + tinf)) ++failed;
        if (constraint_residual(c, s.t) > 1e-10 * (1.0 + std::abs(c.B) + std::abs(c.G))) ++failed;
        if (std::abs(s.qmin - lagrange_objective(s.t, c.i)) > 1e-10 * (1.0 + s.qmin)) ++failed;
        if (!(s.qmin > 0.0)) ++failed;
        const double cross = std::abs(s.qmin - (3.0 * s.R * c.G * c.G + 3.0 * (c.n() + 2.0) * c.B * c.B) / s.denom);
        if (cross > (6.0 * s.S * std::abs(c.G * c.B)) / s.denom * (1.0 + 1e-12) + 1e-12 * s.qmin) ++failed;
        if (!compare_instance(static_cast<long>(m), c).pass) ++failed;
    }
    CHECK(failed == 0);
}

TEST_CASE("feasible sampling never beats the closed form") {
    const auto inst = sample_instances(30, 77);
    for (std::size_t m = 0; m < inst.size(); ++m) {
        CHECK(feasible_sample_check(inst[m], 2000, m) >= -1e-10);
    }
    // local probes get close to the minimum
    CHECK(feasible_sample_check(worked(), 1000, 3) < 1e-6);
}

TEST_CASE("sample_instances is deterministic") {
    const auto a = sample_instances(20, 5);
    const auto b = sample_instances(20, 5);
    CHECK(instances_to_jsonl(a) == instances_to_jsonl(b));
    CHECK(instances_to_jsonl(a) != instances_to_jsonl(sample_instances(20, 6)));
    for (const auto& c : sample_instances(50, 8, 3, 4, 1.0, 1e-2)) {
        CHECK(c.n() <= 4);
        CHECK(std::abs(c.B) <= 1.0);
        CHECK(closed_form_minimize(c).denom >= 1e-2);
    }
}

TEST_CASE("instance file round trip") {
    const auto a = sample_instances(5, 12);
    const auto b = parse_instances("# header\n\n" + instances_to_jsonl(a));
    REQUIRE(b.size() == a.size());
    for (std::size_t m = 0; m < a.size(); ++m) {
        CHECK(a[m].fvec == b[m].fvec);
        CHECK(a[m].i == b[m].i);
        CHECK(a[m].B == b[m].B);
        CHECK(a[m].G == b[m].G);
    }
    const auto w = parse_instances(R"({"n":3,"fvec":[0.2,0.3,0.5],"i":1,"B":1,"G":0})");
    REQUIRE(w.size() == 1);
    CHECK(w[0].i == 0);
    CHECK(closed_form_minimize(w[0]).qmin == doctest::Approx(15.0 / 0.34));

    CHECK_THROWS_AS((void)parse_instances(R"({"n":3,"fvec":[0.2,0.3,0.5],"i":1,"B":1,"G":0,"x":2})"), UsageError);
    CHECK_THROWS_AS((void)parse_instances(R"({"n":2,"fvec":[0.2,0.3,0.5],"i":1,"B":1,"G":0})"), UsageError);
    CHECK_THROWS_AS((void)parse_instances(R"({"n":3,"fvec":[0.2,0.3,0.5],"i":4,"B":1,"G":0})"), UsageError);
    CHECK_THROWS_AS((void)parse_instances(R"({"n":3,"fvec":[0.2,0.3,0.5],"i":1,"B":1})"), UsageError);
    CHECK_THROWS_AS((void)parse_instances("{not json"), UsageError);
}

TEST_CASE("record csv") {
    MinimizeRecord r;
    r.instance_id = 4;
    r.qmin_closed = 0.5;
    r.qmin_kkt = 0.5;
    r.max_t_diff = 0.0;
    r.constraint_residual = 1e-17;
    r.pass = true;
    CHECK(records_to_csv({r}) ==
          "instance_id,qmin_closed,qmin_kkt,max_t_diff,constraint_residual,pass\n4,0.5,0.5,0,1.0000000000000001e-17,true\n");
}
