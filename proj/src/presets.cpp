#include "hqlab/presets.hpp"

#include <cmath>
#include <cstdio>

#include "hqlab/errors.hpp"

namespace hqlab {

namespace {

// 1/2 (x - c)^T diag(d) (x - c) + beta cos(k . x + phi)
ManufacturedField quadratic_wave(const std::string& name, Point d, Point c, double beta, Point k, double phi) {
    ManufacturedField f;
    f.name = name;
    f.value = [=](const Point& x) {
        const Point y = x - c;
        return 0.5 * y.dot(d.cwiseProduct(y)) + beta * std::cos(k.dot(x) + phi);
    };
    f.gradient = [=](const Point& x) {
        return Point(d.cwiseProduct(x - c) - beta * std::sin(k.dot(x) + phi) * k);
    };
    f.hessian = [=](const Point& x) {
        Eigen::Matrix3d h = d.asDiagonal();
        h -= beta * std::cos(k.dot(x) + phi) * (k * k.transpose());
        return h;
    };
    return f;
}

// |x|^2 / 2 + 0.1 sin(x0) cos(x1) + 0.05 exp(x2 / 2)
ManufacturedField smooth_bump(const std::string& name) {
    ManufacturedField f;
    f.name = name;
    f.value = [](const Point& x) {
        return 0.5 * x.squaredNorm() + 0.1 * std::sin(x[0]) * std::cos(x[1]) + 0.05 * std::exp(0.5 * x[2]);
    };
    f.gradient = [](const Point& x) {
        return Point(x[0] + 0.1 * std::cos(x[0]) * std::cos(x[1]), x[1] - 0.1 * std::sin(x[0]) * std::sin(x[1]),
                     x[2] + 0.025 * std::exp(0.5 * x[2]));
    };
    f.hessian = [](const Point& x) {
        Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
        const double sc = std::sin(x[0]) * std::cos(x[1]);
        h(0, 0) -= 0.1 * sc;
        h(1, 1) -= 0.1 * sc;
        h(0, 1) = h(1, 0) = -0.1 * std::cos(x[0]) * std::sin(x[1]);
        h(2, 2) += 0.0125 * std::exp(0.5 * x[2]);
        return h;
    };
    return f;
}

// The 2D presets ignore the third coordinate; grid points already have x2 = 0
// but the bump's exp term must not leak a constant Hessian entry.
ManufacturedField planar(ManufacturedField f) {
    auto v = f.value;
    auto g = f.gradient;
    auto h = f.hessian;
    f.value = [v](const Point& x) { return v(Point(x[0], x[1], 0.0)); };
    f.gradient = [g](const Point& x) {
        Point r = g(Point(x[0], x[1], 0.0));
        r[2] = 0.0;
        return r;
    };
    f.hessian = [h](const Point& x) {
        Eigen::Matrix3d m = h(Point(x[0], x[1], 0.0));
        m.row(2).setZero();
        m.col(2).setZero();
        return m;
    };
    return f;
}

struct FamilyRow {
    int dim;
    Point d;
    Point c;
    double beta;
    Point k;
    double phi;
};

// Shared geometry [-4, 4]^dim; amplitudes keep |beta| |k|^2 well below the
// smallest admissible eigenvalue so every member stays inside Gamma_2.
const FamilyRow kFamily[] = {
    {2, {1.0, 1.0, 0.0}, {0.0, 0.0, 0.0}, 0.0, {0.0, 0.0, 0.0}, 0.0},
    {2, {1.0, 2.0, 0.0}, {0.0, 0.0, 0.0}, 0.2, {0.5, 0.3, 0.0}, 0.0},
    {2, {2.0, 1.0, 0.0}, {0.0, 0.0, 0.0}, 0.3, {0.4, -0.4, 0.0}, 0.5},
    {2, {1.5, 1.5, 0.0}, {0.0, 0.0, 0.0}, 0.5, {0.6, 0.0, 0.0}, 1.0},
    {2, {1.0, 3.0, 0.0}, {0.0, 0.0, 0.0}, 0.4, {0.3, 0.5, 0.0}, 0.0},
    {2, {2.0, 2.0, 0.0}, {1.0, -0.5, 0.0}, 0.2, {0.5, 0.5, 0.0}, 0.3},
    {3, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, 0.0, {0.0, 0.0, 0.0}, 0.0},
    {3, {1.0, 1.0, -0.3}, {0.0, 0.0, 0.0}, 0.0, {0.0, 0.0, 0.0}, 0.0},
    {3, {2.0, 1.0, -0.4}, {0.0, 0.0, 0.0}, 0.2, {0.3, 0.3, 0.3}, 0.0},
    {3, {1.0, 2.0, 3.0}, {0.0, 0.0, 0.0}, 0.3, {0.5, 0.0, 0.4}, 0.7},
    {3, {1.0, 1.0, 0.2}, {0.0, 0.0, 0.0}, 0.3, {0.0, 0.4, 0.4}, 0.0},
    {3, {1.5, 1.0, -0.2}, {0.5, 0.5, 0.0}, 0.1, {0.4, -0.3, 0.2}, 0.2},
};

std::string family_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "doubling%02zu", i + 1);
    return buf;
}

}  // namespace

std::vector<std::string> doubling_family_names() {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::size(kFamily); ++i) out.push_back(family_name(i));
    return out;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out = {"quadratic2d", "quadratic3d", "bump2d",  "bump3d",
                                    "coupled2d",   "gradient2d",  "saddle3d"};
    for (const auto& n : doubling_family_names()) out.push_back(n);
    return out;
}

Preset find_preset(const std::string& name) {
    Preset p;
    p.name = name;
    const Point zero = Point::Zero();
    if (name == "quadratic2d") {
        p.dim = 2;
        p.exact = quadratic_wave(name, Point(1.0, 2.0, 0.0), zero, 0.0, zero, 0.0);
    } else if (name == "quadratic3d") {
        p.dim = 3;
        p.default_grid = 17;
        p.exact = quadratic_wave(name, Point(1.0, 1.0, 4.0), zero, 0.0, zero, 0.0);
    } else if (name == "bump2d") {
        p.dim = 2;
        p.default_grid = 65;
        p.exact = planar(smooth_bump(name));
    } else if (name == "bump3d") {
        p.dim = 3;
        p.exact = smooth_bump(name);
    } else if (name == "coupled2d" || name == "gradient2d") {
        p.dim = 2;
        p.default_grid = 65;
        p.exact = planar(smooth_bump(name));
        if (name == "gradient2d") {
            p.default_kind = OperatorKind::Sigma2;
            p.kind_fixed = true;
        }
    } else if (name == "saddle3d") {
        p.dim = 3;
        p.default_grid = 17;
        p.exact = quadratic_wave(name, Point(1.0, 1.0, -1.5), zero, 0.0, zero, 0.0);
    } else {
        const auto fam = doubling_family_names();
        std::size_t i = 0;
        while (i < fam.size() && fam[i] != name) ++i;
        if (i == fam.size()) throw UsageError("unknown preset '" + name + "'");
        const auto& row = kFamily[i];
        p.dim = row.dim;
        p.default_grid = row.dim == 2 ? 65 : 33;
        p.exact = quadratic_wave(name, row.d, row.c, row.beta, row.k, row.phi);
        if (row.dim == 2) p.exact = planar(p.exact);
        p.domain = Box::cube(row.dim, 4.0);
        return p;
    }
    p.domain = Box::cube(p.dim, 1.0);
    return p;
}

ProblemSpec make_problem(const Preset& preset, std::optional<OperatorKind> kind) {
    const OperatorKind k = kind.value_or(preset.default_kind);
    if (preset.kind_fixed && k != preset.default_kind) {
        throw DomainError("preset '" + preset.name + "' has gradient-dependent psi, which needs --kind sigma2");
    }
    ProblemSpec spec = manufacture(preset.exact, k, preset.domain);
    if (preset.name == "coupled2d") {
        // psi(x, u) = F(D^2 u*) exp((u - u*) / 2): same solution, psi_u != 0.
        auto base = spec.psi;
        auto star = preset.exact.value;
        spec.psi = [base, star](const Point& x, double u, const Point& p) {
            return base(x, u, p) * std::exp(0.5 * (u - star(x)));
        };
        spec.psi_u = nullptr;
    } else if (preset.name == "gradient2d") {
        // psi(x, p) = sigma_2(D^2 u*) (1 + |p|^2) / (1 + |grad u*|^2).
        auto base = spec.psi;
        auto grad = preset.exact.gradient;
        spec.gradient_dependent = true;
        spec.psi = [base, grad](const Point& x, double u, const Point& p) {
            return base(x, u, p) * (1.0 + p.squaredNorm()) / (1.0 + grad(x).squaredNorm());
        };
        spec.psi_p = nullptr;
    }
    return spec;
}

}  // namespace hqlab
