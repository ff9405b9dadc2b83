#include "hqlab/estimates.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "hqlab/errors.hpp"
#include "hqlab/inequality.hpp"

namespace hqlab {

namespace {

struct Eig {
    Eigen::Vector3d values = Eigen::Vector3d::Zero();   // descending, first d entries
    Eigen::Matrix3d vectors = Eigen::Matrix3d::Zero();  // matching columns
};

// Closed-form symmetric eigensolver for the leading d x d block.
Eig eig_desc(const Eigen::Matrix3d& m, int d) {
    Eig e;
    if (d == 2) {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es;
        es.computeDirect(m.topLeftCorner<2, 2>());
        for (int a = 0; a < 2; ++a) {
            e.values[a] = es.eigenvalues()[1 - a];
            e.vectors.block<2, 1>(0, a) = es.eigenvectors().col(1 - a);
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
        es.computeDirect(m);
        for (int a = 0; a < 3; ++a) {
            e.values[a] = es.eigenvalues()[2 - a];
            e.vectors.col(a) = es.eigenvectors().col(2 - a);
        }
    }
    return e;
}

double laplacian(const GridFunction& u, long p) {
    double s = 0.0;
    for (int a = 0; a < u.dim(); ++a) s += u[p + u.stride(a)] - 2.0 * u[p] + u[p - u.stride(a)];
    return s / (u.h() * u.h());
}

void require_positive_laplacian(const GridFunction& u, const char* who) {
    for (long p = 0; p < u.size(); ++p) {
        if (u.is_boundary(p)) continue;
        const double lap = laplacian(u, p);
        if (!(lap > 0.0)) {
            std::ostringstream os;
            os << who << ": Delta u = " << lap << " <= 0 at grid index " << p << " (field is not 2-convex)";
            throw ConeViolation(os.str(), p);
        }
    }
}

bool stencil_interior(const GridFunction& u, long p) {
    if (u.is_boundary(p)) return false;
    for (int a = 0; a < u.dim(); ++a) {
        if (u.is_boundary(p + u.stride(a)) || u.is_boundary(p - u.stride(a))) return false;
    }
    return true;
}

std::vector<double> head(const Eigen::Vector3d& v, int d) { return std::vector<double>(v.data(), v.data() + d); }

}  // namespace

double sup_laplacian(const GridFunction& u, double radius) {
    if (!(radius > 0.0)) throw DomainError("sup_laplacian: radius must be positive");
    for (int a = 0; a < u.dim(); ++a) {
        const double lo = u.origin()[a] + u.h();
        const double hi = u.origin()[a] + (u.shape(a) - 2) * u.h();
        if (-radius < lo - 1e-12 || radius > hi + 1e-12) {
            throw DomainError("sup_laplacian: ball of radius " + std::to_string(radius) +
                              " does not fit inside the grid interior");
        }
    }
    const double r2 = radius * radius * (1.0 + 1e-12);
    double best = -std::numeric_limits<double>::infinity();
    for (long p = 0; p < u.size(); ++p) {
        if (u.is_boundary(p) || u.point(p).squaredNorm() > r2) continue;
        best = std::max(best, laplacian(u, p));
    }
    return best;
}

double dynamic_condition_margin(const GridFunction& u, int n) {
    if (n != u.dim()) throw DomainError("dynamic_condition_margin: n must equal the grid dimension");
    require_positive_laplacian(u, "dynamic_condition_margin");
    double m = std::numeric_limits<double>::infinity();
    Eigen::Matrix3d h;
    for (long p = 0; p < u.size(); ++p) {
        if (u.is_boundary(p)) continue;
        discrete_hessian(u, p, h);
        const auto e = eig_desc(h, u.dim());
        m = std::min(m, e.values[u.dim() - 1] / laplacian(u, p));
    }
    return m + cn(n);
}

ScanResult test_function_scan(const GridFunction& u, const TestFunctionParams& params, const ProblemSpec& spec) {
    if (!(params.gamma >= 2.0)) throw DomainError("test_function_scan: gamma must be >= 2");
    if (!(params.alpha > 0.0 && params.a > 0.0 && params.b > 0.0)) {
        throw DomainError("test_function_scan: alpha, a, b must be positive");
    }
    if (!(params.M1 > 0.0)) throw DomainError("test_function_scan: M1 must be positive");
    const int d = u.dim();
    const double rs2 = params.r_scan * params.r_scan;

    auto log_factor = [&](double lap) {
        const double ratio = lap / params.M1;
        if (params.log_outside) return std::max(ratio > 0.0 ? std::log(ratio) : -std::numeric_limits<double>::infinity(),
                                                params.gamma);
        return std::log(std::max(ratio, params.gamma));
    };

    ScanResult res;
    res.W_max = -std::numeric_limits<double>::infinity();
    for (long p = 0; p < u.size(); ++p) {
        if (u.is_boundary(p)) continue;
        const Point x = u.point(p);
        const double rho = rs2 - x.squaredNorm();
        if (!(rho > 0.0)) continue;
        const Point g = gradient_at(u, p);
        const double w = std::pow(rho, params.alpha) *
                         std::exp(params.a * (x.dot(g) - u[p]) + 0.5 * params.b * g.squaredNorm()) *
                         log_factor(laplacian(u, p));
        if (w > res.W_max) {
            res.W_max = w;
            res.max_index = p;
        }
    }
    if (res.max_index < 0) throw DomainError("test_function_scan: no interior point inside the scan ball");

    auto& dg = res.diag;
    const long p = res.max_index;
    dg.index = p;
    dg.x = u.point(p);
    Eigen::Matrix3d h;
    discrete_hessian(u, p, h);
    const auto e = eig_desc(h, d);
    const Eigen::Matrix3d q = e.vectors;
    const Point grad = gradient_at(u, p);
    const Point xt = q.transpose() * dg.x;
    const Point gt = q.transpose() * grad;
    const double rho = rs2 - dg.x.squaredNorm();
    dg.lambda = head(e.values, d);
    dg.laplacian = laplacian(u, p);
    const auto qe = quotient_eval(Spectrum(dg.lambda), spec.kind);
    dg.grad_f.assign(qe.grad.data(), qe.grad.data() + d);
    for (int i = 0; i < d; ++i) {
        dg.A.push_back(params.alpha * (-2.0 * xt[i]) / rho + params.a * xt[i] * e.values[i] +
                       params.b * gt[i] * e.values[i]);
    }
    const Point g_psi = spec.gradient_dependent ? grad : Point::Zero();
    const Point bx = eval_psi_x(spec, dg.x, u[p], g_psi) + eval_psi_u(spec, dg.x, u[p], g_psi) * grad +
                     h * eval_psi_p(spec, dg.x, u[p], g_psi);
    const Point bt = q.transpose() * bx;
    dg.B = head(bt, d);

    dg.U = std::log(dg.laplacian / params.M1);
    const double threshold = params.log_outside ? std::exp(params.gamma + 1.0) : params.gamma + 1.0;
    dg.log_branch_active = dg.laplacian >= threshold * params.M1;
    double worst = 0.0;
    if (dg.log_branch_active) {
        if (stencil_interior(u, p)) {
            Point dlap = Point::Zero();
            for (int a = 0; a < d; ++a) {
                const long s = u.stride(a);
                dlap[a] = (laplacian(u, p + s) - laplacian(u, p - s)) / (2.0 * u.h());
            }
            const Point dt = q.transpose() * dlap;
            for (int i = 0; i < d; ++i) worst = std::max(worst, std::abs(dt[i] / (dg.U * dg.laplacian) + dg.A[i]));
        } else {
            worst = std::numeric_limits<double>::quiet_NaN();
        }
    } else {
        for (double v : dg.A) worst = std::max(worst, std::abs(v));
    }
    dg.critical_residual = worst;
    return res;
}

DoublingReport doubling_report(const GridFunction& u, const ProblemSpec& spec, TestFunctionParams params) {
    require_positive_laplacian(u, "doubling_report");
    DoublingReport r;
    r.n = u.dim();
    r.M1 = sup_laplacian(u, params.r_inner);
    r.M2 = sup_laplacian(u, params.r_outer);
    r.ratio = r.M2 / (1.0 + r.M1);
    r.dyn_margin = dynamic_condition_margin(u, r.n);
    r.condition_holds = r.dyn_margin >= 0.0;

    r.semiconvex_modulus = std::numeric_limits<double>::infinity();
    Eigen::Matrix3d h;
    for (long p = 0; p < u.size(); ++p) {
        if (u.is_boundary(p)) continue;
        discrete_hessian(u, p, h);
        r.semiconvex_modulus = std::min(r.semiconvex_modulus, eig_desc(h, r.n).values[r.n - 1]);
    }
    const auto cs = cone_stats(u);
    r.min_sigma2 = cs.min_sigma2;
    r.two_convex = cs.worst_index < 0;

    if (!(params.M1 > 0.0)) params.M1 = r.M1;
    r.params_ordered = params.ordered();
    const auto scan = test_function_scan(u, params, spec);
    r.W_max = scan.W_max;
    r.max_point = scan.max_index;
    r.diag = scan.diag;
    return r;
}

std::string doubling_to_json(const DoublingReport& r, const std::string& instance_id) {
    nlohmann::ordered_json j;
    j["instance_id"] = instance_id;
    j["n"] = r.n;
    j["M1"] = r.M1;
    j["M2"] = r.M2;
    j["ratio"] = r.ratio;
    j["dyn_margin"] = r.dyn_margin;
    j["condition_holds"] = r.condition_holds;
    j["semiconvex_modulus"] = r.semiconvex_modulus;
    j["min_sigma2"] = r.min_sigma2;
    j["two_convex"] = r.two_convex;
    j["params_ordered"] = r.params_ordered;
    j["W_max"] = r.W_max;
    j["max_point"] = r.max_point;
    auto& d = j["max_point_diagnostics"];
    d["x"] = std::vector<double>(r.diag.x.data(), r.diag.x.data() + r.n);
    d["lambda"] = r.diag.lambda;
    d["grad_f"] = r.diag.grad_f;
    d["A"] = r.diag.A;
    d["B"] = r.diag.B;
    d["laplacian"] = r.diag.laplacian;
    d["U"] = r.diag.U;
    d["log_branch_active"] = r.diag.log_branch_active;
    d["critical_residual"] = r.diag.critical_residual;
    return j.dump(2);
}

std::string doubling_csv_header() { return "instance_id,M1,M2,ratio,dyn_margin,semiconvex_modulus,max_point,W_max\n"; }

std::string doubling_csv_row(const std::string& instance_id, const DoublingReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%ld,%.17g\n", instance_id.c_str(), r.M1, r.M2,
                  r.ratio, r.dyn_margin, r.semiconvex_modulus, r.max_point, r.W_max);
    return buf;
}

}  // namespace hqlab
