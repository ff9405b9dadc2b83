#include "hqlab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "hqlab/errors.hpp"

namespace hqlab {

namespace {

struct Invariants {
    double s1;
    double s2;
};

Invariants invariants(const Eigen::Matrix3d& m, int d) {
    Invariants v{0.0, 0.0};
    for (int a = 0; a < d; ++a) {
        v.s1 += m(a, a);
        for (int b = a + 1; b < d; ++b) v.s2 += m(a, a) * m(b, b) - m(a, b) * m(b, a);
    }
    return v;
}

void validate_spec(const ProblemSpec& spec) {
    if (spec.domain.dim != 2 && spec.domain.dim != 3) throw DomainError("problem: dim must be 2 or 3");
    if (!spec.psi) throw DomainError("problem: psi is not set");
    if (!spec.dirichlet) throw DomainError("problem: Dirichlet data is not set");
    if (spec.gradient_dependent && spec.kind == OperatorKind::Quotient) {
        throw DomainError("problem: psi may depend on the gradient only for the sigma2 operator");
    }
}

double inf_norm_interior(const GridFunction& r) {
    double m = 0.0;
    for (long p = 0; p < r.size(); ++p) {
        if (!r.is_boundary(p)) m = std::max(m, std::abs(r[p]));
    }
    return m;
}

Point grad_if_needed(const GridFunction& u, const ProblemSpec& spec, long p) {
    return spec.gradient_dependent ? gradient_at(u, p) : Point::Zero();
}

// Dense index of interior points.
std::vector<long> interior_ids(const GridFunction& u) {
    std::vector<long> id(static_cast<std::size_t>(u.size()), -1);
    long next = 0;
    for (long p = 0; p < u.size(); ++p) {
        if (!u.is_boundary(p)) id[static_cast<std::size_t>(p)] = next++;
    }
    return id;
}

// Discrete harmonic function with the given ring values.
Eigen::VectorXd harmonic_extension(const GridFunction& ring) {
    const auto id = interior_ids(ring);
    const auto inside = ring.interior();
    const auto m = static_cast<Eigen::Index>(inside.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(inside.size() * 7);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (Eigen::Index row = 0; row < m; ++row) {
        const long p = inside[static_cast<std::size_t>(row)];
        trip.emplace_back(row, row, 2.0 * ring.dim());
        for (int a = 0; a < ring.dim(); ++a) {
            for (long q : {p + ring.stride(a), p - ring.stride(a)}) {
                const long col = id[static_cast<std::size_t>(q)];
                if (col >= 0) {
                    trip.emplace_back(row, col, -1.0);
                } else {
                    rhs[row] += ring[q];
                }
            }
        }
    }
    Eigen::SparseMatrix<double> a(m, m);
    a.setFromTriplets(trip.begin(), trip.end());
    if (ring.dim() == 2) {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
        return lu.solve(rhs);
    }
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg(a);
    cg.setTolerance(1e-13);
    return cg.solve(rhs);
}

}  // namespace

double eval_psi_u(const ProblemSpec& spec, const Point& x, double u, const Point& p) {
    if (spec.psi_u) return spec.psi_u(x, u, p);
    const double step = 1e-6 * (1.0 + std::abs(u));
    return (spec.psi(x, u + step, p) - spec.psi(x, u, p)) / step;
}

Point eval_psi_p(const ProblemSpec& spec, const Point& x, double u, const Point& p) {
    if (!spec.gradient_dependent) return Point::Zero();
    if (spec.psi_p) return spec.psi_p(x, u, p);
    Point g = Point::Zero();
    const double base = spec.psi(x, u, p);
    for (int a = 0; a < spec.domain.dim; ++a) {
        Point q = p;
        const double step = 1e-6 * (1.0 + std::abs(p[a]));
        q[a] += step;
        g[a] = (spec.psi(x, u, q) - base) / step;
    }
    return g;
}

Point eval_psi_x(const ProblemSpec& spec, const Point& x, double u, const Point& p) {
    if (spec.psi_x) return spec.psi_x(x, u, p);
    Point g = Point::Zero();
    const double base = spec.psi(x, u, p);
    for (int a = 0; a < spec.domain.dim; ++a) {
        Point y = x;
        const double step = 1e-6 * (1.0 + std::abs(x[a]));
        y[a] += step;
        g[a] = (spec.psi(y, u, p) - base) / step;
    }
    return g;
}

GridFunction residual(const GridFunction& u, const ProblemSpec& spec, bool cone_guard) {
    validate_spec(spec);
    if (u.dim() != spec.domain.dim) throw DomainError("residual: grid and problem dimensions differ");
    GridFunction r = u.zeros_like();
    Eigen::Matrix3d m;
    const int d = u.dim();
    for (long p = 0; p < u.size(); ++p) {
        if (u.is_boundary(p)) continue;
        discrete_hessian(u, p, m);
        const auto inv = invariants(m, d);
        if ((cone_guard && !(inv.s1 > 0.0 && inv.s2 > 0.0)) ||
            (spec.kind == OperatorKind::Quotient && !(inv.s1 > 0.0))) {
            std::ostringstream os;
            os << "residual: discrete Hessian outside Gamma_2 at grid index " << p << " (sigma_1 = " << inv.s1
               << ", sigma_2 = " << inv.s2 << ")";
            throw ConeViolation(os.str(), p);
        }
        const double f = spec.kind == OperatorKind::Quotient ? inv.s2 / inv.s1 : inv.s2;
        r[p] = f - spec.psi(u.point(p), u[p], grad_if_needed(u, spec, p));
    }
    return r;
}

Eigen::SparseMatrix<double> assemble_jacobian(const GridFunction& u, const ProblemSpec& spec) {
    validate_spec(spec);
    const auto id = interior_ids(u);
    const auto inside = u.interior();
    const auto m = static_cast<Eigen::Index>(inside.size());
    const int d = u.dim();
    const double inv_h2 = 1.0 / (u.h() * u.h());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(inside.size() * (d == 2 ? 9 : 19));
    Eigen::Matrix3d hess;
    auto add = [&](Eigen::Index row, long q, double v) {
        const long col = id[static_cast<std::size_t>(q)];
        if (col >= 0) trip.emplace_back(row, col, v);
    };
    for (Eigen::Index row = 0; row < m; ++row) {
        const long p = inside[static_cast<std::size_t>(row)];
        discrete_hessian(u, p, hess);
        const Eigen::MatrixXd df = matrix_derivative(hess.topLeftCorner(d, d), spec.kind);
        for (int a = 0; a < d; ++a) {
            const long sa = u.stride(a);
            const double c = df(a, a) * inv_h2;
            add(row, p + sa, c);
            add(row, p - sa, c);
            add(row, p, -2.0 * c);
            for (int b = a + 1; b < d; ++b) {
                const long sb = u.stride(b);
                // F^{ab} and F^{ba} both multiply the same cross stencil.
                const double e = 0.5 * df(a, b) * inv_h2;
                add(row, p + sa + sb, e);
                add(row, p - sa - sb, e);
                add(row, p + sa - sb, -e);
                add(row, p - sa + sb, -e);
            }
        }
        const Point x = u.point(p);
        const Point g = grad_if_needed(u, spec, p);
        add(row, p, -eval_psi_u(spec, x, u[p], g));
        if (spec.gradient_dependent) {
            const Point pp = eval_psi_p(spec, x, u[p], g);
            for (int a = 0; a < d; ++a) {
                const long sa = u.stride(a);
                add(row, p + sa, -pp[a] / (2.0 * u.h()));
                add(row, p - sa, pp[a] / (2.0 * u.h()));
            }
        }
    }
    Eigen::SparseMatrix<double> j(m, m);
    j.setFromTriplets(trip.begin(), trip.end());
    return j;
}

ConeStats cone_stats(const GridFunction& u) {
    ConeStats s;
    s.min_sigma1 = std::numeric_limits<double>::infinity();
    s.min_sigma2 = std::numeric_limits<double>::infinity();
    Eigen::Matrix3d m;
    for (long p = 0; p < u.size(); ++p) {
        if (u.is_boundary(p)) continue;
        discrete_hessian(u, p, m);
        const auto inv = invariants(m, u.dim());
        s.min_sigma1 = std::min(s.min_sigma1, inv.s1);
        s.min_sigma2 = std::min(s.min_sigma2, inv.s2);
        if (s.worst_index < 0 && !(inv.s1 > 0.0 && inv.s2 > 0.0)) s.worst_index = p;
    }
    return s;
}

GridFunction quadratic_fit_guess(const ProblemSpec& spec, int grid_points) {
    validate_spec(spec);
    GridFunction u = GridFunction::on_box(spec.domain, grid_points);
    const int d = u.dim();
    Point center = Point::Zero();
    double half = 0.0;
    for (int a = 0; a < d; ++a) {
        center[a] = 0.5 * (spec.domain.lo[a] + spec.domain.hi[a]);
        half = std::max(half, 0.5 * (spec.domain.hi[a] - spec.domain.lo[a]));
    }

    // Basis 1, y_a, y_a y_b (a <= b) in y = (x - center) / half.
    const int nb = 1 + d + d * (d + 1) / 2;
    auto basis = [&](const Point& x, auto&& row) {
        const Point y = (x - center) / half;
        int k = 0;
        row[k++] = 1.0;
        for (int a = 0; a < d; ++a) row[k++] = y[a];
        for (int a = 0; a < d; ++a) {
            for (int b = a; b < d; ++b) row[k++] = y[a] * y[b];
        }
    };
    std::vector<long> ring;
    for (long p = 0; p < u.size(); ++p) {
        if (u.is_boundary(p)) ring.push_back(p);
    }
    Eigen::MatrixXd a(static_cast<Eigen::Index>(ring.size()), nb);
    Eigen::VectorXd g(static_cast<Eigen::Index>(ring.size()));
    for (std::size_t r = 0; r < ring.size(); ++r) {
        const Point x = u.point(ring[r]);
        basis(x, a.row(static_cast<Eigen::Index>(r)));
        g[static_cast<Eigen::Index>(r)] = spec.dirichlet(x);
        u[ring[r]] = g[static_cast<Eigen::Index>(r)];
    }
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(g);

    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
    {
        int k = 1 + d;
        for (int x = 0; x < d; ++x) {
            for (int y = x; y < d; ++y) {
                const double c = coef[k++] / (half * half);
                if (x == y) {
                    hess(x, x) = 2.0 * c;
                } else {
                    hess(x, y) = c;
                    hess(y, x) = c;
                }
            }
        }
    }
    const double range = g.maxCoeff() - g.minCoeff();
    const double scale = std::max({hess.norm(), range / (half * half), 1e-8});

    // Smallest delta with hess + delta I in Gamma_2, then a margin of 1e-2 scale.
    double delta = 0.0;
    {
        const auto inv = invariants(hess, d);
        const double dd = d;
        if (!(inv.s1 > 1e-2 * scale && inv.s2 > 1e-4 * scale * scale)) {
            // sigma_2(H + t I) = s2 + (d-1) s1 t + d(d-1)/2 t^2
            const double qa = 0.5 * dd * (dd - 1.0);
            const double qb = (dd - 1.0) * inv.s1;
            const double root = (-qb + std::sqrt(std::max(0.0, qb * qb - 4.0 * qa * inv.s2))) / (2.0 * qa);
            delta = std::max({root, -inv.s1 / dd, 0.0}) + 1e-2 * scale;
        }
    }

    GridFunction ring_misfit = u.zeros_like();
    Eigen::RowVectorXd row(nb);
    for (int attempt = 0; attempt < 40; ++attempt) {
        auto quad = [&](const Point& x) {
            basis(x, row);
            return row.dot(coef) + 0.5 * delta * (x - center).squaredNorm();
        };
        for (long p : ring) ring_misfit[p] = u[p] - quad(u.point(p));
        const Eigen::VectorXd e = harmonic_extension(ring_misfit);
        Eigen::Index k = 0;
        for (long p = 0; p < u.size(); ++p) {
            if (!u.is_boundary(p)) u[p] = quad(u.point(p)) + e[k++];
        }
        if (cone_stats(u).worst_index < 0) break;
        delta = delta == 0.0 ? 1e-2 * scale : 2.0 * delta;
    }
    return u;
}

SolveResult newton_solve(const ProblemSpec& spec, const SolverConfig& cfg) {
    validate_spec(spec);
    if (!(cfg.residual_tol > 0.0)) throw DomainError("newton_solve: residual_tol must be positive");
    if (!(cfg.damping > 0.0 && cfg.damping < 1.0)) throw DomainError("newton_solve: damping must lie in (0, 1)");

    GridFunction u = [&] {
        if (cfg.initial_guess == InitialGuess::QuadraticFit) return quadratic_fit_guess(spec, cfg.grid_points);
        if (!cfg.initial) throw DomainError("newton_solve: SUPPLIED initial guess is missing");
        GridFunction v = *cfg.initial;
        const GridFunction ref = GridFunction::on_box(spec.domain, cfg.grid_points);
        if (v.shape() != ref.shape() || v.dim() != ref.dim() || std::abs(v.h() - ref.h()) > 1e-12 * ref.h()) {
            throw DomainError("newton_solve: supplied initial guess does not match the grid");
        }
        for (long p = 0; p < v.size(); ++p) {
            if (v.is_boundary(p)) v[p] = spec.dirichlet(v.point(p));
        }
        return v;
    }();

    for (long p = 0; p < u.size(); ++p) {
        if (u.is_boundary(p)) continue;
        const double v = spec.psi(u.point(p), u[p], grad_if_needed(u, spec, p));
        if (!(v > 0.0)) {
            std::ostringstream os;
            os << "newton_solve: psi = " << v << " is not positive at grid index " << p;
            throw DomainError(os.str());
        }
    }
    if (cfg.cone_guard) {
        const auto st = cone_stats(u);
        if (st.worst_index >= 0) {
            throw ConeViolation("newton_solve: initial guess is outside Gamma_2", st.worst_index);
        }
    }

    SolveReport rep;
    GridFunction r = residual(u, spec, cfg.cone_guard);
    double norm = inf_norm_interior(r);
    rep.residual_history.push_back(norm);
    const auto inside = u.interior();
    const auto m = static_cast<Eigen::Index>(inside.size());

    for (int it = 0; it < cfg.max_newton_iters && norm > cfg.residual_tol; ++it) {
        const Eigen::SparseMatrix<double> jac = assemble_jacobian(u, spec);
        Eigen::VectorXd rhs(m);
        for (Eigen::Index k = 0; k < m; ++k) rhs[k] = -r[inside[static_cast<std::size_t>(k)]];
        Eigen::VectorXd step;
        if (u.dim() == 2) {
            Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
            lu.compute(jac);
            if (lu.info() != Eigen::Success) {
                rep.message = "linear solve failed (singular Jacobian)";
                break;
            }
            step = lu.solve(rhs);
        } else {
            // Jacobi-preconditioned BiCGSTAB; ILUT setup cost more than it saved at 65^3.
            Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>> it_solver;
            it_solver.setTolerance(cfg.linear_solver_tol);
            it_solver.setMaxIterations(4000);
            it_solver.compute(jac);
            step = it_solver.solve(rhs);
            if (it_solver.info() != Eigen::Success && !(it_solver.error() < 1e-6)) {
                rep.message = "linear solve did not reach its tolerance";
                break;
            }
        }

        double alpha = 1.0;
        bool accepted = false;
        GridFunction trial = u;
        GridFunction rt = r;
        double nt = norm;
        while (alpha >= cfg.min_step) {
            for (Eigen::Index k = 0; k < m; ++k) {
                const long p = inside[static_cast<std::size_t>(k)];
                trial[p] = u[p] + alpha * step[k];
            }
            try {
                rt = residual(trial, spec, cfg.cone_guard);
            } catch (const ConeViolation&) {
                if (!cfg.cone_guard) throw;
                alpha *= cfg.damping;
                continue;
            }
            nt = inf_norm_interior(rt);
            if (nt < norm) {
                accepted = true;
                break;
            }
            alpha *= cfg.damping;
        }
        if (!accepted) {
            rep.message = "line search found no decrease of the residual";
            break;
        }
        if (!cfg.cone_guard) {
            const auto st = cone_stats(trial);
            if (st.worst_index >= 0) {
                throw ConeViolation("newton_solve: iterate left Gamma_2 with the cone guard off", st.worst_index);
            }
        }
        u = std::move(trial);
        r = std::move(rt);
        norm = nt;
        ++rep.iterations;
        rep.residual_history.push_back(norm);
    }

    rep.final_residual_norm = norm;
    rep.converged = norm <= cfg.residual_tol;
    rep.min_sigma2_over_grid = cone_stats(u).min_sigma2;
    if (rep.converged) {
        rep.message = "converged";
    } else if (rep.message.empty()) {
        rep.message = "maximum Newton iterations reached";
    }
    return {std::move(u), std::move(rep)};
}

ProblemSpec manufacture(const ManufacturedField& u_star, OperatorKind kind, const Box& domain) {
    if (!u_star.value || !u_star.hessian) throw DomainError("manufacture: field needs value and hessian");
    const int d = domain.dim;
    if (d != 2 && d != 3) throw DomainError("manufacture: dim must be 2 or 3");
    constexpr int lattice = 21;
    const int nz = d == 3 ? lattice : 1;
    for (int i = 0; i < lattice; ++i) {
        for (int j = 0; j < lattice; ++j) {
            for (int k = 0; k < nz; ++k) {
                Point x = Point::Zero();
                const int c[3] = {i, j, k};
                for (int a = 0; a < d; ++a) {
                    x[a] = domain.lo[a] + (domain.hi[a] - domain.lo[a]) * c[a] / (lattice - 1.0);
                }
                const auto inv = invariants(u_star.hessian(x), d);
                if (!(inv.s1 > 0.0 && inv.s2 > 0.0)) {
                    std::ostringstream os;
                    os << "manufacture: Hessian of " << (u_star.name.empty() ? "u*" : u_star.name)
                       << " leaves Gamma_2 at (" << x[0] << ", " << x[1] << ", " << x[2] << ")";
                    throw ConeViolation(os.str());
                }
            }
        }
    }
    ProblemSpec spec;
    spec.kind = kind;
    spec.domain = domain;
    spec.name = u_star.name;
    auto hess = u_star.hessian;
    spec.psi = [hess, kind, d](const Point& x, double, const Point&) {
        const auto inv = invariants(hess(x), d);
        return kind == OperatorKind::Quotient ? inv.s2 / inv.s1 : inv.s2;
    };
    spec.psi_u = [](const Point&, double, const Point&) { return 0.0; };
    spec.psi_p = [](const Point&, double, const Point&) { return Point::Zero().eval(); };
    spec.dirichlet = u_star.value;
    return spec;
}

GridFunction sample_field(const ScalarField& f, const GridFunction& like) {
    GridFunction g = like.zeros_like();
    g.fill(f);
    return g;
}

double max_abs_diff(const GridFunction& a, const GridFunction& b) {
    if (a.size() != b.size()) throw DomainError("max_abs_diff: grids differ");
    double m = 0.0;
    for (long p = 0; p < a.size(); ++p) m = std::max(m, std::abs(a[p] - b[p]));
    return m;
}

std::string field_to_csv(const GridFunction& u) {
    std::string out = "i,j,k,x0,x1,x2,u\n";
    char buf[192];
    for (long p = 0; p < u.size(); ++p) {
        const auto c = u.coords(p);
        const Point x = u.point(p);
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%.17g,%.17g\n", c[0], c[1], c[2], x[0], x[1], x[2], u[p]);
        out += buf;
    }
    return out;
}

}  // namespace hqlab
