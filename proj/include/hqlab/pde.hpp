#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "hqlab/grid.hpp"
#include "hqlab/symmetric.hpp"

namespace hqlab {

using ScalarField = std::function<double(const Point& x)>;
/// psi(x, u, grad u). The gradient argument is ignored unless the problem
/// is gradient dependent (sigma2 only).
using PsiFn = std::function<double(const Point& x, double u, const Point& p)>;
using PsiGradFn = std::function<Point(const Point& x, double u, const Point& p)>;

struct ProblemSpec {
    OperatorKind kind = OperatorKind::Quotient;
    Box domain;
    PsiFn psi;
    PsiFn psi_u;           ///< optional; finite differences otherwise
    PsiGradFn psi_p;       ///< optional; finite differences otherwise
    PsiGradFn psi_x;       ///< optional; finite differences otherwise
    bool gradient_dependent = false;
    ScalarField dirichlet;
    std::string name;
};

enum class InitialGuess { QuadraticFit, Supplied };

struct SolverConfig {
    int grid_points = 33;  ///< nodes along axis 0
    int max_newton_iters = 30;
    double residual_tol = 1e-10;
    double damping = 0.5;  ///< step shrink factor of the line search
    double min_step = 1e-6;
    bool cone_guard = true;
    double linear_solver_tol = 1e-10;
    InitialGuess initial_guess = InitialGuess::QuadraticFit;
    std::optional<GridFunction> initial;  ///< required for Supplied
};

struct SolveReport {
    int iterations = 0;
    double final_residual_norm = 0.0;
    double min_sigma2_over_grid = 0.0;
    bool converged = false;
    std::vector<double> residual_history;
    std::string message;
};

struct SolveResult {
    GridFunction u;
    SolveReport report;
};

/// psi_u, psi_p and psi_x with the finite-difference fallback
/// (one-sided, step 1e-6 (1 + |.|)).
[[nodiscard]] double eval_psi_u(const ProblemSpec& spec, const Point& x, double u, const Point& p);
[[nodiscard]] Point eval_psi_p(const ProblemSpec& spec, const Point& x, double u, const Point& p);
[[nodiscard]] Point eval_psi_x(const ProblemSpec& spec, const Point& x, double u, const Point& p);

/// F(D^2 u) - psi at interior points, zero on the ring. With the guard on,
/// any interior Hessian outside Gamma_2 raises ConeViolation carrying the
/// grid index. F is undefined for sigma_1 <= 0 (quotient), which raises
/// regardless of the guard.
[[nodiscard]] GridFunction residual(const GridFunction& u, const ProblemSpec& spec, bool cone_guard = true);

/// Jacobian of `residual` with respect to the interior values, rows and
/// columns in GridFunction::interior() order.
[[nodiscard]] Eigen::SparseMatrix<double> assemble_jacobian(const GridFunction& u, const ProblemSpec& spec);

/// Smallest sigma_1 and sigma_2 of the discrete Hessian over the interior.
struct ConeStats {
    double min_sigma1 = 0.0;
    double min_sigma2 = 0.0;
    long worst_index = -1;  ///< first point outside Gamma_2, or -1
};
[[nodiscard]] ConeStats cone_stats(const GridFunction& u);

/// Dirichlet values on the ring; interior from a least-squares quadratic fit
/// of the boundary data (pushed into Gamma_2 when needed) plus the discrete
/// harmonic extension of the remaining boundary misfit.
[[nodiscard]] GridFunction quadratic_fit_guess(const ProblemSpec& spec, int grid_points);

/// Damped Newton. Non-convergence is reported, not thrown.
[[nodiscard]] SolveResult newton_solve(const ProblemSpec& spec, const SolverConfig& cfg);

/// Closed-form field with first and second derivatives.
struct ManufacturedField {
    ScalarField value;
    std::function<Point(const Point&)> gradient;
    std::function<Eigen::Matrix3d(const Point&)> hessian;
    std::string name;
};

/// psi(x) := F(D^2 u*(x)) and Dirichlet data from u*. The Hessian is checked
/// against Gamma_2 on a 21^dim lattice of the box.
[[nodiscard]] ProblemSpec manufacture(const ManufacturedField& u_star, OperatorKind kind, const Box& domain);

/// u* sampled on the grid of `like`.
[[nodiscard]] GridFunction sample_field(const ScalarField& f, const GridFunction& like);

/// Sup-norm difference over all grid points.
[[nodiscard]] double max_abs_diff(const GridFunction& a, const GridFunction& b);

/// CSV dump with header i,j,k,x0,x1,x2,u.
[[nodiscard]] std::string field_to_csv(const GridFunction& u);

}  // namespace hqlab
