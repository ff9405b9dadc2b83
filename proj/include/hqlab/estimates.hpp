#pragma once

#include <string>
#include <vector>

#include "hqlab/grid.hpp"
#include "hqlab/pde.hpp"

namespace hqlab {

/// Parameters of W = rho^alpha exp{a (x . grad u - u) + b |grad u|^2 / 2} L
/// with L = log max{Delta u / M1, gamma}, rho = r_scan^2 - |x|^2.
struct TestFunctionParams {
    double alpha = 1.0;
    double a = 0.05;
    double b = 0.01;
    double gamma = 2.0;
    double M1 = 0.0;  ///< <= 0: use sup of Delta u over the inner ball
    double r_inner = 1.0;
    double r_outer = 2.0;
    double r_scan = 3.0;
    /// Use max{log(Delta u / M1), gamma} instead of log max{Delta u / M1, gamma}.
    bool log_outside = false;

    /// a^2 < b < a < 1 <= alpha (reported, not enforced).
    [[nodiscard]] bool ordered() const noexcept { return a * a < b && b < a && a < 1.0 && 1.0 <= alpha; }
};

/// Data at the maximizer of W, in the eigenframe of D^2 u (descending).
struct MaxPointDiagnostics {
    long index = -1;
    Point x = Point::Zero();
    std::vector<double> lambda;
    std::vector<double> grad_f;
    std::vector<double> A;  ///< alpha rho_i / rho + a x_i lambda_i + b u_i lambda_i
    std::vector<double> B;  ///< psi_i + psi_u u_i (+ psi_{p_s} u_{si})
    double laplacian = 0.0;
    double U = 0.0;  ///< log Delta u - log M1
    /// Delta u >= (gamma + 1) M1 at the maximizer, where the log factor is live.
    bool log_branch_active = false;
    /// max_i |Delta u_i / (U Delta u) + A_i| on the live branch, max_i |A_i|
    /// otherwise; NaN when the stencil leaves the interior.
    double critical_residual = 0.0;
};

struct ScanResult {
    double W_max = 0.0;
    long max_index = -1;
    MaxPointDiagnostics diag;
};

struct DoublingReport {
    int n = 0;
    double M1 = 0.0;
    double M2 = 0.0;
    double ratio = 0.0;
    double dyn_margin = 0.0;          ///< min lambda_min / Delta u + c_n
    double semiconvex_modulus = 0.0;  ///< min lambda_min
    double min_sigma2 = 0.0;
    bool two_convex = false;
    bool condition_holds = false;  ///< dyn_margin >= 0
    bool params_ordered = false;
    double W_max = 0.0;
    long max_point = -1;
    MaxPointDiagnostics diag;
};

/// max of the discrete Laplacian over interior points with |x| <= radius.
/// Throws DomainError when the ball does not fit inside the grid interior.
[[nodiscard]] double sup_laplacian(const GridFunction& u, double radius);

/// min over interior points of lambda_min / Delta u + c_n. n must equal the
/// grid dimension. Throws ConeViolation where Delta u <= 0.
[[nodiscard]] double dynamic_condition_margin(const GridFunction& u, int n);

/// Exhaustive scan of W over interior points with |x| < r_scan. `spec`
/// supplies psi for B_i.
[[nodiscard]] ScanResult test_function_scan(const GridFunction& u, const TestFunctionParams& params,
                                            const ProblemSpec& spec);

/// Throws ConeViolation when Delta u <= 0 at an interior point.
[[nodiscard]] DoublingReport doubling_report(const GridFunction& u, const ProblemSpec& spec,
                                             TestFunctionParams params = {});

[[nodiscard]] std::string doubling_to_json(const DoublingReport& r, const std::string& instance_id);
/// Header instance_id,M1,M2,ratio,dyn_margin,semiconvex_modulus,max_point,W_max.
[[nodiscard]] std::string doubling_csv_header();
[[nodiscard]] std::string doubling_csv_row(const std::string& instance_id, const DoublingReport& r);

}  // namespace hqlab
