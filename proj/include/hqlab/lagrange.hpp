#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hqlab {

/// One instance of: minimize 3 sum_{j != i} t_j^2 + t_i^2
/// subject to sum_j f_j t_j = B and sum_j t_j = G.
///
/// G is the signed total of the t_j (the negated U * Delta u * A_i product of
/// the doubling argument); B is psi_i + psi_u u_i (plus psi_{u_s} u_{si} for
/// the sigma_2 equation).
struct ConstraintData {
    Eigen::VectorXd fvec;
    int i = 0;  ///< distinguished index, 0-based
    double B = 0.0;
    double G = 0.0;

    [[nodiscard]] int n() const noexcept { return static_cast<int>(fvec.size()); }
};

struct LagrangeSolution {
    Eigen::VectorXd t;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double R = 0.0;      ///< sum f_l^2 + 2 f_i^2
    double S = 0.0;      ///< sum f_l + 2 f_i
    double denom = 0.0;  ///< (n+2) R - S^2
    double qmin = 0.0;
};

/// 3 sum_{j != i} t_j^2 + t_i^2.
[[nodiscard]] double lagrange_objective(const Eigen::VectorXd& t, int i);

/// Closed-form critical point of the Lagrange function. Throws
/// DegenerateError when denom <= 1e-10 (1 + R).
[[nodiscard]] LagrangeSolution closed_form_minimize(const ConstraintData& c);

/// Independent oracle: dense (n+2)x(n+2) stationarity-plus-constraints solve
/// with partial pivoting.
[[nodiscard]] LagrangeSolution kkt_oracle(const ConstraintData& c);

/// Brute-force optimality witness: min over `trials` random feasible points
/// of objective - qmin(closed form). +inf when trials == 0. Requires n >= 3.
[[nodiscard]] double feasible_sample_check(const ConstraintData& c, int trials, std::uint64_t seed);

/// Residual max(|sum f t - B|, |sum t - G|).
[[nodiscard]] double constraint_residual(const ConstraintData& c, const Eigen::VectorXd& t);

/// Random well-conditioned instances: n in [n_min, n_max], fvec from the
/// quotient gradient at Gamma_2 draws, B and G uniform in [-bg, bg], and
/// denom >= min_denom.
[[nodiscard]] std::vector<ConstraintData> sample_instances(int count, std::uint64_t seed, int n_min = 3,
                                                           int n_max = 8, double bg = 10.0,
                                                           double min_denom = 1e-6);

/// Batch comparison row.
struct MinimizeRecord {
    long instance_id = 0;
    double qmin_closed = 0.0;
    double qmin_kkt = 0.0;
    double max_t_diff = 0.0;
    double constraint_residual = 0.0;
    bool pass = false;
};

[[nodiscard]] MinimizeRecord compare_instance(long id, const ConstraintData& c);

/// Parses JSON-lines records {"n":3,"fvec":[...],"i":1,"B":1.0,"G":0.0}
/// where i is 1-based. Blank lines and lines starting with '#' are skipped.
[[nodiscard]] std::vector<ConstraintData> parse_instances(const std::string& text);
[[nodiscard]] std::string instances_to_jsonl(const std::vector<ConstraintData>& instances);

/// CSV header instance_id,qmin_closed,qmin_kkt,max_t_diff,constraint_residual,pass.
[[nodiscard]] std::string records_to_csv(const std::vector<MinimizeRecord>& records);

}  // namespace hqlab
