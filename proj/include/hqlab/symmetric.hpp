#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hqlab {

/// Which eigenvalue operator is in play: sigma_2/sigma_1 or sigma_2.
enum class OperatorKind { Quotient, Sigma2 };

[[nodiscard]] const char* to_string(OperatorKind kind) noexcept;
/// Parses "quotient" / "sigma2"; throws UsageError otherwise.
[[nodiscard]] OperatorKind parse_operator_kind(const std::string& text);

/// Eigenvalue vector, always stored sorted descending.
class Spectrum {
public:
    /// Sorts `values` descending. Requires at least two entries.
    explicit Spectrum(std::vector<double> values);
    Spectrum(std::initializer_list<double> values);

    [[nodiscard]] int n() const noexcept { return static_cast<int>(values_.size()); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] double max_abs() const noexcept;

    /// a * lambda for a > 0 (keeps the ordering).
    [[nodiscard]] Spectrum scaled(double a) const;

private:
    std::vector<double> values_;
};

/// sigma_k of an arbitrary vector via the one-pass product recurrence.
[[nodiscard]] double elementary_symmetric(std::span<const double> lambda, int k);
[[nodiscard]] double elementary_symmetric(const Spectrum& lambda, int k);

/// sigma_k with the entries listed in `omit` (0-based) set to zero.
[[nodiscard]] double sigma_without(const Spectrum& lambda, int k, std::span<const int> omit);
[[nodiscard]] double sigma_without(const Spectrum& lambda, int k, std::initializer_list<int> omit);

/// True iff sigma_j(lambda) > 0 for j = 1..k (open cone).
[[nodiscard]] bool cone_contains(const Spectrum& lambda, int k);

/// Operator value, gradient and second-order data at an eigenvalue vector.
struct QuotientEval {
    OperatorKind kind = OperatorKind::Quotient;
    double f = 0.0;
    Eigen::VectorXd grad;
    /// (f_p - f_q)/(lambda_q - lambda_p); analytic value on coincidences.
    Eigen::MatrixXd divided_diff;
    Eigen::MatrixXd hess;
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    Eigen::VectorXd sigma1_without;
    Eigen::VectorXd sigma2_without;
};

/// The three textbook expressions for d(sigma2/sigma1)/d lambda_i.
struct QuotientGradientForms {
    double quotient_rule = 0.0;   // (s1 s1;i - s2) / s1^2
    double reduced = 0.0;         // (s1;i^2 - s2;i) / s1^2
    double sum_of_squares = 0.0;  // (sum_{j!=i} l_j^2 + s1;i^2) / (2 s1^2)
    /// Magnitude of the terms cancelled in `quotient_rule`, used to scale
    /// agreement tolerances.
    double cancellation_scale = 0.0;
};

[[nodiscard]] QuotientGradientForms quotient_gradient_forms(const Spectrum& lambda, int i);

/// Throws ConeViolation when kind == Quotient and sigma_1 <= 0.
[[nodiscard]] QuotientEval quotient_eval(const Spectrum& lambda, OperatorKind kind);

/// dF/dM_ij for a symmetric matrix M, using dsigma2/dM = tr(M) I - M.
[[nodiscard]] Eigen::MatrixXd matrix_derivative(const Eigen::MatrixXd& m, OperatorKind kind);

/// sigma_1 and sigma_2 of a symmetric matrix from trace invariants.
[[nodiscard]] double matrix_sigma1(const Eigen::MatrixXd& m);
[[nodiscard]] double matrix_sigma2(const Eigen::MatrixXd& m);
/// F(M) for the given operator (no cone check).
[[nodiscard]] double operator_value(const Eigen::MatrixXd& m, OperatorKind kind);

/// Deterministic draws strictly inside Gamma_2, mixing near-boundary and
/// interior points. sigma_2 >= 1e-8 sigma_1^2 on every draw.
[[nodiscard]] std::vector<Spectrum> sample_gamma2(int n, std::uint64_t seed, int count);

}  // namespace hqlab
