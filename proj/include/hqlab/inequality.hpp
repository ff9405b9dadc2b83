#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hqlab/symmetric.hpp"

namespace hqlab {

/// Outcome of one randomized check at one dimension. `passed` iff
/// min_margin >= -tolerance.
struct CheckReport {
    std::string name;
    int n = 0;
    long samples = 0;
    double min_margin = 0.0;
    double tolerance = 0.0;
    std::vector<double> worst_input;
    bool passed = true;
};

/// c_n = (sqrt(3n^2+1) - n + 1) / (2n), the dynamic semi-convexity constant.
[[nodiscard]] double cn(int n);

/// (n + 1 + sqrt(3n^2+1)) / (2n), the larger root of the concavity quadratic.
[[nodiscard]] double concavity_root(int n);

struct Lemma21Margins {
    double margin = 0.0;        ///< f_1 l_1^2 - (2/n^2) f^2
    double proof_margin = 0.0;  ///< sigma_{1;1} l_1 - (2/n) sigma_2
};

/// Lower bound on f_1 lambda_1^2 for the quotient operator. Throws
/// ConeViolation outside Gamma_2.
[[nodiscard]] Lemma21Margins check_lemma21(const Spectrum& lambda);

struct Lemma22Margins {
    double upper_f1 = 0.0;      ///< ((n-1)/n - f/s1) - f_1
    std::vector<double> lower;  ///< f_i - ((1 - 1/sqrt2) - f/s1), i >= 2 (index 0 is i = 2)
    std::vector<double> upper;  ///< (2(n-1)/n - f/s1) - f_i, i >= 2

    [[nodiscard]] double min_margin() const;
};

/// Two-sided gradient bounds for the quotient operator.
[[nodiscard]] Lemma22Margins check_lemma22(const Spectrum& lambda);

/// (n-1) + (2n+2) fi - 2n fi^2. For Sigma2 pass fi already divided by
/// Delta u; the kind only documents the normalization.
[[nodiscard]] double check_concavity_quadratic(double fi, int n, OperatorKind kind);

/// Cauchy-Schwarz quantities at one index and the reassembled Q~ - 1.
struct QTildeEval {
    int i = 0;
    int n = 0;
    double R = 0.0;
    double S = 0.0;
    double denom = 0.0;   ///< (n+2)R - S^2
    double qtilde = 0.0;  ///< 3R / denom
    /// Q~ - 1 from the factored "1 + (...)" expansion in (Delta u, psi, f_i).
    double qtilde_expanded = 0.0;
    /// Q~ - 1 from the unfactored quotient of polynomials in (Delta u, psi, f_i).
    double qtilde_expanded_direct = 0.0;
    double R_closed = 0.0;  ///< R from Delta u, psi and f_i only
    double S_closed = 0.0;
    double psi = 0.0;  ///< sigma2/sigma1 (quotient) or sigma2 (sigma2) at lambda

    /// Largest relative disagreement among the two routes for R, S and Q~ - 1.
    [[nodiscard]] double max_rel_error() const;
    /// denom / ((n+2) R) in (0, 1]; both routes lose about eps / conditioning.
    [[nodiscard]] double conditioning() const;
};

/// Identity comparisons are only meaningful above this conditioning.
inline constexpr double kWellConditioned = 1e-4;

/// Throws ConeViolation outside Gamma_2, DomainError on a bad index and
/// DegenerateError when denom < 1e-10 (1 + R).
[[nodiscard]] QTildeEval check_qtilde(const Spectrum& lambda, int i, OperatorKind kind);

/// All randomized checks over sample_gamma2 draws for each n. `workers` = 0
/// picks the hardware concurrency. Output is independent of `workers`.
[[nodiscard]] std::vector<CheckReport> run_suite(const std::vector<int>& n_list, long samples,
                                                 std::uint64_t seed, unsigned workers = 0);

/// CSV with header name,n,samples,min_margin,passed,worst_input.
[[nodiscard]] std::string reports_to_csv(const std::vector<CheckReport>& reports);

}  // namespace hqlab
