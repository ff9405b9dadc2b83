#include "hqlab/symmetric.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "hqlab/errors.hpp"
#include "hqlab/random.hpp"

namespace hqlab {

const char* to_string(OperatorKind kind) noexcept {
    return kind == OperatorKind::Quotient ? "quotient" : "sigma2";
}

OperatorKind parse_operator_kind(const std::string& text) {
    if (text == "quotient") return OperatorKind::Quotient;
    if (text == "sigma2") return OperatorKind::Sigma2;
    throw UsageError("unknown operator kind '" + text + "' (expected quotient|sigma2)");
}

Spectrum::Spectrum(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw DomainError("spectrum needs n >= 2 eigenvalues");
    std::sort(values_.begin(), values_.end(), std::greater<>());
}

Spectrum::Spectrum(std::initializer_list<double> values) : Spectrum(std::vector<double>(values)) {}

double Spectrum::max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

Spectrum Spectrum::scaled(double a) const {
    std::vector<double> v = values_;
    for (double& x : v) x *= a;
    return Spectrum(std::move(v));
}

double elementary_symmetric(std::span<const double> lambda, int k) {
    const int n = static_cast<int>(lambda.size());
    if (k < 0 || k > n) {
        throw DomainError("elementary_symmetric: k=" + std::to_string(k) + " outside [0, " +
                          std::to_string(n) + "]");
    }
    // Coefficients of prod_i (1 + lambda_i t), truncated at degree k.
    std::vector<double> e(static_cast<std::size_t>(k) + 1, 0.0);
    e[0] = 1.0;
    for (int i = 0; i < n; ++i) {
        const int top = std::min(i + 1, k);
        for (int j = top; j >= 1; --j) e[j] += lambda[i] * e[j - 1];
    }
    return e[k];
}

double elementary_symmetric(const Spectrum& lambda, int k) {
    return elementary_symmetric(lambda.values(), k);
}

double sigma_without(const Spectrum& lambda, int k, std::span<const int> omit) {
    const int n = lambda.n();
    std::vector<double> v(lambda.values().begin(), lambda.values().end());
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    int removed = 0;
    for (int idx : omit) {
        if (idx < 0 || idx >= n) {
            throw DomainError("sigma_without: index " + std::to_string(idx) + " outside [0, " +
                              std::to_string(n) + ")");
        }
        if (!seen[idx]) ++removed;
        seen[idx] = true;
        v[idx] = 0.0;
    }
    if (k < 0 || k > n - removed) {
        throw DomainError("sigma_without: k=" + std::to_string(k) + " exceeds n - |omit|");
    }
    return elementary_symmetric(std::span<const double>(v), k);
}

double sigma_without(const Spectrum& lambda, int k, std::initializer_list<int> omit) {
    return sigma_without(lambda, k, std::span<const int>(omit.begin(), omit.size()));
}

bool cone_contains(const Spectrum& lambda, int k) {
    if (k < 1 || k > lambda.n()) throw DomainError("cone_contains: k outside [1, n]");
    for (int j = 1; j <= k; ++j) {
        if (!(elementary_symmetric(lambda, j) > 0.0)) return false;
    }
    return true;
}

namespace {

// sigma_{k;i} with the natural value 0 when k exceeds the n - 1 remaining entries.
double sigma_without_one(const Spectrum& lambda, int k, int i) {
    return k > lambda.n() - 1 ? 0.0 : sigma_without(lambda, k, {i});
}

}  // namespace

QuotientGradientForms quotient_gradient_forms(const Spectrum& lambda, int i) {
    const double s1 = elementary_symmetric(lambda, 1);
    const double s2 = elementary_symmetric(lambda, 2);
    const double s1i = sigma_without_one(lambda, 1, i);
    const double s2i = sigma_without_one(lambda, 2, i);
    double sq = 0.0;
    for (int j = 0; j < lambda.n(); ++j) {
        if (j != i) sq += lambda[j] * lambda[j];
    }
    const double d = s1 * s1;
    QuotientGradientForms g;
    g.quotient_rule = (s1 * s1i - s2) / d;
    g.reduced = (s1i * s1i - s2i) / d;
    g.sum_of_squares = 0.5 * (sq + s1i * s1i) / d;
    g.cancellation_scale =
        std::max({(std::abs(s1 * s1i) + std::abs(s2)) / d, (s1i * s1i + std::abs(s2i)) / d,
                  g.sum_of_squares});
    return g;
}

QuotientEval quotient_eval(const Spectrum& lambda, OperatorKind kind) {
    const int n = lambda.n();
    QuotientEval q;
    q.kind = kind;
    q.sigma1 = elementary_symmetric(lambda, 1);
    q.sigma2 = elementary_symmetric(lambda, 2);
    q.sigma1_without.resize(n);
    q.sigma2_without.resize(n);
    for (int i = 0; i < n; ++i) {
        q.sigma1_without[i] = sigma_without_one(lambda, 1, i);
        q.sigma2_without[i] = sigma_without_one(lambda, 2, i);
    }
    q.grad.resize(n);
    q.hess.resize(n, n);
    q.divided_diff.resize(n, n);

    const double s1 = q.sigma1;
    const double s2 = q.sigma2;
    const double coincide = 1e-9 * (1.0 + lambda.max_abs());

    if (kind == OperatorKind::Quotient) {
        if (!(s1 > 0.0)) {
            std::ostringstream os;
            os << "quotient_eval: sigma_1 = " << s1 << " <= 0";
            throw ConeViolation(os.str());
        }
        q.f = s2 / s1;
        for (int i = 0; i < n; ++i) {
            const auto forms = quotient_gradient_forms(lambda, i);
            const double tol = 1e-10 * forms.cancellation_scale;
            if (std::abs(forms.quotient_rule - forms.reduced) > tol ||
                std::abs(forms.quotient_rule - forms.sum_of_squares) > tol ||
                std::abs(forms.reduced - forms.sum_of_squares) > tol) {
                throw ConsistencyError("quotient_eval: gradient formulas disagree at index " +
                                       std::to_string(i));
            }
            q.grad[i] = forms.sum_of_squares;
        }
        const double s1sq = s1 * s1;
        const double base = -1.0 / s1 + 2.0 * s2 / (s1sq * s1);
        for (int p = 0; p < n; ++p) {
            for (int r = 0; r < n; ++r) {
                q.hess(p, r) = base + (lambda[p] + lambda[r]) / s1sq - (p == r ? 1.0 / s1 : 0.0);
                if (p == r || std::abs(lambda[p] - lambda[r]) < coincide) {
                    q.divided_diff(p, r) = 1.0 / s1;
                } else {
                    // Difference of the sum-of-squares gradients with the gap
                    // lambda_r - lambda_p factored out.
                    q.divided_diff(p, r) = (lambda[p] + lambda[r] + q.sigma1_without[p] +
                                            q.sigma1_without[r]) /
                                           (2.0 * s1sq);
                }
            }
        }
    } else {
        q.f = s2;
        for (int i = 0; i < n; ++i) q.grad[i] = q.sigma1_without[i];
        for (int p = 0; p < n; ++p) {
            for (int r = 0; r < n; ++r) {
                q.hess(p, r) = p == r ? 0.0 : 1.0;
                // grad_p - grad_r = lambda_r - lambda_p identically, so the
                // factored difference is 1 with or without coincidence.
                q.divided_diff(p, r) = 1.0;
            }
        }
    }
    return q;
}

double matrix_sigma1(const Eigen::MatrixXd& m) { return m.trace(); }

double matrix_sigma2(const Eigen::MatrixXd& m) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < m.cols(); ++j) s += m(i, i) * m(j, j) - m(i, j) * m(j, i);
    }
    return s;
}

double operator_value(const Eigen::MatrixXd& m, OperatorKind kind) {
    const double s2 = matrix_sigma2(m);
    return kind == OperatorKind::Quotient ? s2 / matrix_sigma1(m) : s2;
}

Eigen::MatrixXd matrix_derivative(const Eigen::MatrixXd& m, OperatorKind kind) {
    if (m.rows() != m.cols()) throw DomainError("matrix_derivative: matrix must be square");
    const auto n = m.rows();
    const double tr = m.trace();
    Eigen::MatrixXd dsigma2 = tr * Eigen::MatrixXd::Identity(n, n) - m;
    if (kind == OperatorKind::Sigma2) return dsigma2;
    if (!(tr > 0.0)) throw ConeViolation("matrix_derivative: trace <= 0 for the quotient operator");
    const double s2 = matrix_sigma2(m);
    return (tr * dsigma2 - s2 * Eigen::MatrixXd::Identity(n, n)) / (tr * tr);
}

std::vector<Spectrum> sample_gamma2(int n, std::uint64_t seed, int count) {
    if (n < 2) throw DomainError("sample_gamma2: n must be >= 2");
    if (count < 1) throw DomainError("sample_gamma2: count must be >= 1");
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(n)}));
    std::vector<Spectrum> out;
    out.reserve(static_cast<std::size_t>(count));
    std::vector<double> x(static_cast<std::size_t>(n));
    const double nd = n;
    while (static_cast<int>(out.size()) < count) {
        for (double& v : x) v = standard_normal(rng);
        const double s1x = elementary_symmetric(std::span<const double>(x), 1);
        const double s2x = elementary_symmetric(std::span<const double>(x), 2);
        // sigma_2(x + s 1) = a s^2 + b s + c; the larger root bounds Gamma_2 on this line.
        const double a = 0.5 * nd * (nd - 1.0);
        const double b = (nd - 1.0) * s1x;
        const double disc = std::max(0.0, b * b - 4.0 * a * s2x);
        const double root = (-b + std::sqrt(disc)) / (2.0 * a);
        const bool near_boundary = uniform(rng, 0.0, 1.0) < 0.5;
        const double delta = near_boundary ? std::pow(10.0, uniform(rng, -7.0, -1.0))
                                           : std::pow(10.0, uniform(rng, -1.0, 1.0));
        const double scale_target = uniform(rng, 0.5, 2.0);
        std::vector<double> lam(x);
        for (double& v : lam) v += root + delta;
        const double s1 = elementary_symmetric(std::span<const double>(lam), 1);
        if (!(s1 > 0.0)) continue;
        for (double& v : lam) v *= scale_target / s1;
        Spectrum sp(std::move(lam));
        const double t1 = elementary_symmetric(sp, 1);
        const double t2 = elementary_symmetric(sp, 2);
        if (!(t1 > 0.0) || !(t2 >= 1e-8 * t1 * t1)) continue;
        out.push_back(std::move(sp));
    }
    return out;
}

}  // namespace hqlab
