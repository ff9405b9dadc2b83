#include "hqlab/inequality.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

#include "hqlab/errors.hpp"
#include "hqlab/random.hpp"

namespace hqlab {

namespace {

void require_gamma2(const Spectrum& lambda, const char* who) {
    if (!cone_contains(lambda, 2)) throw ConeViolation(std::string(who) + ": spectrum outside Gamma_2");
}

double rel_err(double a, double b) {
    const double scale = std::max(std::abs(b), std::numeric_limits<double>::min());
    return std::abs(a - b) / scale;
}

}  // namespace

double cn(int n) {
    if (n < 2) throw DomainError("cn: n must be >= 2");
    const double nd = n;
    return (std::sqrt(3.0 * nd * nd + 1.0) - nd + 1.0) / (2.0 * nd);
}

double concavity_root(int n) {
    if (n < 2) throw DomainError("concavity_root: n must be >= 2");
    const double nd = n;
    return (nd + 1.0 + std::sqrt(3.0 * nd * nd + 1.0)) / (2.0 * nd);
}

Lemma21Margins check_lemma21(const Spectrum& lambda) {
    require_gamma2(lambda, "check_lemma21");
    const auto q = quotient_eval(lambda, OperatorKind::Quotient);
    const double n = lambda.n();
    Lemma21Margins m;
    m.margin = q.grad[0] * lambda[0] * lambda[0] - (2.0 / (n * n)) * q.f * q.f;
    m.proof_margin = q.sigma1_without[0] * lambda[0] - (2.0 / n) * q.sigma2;
    return m;
}

double Lemma22Margins::min_margin() const {
    double m = upper_f1;
    for (double v : lower) m = std::min(m, v);
    for (double v : upper) m = std::min(m, v);
    return m;
}

Lemma22Margins check_lemma22(const Spectrum& lambda) {
    require_gamma2(lambda, "check_lemma22");
    const auto q = quotient_eval(lambda, OperatorKind::Quotient);
    const int n = lambda.n();
    const double nd = n;
    const double shift = q.f / q.sigma1;
    Lemma22Margins m;
    m.upper_f1 = ((nd - 1.0) / nd - shift) - q.grad[0];
    const double low = (1.0 - 1.0 / std::sqrt(2.0)) - shift;
    const double high = 2.0 * (nd - 1.0) / nd - shift;
    for (int i = 1; i < n; ++i) {
        m.lower.push_back(q.grad[i] - low);
        m.upper.push_back(high - q.grad[i]);
    }
    return m;
}

double check_concavity_quadratic(double fi, int n, OperatorKind /*kind*/) {
    const double nd = n;
    return (nd - 1.0) + (2.0 * nd + 2.0) * fi - 2.0 * nd * fi * fi;
}

double QTildeEval::max_rel_error() const {
    // Q~ - 1 is compared on the scale of Q~ itself: near Q~ = 1 the direct
    // subtraction has no relative accuracy of its own.
    const double qm1 = qtilde - 1.0;
    const double scale = std::max(std::abs(qm1), std::abs(qtilde));
    return std::max({rel_err(R_closed, R), rel_err(S_closed, S),
                     std::abs(qtilde_expanded - qm1) / scale,
                     std::abs(qtilde_expanded_direct - qm1) / scale});
}

double QTildeEval::conditioning() const { return denom / ((static_cast<double>(n) + 2.0) * R); }

QTildeEval check_qtilde(const Spectrum& lambda, int i, OperatorKind kind) {
    require_gamma2(lambda, "check_qtilde");
    const int n = lambda.n();
    if (i < 0 || i >= n) throw DomainError("check_qtilde: index outside [0, n)");
    const auto q = quotient_eval(lambda, kind);
    const double nd = n;

    QTildeEval e;
    e.i = i;
    e.n = n;
    double sum = 0.0;
    double sumsq = 0.0;
    for (int l = 0; l < n; ++l) {
        sum += q.grad[l];
        sumsq += q.grad[l] * q.grad[l];
    }
    const double fi = q.grad[i];
    e.R = sumsq + 2.0 * fi * fi;
    e.S = sum + 2.0 * fi;
    e.denom = (nd + 2.0) * e.R - e.S * e.S;
    if (e.denom < 1e-10 * (1.0 + e.R)) {
        throw DegenerateError("check_qtilde: (n+2)R - S^2 below 1e-10 (all gradient components equal)");
    }
    e.qtilde = 3.0 * e.R / e.denom;

    const double lap = q.sigma1;
    if (kind == OperatorKind::Quotient) {
        const double psi = q.f;
        e.psi = psi;
        const double lap2 = lap * lap;
        e.R_closed = ((nd - 1.0) * lap2 + 2.0 * lap2 * fi * fi - 2.0 * nd * lap * psi + nd * psi * psi) / lap2;
        e.S_closed = ((nd - 1.0) * lap - nd * psi + 2.0 * lap * fi) / lap;
        const double big_d = 3.0 * (nd - 1.0) * lap2 + 2.0 * nd * lap2 * fi * fi -
                             4.0 * (nd - 1.0) * lap2 * fi + 4.0 * nd * lap * fi * psi -
                             6.0 * nd * psi * lap + 2.0 * nd * psi * psi;
        const double top = 4.0 * (nd - 1.0) * lap2 - (2.0 * nd - 6.0) * lap2 * fi -
                           4.0 * nd * psi * lap + nd * psi * psi / fi;
        // The identity is stated for (Q~ - 1)/Delta u; both forms are scaled back by Delta u.
        e.qtilde_expanded_direct = lap * ((fi / lap) * top / big_d);
        const double n2 = lap2 * ((nd - 1.0) + (2.0 * nd + 2.0) * fi - 2.0 * nd * fi * fi) -
                          4.0 * nd * psi * lap * fi + 2.0 * nd * psi * lap + nd * psi * psi / fi -
                          2.0 * nd * psi * psi;
        e.qtilde_expanded = lap * ((fi / lap) * (1.0 + n2 / big_d));
    } else {
        const double psi = q.sigma2;
        e.psi = psi;
        e.R_closed = (nd - 1.0) * lap * lap - 2.0 * psi + 2.0 * fi * fi;
        e.S_closed = (nd - 1.0) * lap + 2.0 * fi;
        const double big_d = 3.0 * (nd - 1.0) * lap * lap - 4.0 * (nd - 1.0) * lap * fi +
                             2.0 * nd * fi * fi - 2.0 * (nd + 2.0) * psi;
        e.qtilde_expanded_direct =
            (4.0 * (nd - 1.0) * lap * fi - 2.0 * (nd - 3.0) * fi * fi + 2.0 * (nd - 1.0) * psi) / big_d;
        const double x = (nd - 1.0) * lap + 2.0 * (nd + 1.0) * fi - 2.0 * nd * fi * fi / lap +
                         2.0 * (nd - 1.0) * psi / fi + 2.0 * (nd + 2.0) * psi / lap;
        e.qtilde_expanded = (fi / lap) * (1.0 + x / (big_d / lap));
    }
    if (e.conditioning() >= kWellConditioned && !(e.max_rel_error() <= 1e-8)) {
        throw ConsistencyError("check_qtilde: closed forms disagree with the direct computation");
    }
    return e;
}

namespace {

constexpr long kBlock = 1024;

struct Accum {
    double min_margin = std::numeric_limits<double>::infinity();
    long samples = 0;
    std::vector<double> worst;

    void add(double margin, const Spectrum& lambda) {
        ++samples;
        if (std::isnan(margin)) margin = -std::numeric_limits<double>::infinity();
        // Strict '<' keeps the earliest sample on ties; blocks merge in order.
        if (margin < min_margin || worst.empty()) {
            min_margin = margin;
            worst.assign(lambda.values().begin(), lambda.values().end());
        }
    }

    void merge(const Accum& other) {
        samples += other.samples;
        if (other.samples > 0 && (other.min_margin < min_margin || worst.empty())) {
            min_margin = other.min_margin;
            worst = other.worst;
        }
    }
};

struct CheckDef {
    const char* name;
    double tolerance;
};

// Inequality margins carry -1e-12 absolute slack; identity checks report
// minus the relative error against their own tolerance.
constexpr CheckDef kChecks[] = {
    {"lemma21", 1e-12},
    {"lemma21_proof_bound", 1e-12},
    {"lemma22_upper_f1", 1e-12},
    {"lemma22_lower", 1e-12},
    {"lemma22_upper", 1e-12},
    {"cauchy_schwarz_quotient", 1e-12},
    {"cauchy_schwarz_sigma2", 1e-12},
    {"gradient_ordering", 1e-12},
    {"gradient_forms", 1e-12},
    {"threshold_quotient", 1e-12},
    {"concavity_quadratic_quotient", 1e-12},
    {"concavity_quadratic_sigma2", 1e-12},
    {"qtilde_identity_quotient", 1e-10},
    {"qtilde_identity_sigma2", 1e-10},
};
constexpr std::size_t kNumChecks = std::size(kChecks);

using Accums = std::array<Accum, kNumChecks>;

void run_sample(const Spectrum& lambda, Accums& acc) {
    const int n = lambda.n();
    const double nd = n;
    const double c = cn(n);
    const double root = concavity_root(n);
    const auto qq = quotient_eval(lambda, OperatorKind::Quotient);
    const auto qs = quotient_eval(lambda, OperatorKind::Sigma2);
    const double lap = qq.sigma1;

    const auto l21 = check_lemma21(lambda);
    acc[0].add(l21.margin, lambda);
    acc[1].add(l21.proof_margin, lambda);

    const auto l22 = check_lemma22(lambda);
    acc[2].add(l22.upper_f1, lambda);
    acc[3].add(*std::min_element(l22.lower.begin(), l22.lower.end()), lambda);
    acc[4].add(*std::min_element(l22.upper.begin(), l22.upper.end()), lambda);

    const auto cs_margin = [&](const Eigen::VectorXd& g) {
        const double sum = g.sum();
        const double sumsq = g.squaredNorm();
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const double r = sumsq + 2.0 * g[i] * g[i];
            const double s = sum + 2.0 * g[i];
            m = std::min(m, ((nd + 2.0) * r - s * s) / (1.0 + r));
        }
        return m;
    };
    acc[5].add(cs_margin(qq.grad), lambda);
    acc[6].add(cs_margin(qs.grad), lambda);

    double order = qq.grad[0];
    for (int i = 0; i + 1 < n; ++i) order = std::min(order, qq.grad[i + 1] - qq.grad[i]);
    acc[7].add(order, lambda);

    double forms = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const auto g = quotient_gradient_forms(lambda, i);
        const double d = std::max({std::abs(g.quotient_rule - g.reduced),
                                   std::abs(g.quotient_rule - g.sum_of_squares),
                                   std::abs(g.reduced - g.sum_of_squares)});
        forms = std::min(forms, -d / g.cancellation_scale);
    }
    acc[8].add(forms, lambda);

    // The dynamic semi-convexity condition gates the sharp-constant checks.
    if (lambda[n - 1] >= -c * lap) {
        acc[9].add((root - qq.f / lap) - qq.grad.maxCoeff(), lambda);
        double cq = std::numeric_limits<double>::infinity();
        double cs = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            cq = std::min(cq, check_concavity_quadratic(qq.grad[i], n, OperatorKind::Quotient));
            cs = std::min(cs, check_concavity_quadratic(qs.grad[i] / lap, n, OperatorKind::Sigma2));
        }
        acc[10].add(cq, lambda);
        acc[11].add(cs, lambda);
    }

    const auto qtilde_margin = [&](OperatorKind kind) {
        double worst = 0.0;
        bool any = false;
        for (int i = 0; i < n; ++i) {
            try {
                const auto e = check_qtilde(lambda, i, kind);
                if (e.conditioning() < kWellConditioned) continue;
                worst = std::max(worst, e.max_rel_error());
                any = true;
            } catch (const DegenerateError&) {
            } catch (const ConsistencyError&) {
                worst = std::numeric_limits<double>::infinity();
                any = true;
            }
        }
        return std::pair{any, -worst};
    };
    if (auto [any, m] = qtilde_margin(OperatorKind::Quotient); any) acc[12].add(m, lambda);
    if (auto [any, m] = qtilde_margin(OperatorKind::Sigma2); any) acc[13].add(m, lambda);
}

}  // namespace

std::vector<CheckReport> run_suite(const std::vector<int>& n_list, long samples, std::uint64_t seed,
                                   unsigned workers) {
    if (samples < 1) throw DomainError("run_suite: samples must be >= 1");
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<CheckReport> reports;
    for (int n : n_list) {
        if (n < 2) throw DomainError("run_suite: every n must be >= 2");
        const long blocks = (samples + kBlock - 1) / kBlock;
        std::vector<Accums> per_block(static_cast<std::size_t>(blocks));
        auto work = [&](unsigned w) {
            for (long b = w; b < blocks; b += workers) {
                const long count = std::min(kBlock, samples - b * kBlock);
                const auto draws = sample_gamma2(
                    n, derive_seed(seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(b)}),
                    static_cast<int>(count));
                for (const auto& lambda : draws) run_sample(lambda, per_block[b]);
            }
        };
        if (workers == 1) {
            work(0);
        } else {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        }
        Accums total;
        for (const auto& blk : per_block) {
            for (std::size_t c = 0; c < kNumChecks; ++c) total[c].merge(blk[c]);
        }
        for (std::size_t c = 0; c < kNumChecks; ++c) {
            CheckReport r;
            r.name = kChecks[c].name;
            r.n = n;
            r.samples = total[c].samples;
            r.tolerance = kChecks[c].tolerance;
            r.min_margin = total[c].samples > 0 ? total[c].min_margin : 0.0;
            r.worst_input = total[c].worst;
            r.passed = r.min_margin >= -r.tolerance;
            reports.push_back(std::move(r));
        }
    }
    return reports;
}

std::string reports_to_csv(const std::vector<CheckReport>& reports) {
    std::ostringstream os;
    os << "name,n,samples,min_margin,passed,worst_input\n";
    char buf[64];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%.17g", r.min_margin);
        os << r.name << ',' << r.n << ',' << r.samples << ',' << buf << ',' << (r.passed ? "true" : "false")
           << ',';
        for (std::size_t k = 0; k < r.worst_input.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", r.worst_input[k]);
            os << (k ? ";" : "") << buf;
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace hqlab
