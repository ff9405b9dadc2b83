#include "hqlab/lagrange.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "hqlab/errors.hpp"
#include "hqlab/random.hpp"
#include "hqlab/symmetric.hpp"

namespace hqlab {

namespace {

void validate(const ConstraintData& c, const char* who) {
    if (c.n() < 2) throw DomainError(std::string(who) + ": need n >= 2");
    if (c.i < 0 || c.i >= c.n()) throw DomainError(std::string(who) + ": index i outside [0, n)");
}

struct Moments {
    double R, S, denom;
};

Moments moments(const ConstraintData& c) {
    const double fi = c.fvec[c.i];
    Moments m{};
    m.R = c.fvec.squaredNorm() + 2.0 * fi * fi;
    m.S = c.fvec.sum() + 2.0 * fi;
    m.denom = (c.n() + 2.0) * m.R - m.S * m.S;
    return m;
}

}  // namespace

double lagrange_objective(const Eigen::VectorXd& t, int i) {
    return 3.0 * t.squaredNorm() - 2.0 * t[i] * t[i];
}

double constraint_residual(const ConstraintData& c, const Eigen::VectorXd& t) {
    return std::max(std::abs(c.fvec.dot(t) - c.B), std::abs(t.sum() - c.G));
}

LagrangeSolution closed_form_minimize(const ConstraintData& c) {
    validate(c, "closed_form_minimize");
    const auto m = moments(c);
    if (!(m.denom > 1e-10 * (1.0 + m.R))) {
        throw DegenerateError("closed_form_minimize: (n+2)R - S^2 vanishes (all f_j equal)");
    }
    const int n = c.n();
    const double np2 = n + 2.0;
    LagrangeSolution s;
    s.R = m.R;
    s.S = m.S;
    s.denom = m.denom;
    // With (U Delta u) A_i = -G.
    s.mu1 = (6.0 * np2 * c.B - 6.0 * m.S * c.G) / m.denom;
    s.mu2 = (-6.0 * m.S * c.B + 6.0 * m.R * c.G) / m.denom;
    s.t.resize(n);
    for (int j = 0; j < n; ++j) {
        const double fj = c.fvec[j];
        const double v = ((np2 * fj - m.S) * c.B - (m.S * fj - m.R) * c.G) / m.denom;
        s.t[j] = j == c.i ? 3.0 * v : v;
    }
    s.qmin = (3.0 * m.R * c.G * c.G + 3.0 * np2 * c.B * c.B - 6.0 * m.S * c.G * c.B) / m.denom;
    return s;
}

LagrangeSolution kkt_oracle(const ConstraintData& c) {
    validate(c, "kkt_oracle");
    const int n = c.n();
    const int dim = n + 2;
    // Unknowns (t_1..t_n, mu1, mu2); row-major augmented matrix.
    std::vector<std::vector<double>> a(dim, std::vector<double>(dim + 1, 0.0));
    for (int j = 0; j < n; ++j) {
        a[j][j] = j == c.i ? 2.0 : 6.0;
        a[j][n] = -c.fvec[j];
        a[j][n + 1] = -1.0;
        a[n][j] = c.fvec[j];
        a[n + 1][j] = 1.0;
    }
    a[n][dim] = c.B;
    a[n + 1][dim] = c.G;

    double scale = 0.0;
    for (const auto& row : a) {
        for (int k = 0; k < dim; ++k) scale = std::max(scale, std::abs(row[k]));
    }
    for (int col = 0; col < dim; ++col) {
        int piv = col;
        for (int r = col + 1; r < dim; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        if (std::abs(a[piv][col]) <= 1e-13 * scale) {
            throw DegenerateError("kkt_oracle: singular KKT system (all f_j equal)");
        }
        std::swap(a[piv], a[col]);
        for (int r = col + 1; r < dim; ++r) {
            const double factor = a[r][col] / a[col][col];
            if (factor == 0.0) continue;
            for (int k = col; k <= dim; ++k) a[r][k] -= factor * a[col][k];
        }
    }
    std::vector<double> x(dim, 0.0);
    for (int r = dim - 1; r >= 0; --r) {
        double acc = a[r][dim];
        for (int k = r + 1; k < dim; ++k) acc -= a[r][k] * x[k];
        x[r] = acc / a[r][r];
    }

    LagrangeSolution s;
    s.t = Eigen::Map<Eigen::VectorXd>(x.data(), n);
    s.mu1 = x[n];
    s.mu2 = x[n + 1];
    const auto m = moments(c);
    s.R = m.R;
    s.S = m.S;
    s.denom = m.denom;
    s.qmin = lagrange_objective(s.t, c.i);
    return s;
}

double feasible_sample_check(const ConstraintData& c, int trials, std::uint64_t seed) {
    validate(c, "feasible_sample_check");
    const int n = c.n();
    if (n < 3) throw DomainError("feasible_sample_check: needs n >= 3 (feasible set is a point for n = 2)");
    const auto best = closed_form_minimize(c);
    if (trials <= 0) return std::numeric_limits<double>::infinity();

    // Extended precision: a feasible point built in double is only feasible to
    // eps |t|, which alone lets the objective undercut the minimum by ~eps qmin.
    using Real = long double;
    using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
    using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
    const Vec f = c.fvec.cast<Real>();
    const Real B = c.B;
    const Real G = c.G;
    // With weights w = 1 except w_i = 3, (n+2) R - S^2 = 1/2 sum w_j w_k (f_j - f_k)^2
    // and the numerator is 3 sum w_l (f_l G - B)^2. Neither form cancels.
    Vec w = Vec::Ones(n);
    w[c.i] = 3;
    Real denom = 0;
    Real num = 0;
    for (int j = 0; j < n; ++j) {
        for (int k = j + 1; k < n; ++k) denom += w[j] * w[k] * (f[j] - f[k]) * (f[j] - f[k]);
        num += w[j] * (f[j] * G - B) * (f[j] * G - B);
    }
    const Real qmin = 3 * num / denom;

    // A^T = Q R; the last n - 2 columns of Q span the null space of A.
    Mat at(n, 2);
    at.col(0) = f;
    at.col(1).setOnes();
    Eigen::HouseholderQR<Mat> qr(at);
    const Mat q = qr.householderQ() * Mat::Identity(n, n);
    const Eigen::Matrix<Real, 2, 2> r = qr.matrixQR().topLeftCorner(2, 2).template triangularView<Eigen::Upper>();
    if (std::abs(r(1, 1)) <= 1e-12L * std::abs(r(0, 0))) {
        throw DegenerateError("feasible_sample_check: constraint rows are parallel");
    }
    // Minimum-norm particular solution: t_p = Q_1 R^{-T} b.
    const Eigen::Matrix<Real, 2, 1> b(B, G);
    const Eigen::Matrix<Real, 2, 1> y = r.transpose().template triangularView<Eigen::Lower>().solve(b);
    const Vec tp = q.leftCols(2) * y;
    const Mat null = q.rightCols(n - 2);

    const Vec z_star = null.transpose() * (best.t.cast<Real>() - tp);
    const Real t_scale = 1 + best.t.lpNorm<Eigen::Infinity>();
    const auto objective = [&](const Vec& t) { return 3 * t.squaredNorm() - 2 * t[c.i] * t[c.i]; };

    Rng rng(derive_seed(seed, {0x6c61u}));
    Real gap = std::numeric_limits<Real>::infinity();
    Vec z(n - 2);
    for (int k = 0; k < trials; ++k) {
        for (int d = 0; d < n - 2; ++d) z[d] = standard_normal(rng);
        if (k % 2 == 0) {
            // Global probe of the feasible plane.
            z *= t_scale * static_cast<Real>(std::pow(10.0, uniform(rng, -1.0, 1.0)));
        } else {
            // Local probe around the closed-form minimizer.
            z = z_star + z * (t_scale * static_cast<Real>(std::pow(10.0, uniform(rng, -8.0, 0.0))));
        }
        const Vec t = tp + null * z;
        gap = std::min(gap, objective(t) - qmin);
    }
    return static_cast<double>(gap);
}

std::vector<ConstraintData> sample_instances(int count, std::uint64_t seed, int n_min, int n_max,
                                             double bg, double min_denom) {
    if (count < 0 || n_min < 2 || n_max < n_min) throw DomainError("sample_instances: bad arguments");
    Rng rng(derive_seed(seed, {0x696eu}));
    std::vector<ConstraintData> out;
    out.reserve(static_cast<std::size_t>(count));
    std::uint64_t draw = 0;
    while (static_cast<int>(out.size()) < count) {
        const int n = n_min + static_cast<int>(rng() % static_cast<std::uint64_t>(n_max - n_min + 1));
        const auto lam = sample_gamma2(n, derive_seed(seed, {0x6c6du, draw++}), 1).front();
        ConstraintData c;
        c.fvec = quotient_eval(lam, OperatorKind::Quotient).grad;
        c.i = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        c.B = uniform(rng, -bg, bg);
        c.G = uniform(rng, -bg, bg);
        if (moments(c).denom < min_denom) continue;
        out.push_back(std::move(c));
    }
    return out;
}

MinimizeRecord compare_instance(long id, const ConstraintData& c) {
    const auto closed = closed_form_minimize(c);
    const auto kkt = kkt_oracle(c);
    MinimizeRecord rec;
    rec.instance_id = id;
    rec.qmin_closed = closed.qmin;
    rec.qmin_kkt = kkt.qmin;
    rec.max_t_diff = (closed.t - kkt.t).lpNorm<Eigen::Infinity>();
    rec.constraint_residual = constraint_residual(c, closed.t);
    const double tscale = 1.0 + closed.t.lpNorm<Eigen::Infinity>();
    rec.pass = rec.max_t_diff <= 1e-8 * tscale &&
               rec.constraint_residual <= 1e-10 * (1.0 + std::abs(c.B) + std::abs(c.G)) &&
               std::abs(rec.qmin_closed - rec.qmin_kkt) <= 1e-8 * (1.0 + rec.qmin_closed);
    return rec;
}

std::vector<ConstraintData> parse_instances(const std::string& text) {
    std::vector<ConstraintData> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("instances line " + std::to_string(lineno) + ": " + e.what());
        }
        for (const auto& [key, value] : j.items()) {
            if (key != "n" && key != "fvec" && key != "i" && key != "B" && key != "G") {
                throw UsageError("instances line " + std::to_string(lineno) + ": unknown key '" + key + "'");
            }
        }
        try {
            ConstraintData c;
            const auto f = j.at("fvec").get<std::vector<double>>();
            const int n = j.at("n").get<int>();
            if (n != static_cast<int>(f.size())) throw UsageError("n does not match fvec length");
            c.fvec = Eigen::Map<const Eigen::VectorXd>(f.data(), n);
            c.i = j.at("i").get<int>() - 1;
            c.B = j.at("B").get<double>();
            c.G = j.at("G").get<double>();
            validate(c, "instances");
            out.push_back(std::move(c));
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("instances line " + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw UsageError("instances line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::string instances_to_jsonl(const std::vector<ConstraintData>& instances) {
    std::string out;
    for (const auto& c : instances) {
        nlohmann::json j;
        j["n"] = c.n();
        j["fvec"] = std::vector<double>(c.fvec.data(), c.fvec.data() + c.n());
        j["i"] = c.i + 1;
        j["B"] = c.B;
        j["G"] = c.G;
        out += j.dump() + "\n";
    }
    return out;
}

std::string records_to_csv(const std::vector<MinimizeRecord>& records) {
    std::ostringstream os;
    os << "instance_id,qmin_closed,qmin_kkt,max_t_diff,constraint_residual,pass\n";
    char buf[160];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%s\n", r.instance_id, r.qmin_closed,
                      r.qmin_kkt, r.max_t_diff, r.constraint_residual, r.pass ? "true" : "false");
        os << buf;
    }
    return os.str();
}

}  // namespace hqlab
