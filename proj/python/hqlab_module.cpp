#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hqlab/cli.hpp"
#include "hqlab/errors.hpp"
#include "hqlab/estimates.hpp"
#include "hqlab/inequality.hpp"
#include "hqlab/lagrange.hpp"
#include "hqlab/presets.hpp"

namespace py = pybind11;
using namespace hqlab;

namespace {

OperatorKind kind_of(const std::string& s) { return parse_operator_kind(s); }

py::dict solution_dict(const LagrangeSolution& s) {
    py::dict d;
    d["t"] = s.t;
    d["mu1"] = s.mu1;
    d["mu2"] = s.mu2;
    d["R"] = s.R;
    d["S"] = s.S;
    d["denom"] = s.denom;
    d["qmin"] = s.qmin;
    return d;
}

ConstraintData constraint(const Eigen::VectorXd& fvec, int i, double B, double G) {
    ConstraintData c;
    c.fvec = fvec;
    c.i = i;
    c.B = B;
    c.G = G;
    return c;
}

// Grid values as a numpy array indexed [i, j] or [i, j, k].
py::array_t<double> grid_array(const GridFunction& u) {
    std::vector<py::ssize_t> shape, strides;
    for (int a = 0; a < u.dim(); ++a) {
        shape.push_back(u.shape(a));
        strides.push_back(static_cast<py::ssize_t>(u.stride(a) * sizeof(double)));
    }
    py::array_t<double> out(shape, strides);
    std::copy(u.values().begin(), u.values().end(), out.mutable_data());
    return out;
}

struct Solved {
    Preset preset;
    ProblemSpec spec;
    SolveResult result;
};

Solved solve_preset(const std::string& name, std::optional<int> grid, std::optional<std::string> kind) {
    Preset p = find_preset(name);
    ProblemSpec spec = make_problem(p, kind ? std::optional<OperatorKind>(kind_of(*kind)) : std::nullopt);
    SolverConfig cfg;
    cfg.grid_points = grid.value_or(p.default_grid);
    SolveResult r = [&] {
        py::gil_scoped_release release;
        return newton_solve(spec, cfg);
    }();
    return {std::move(p), std::move(spec), std::move(r)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Hessian quotient operators: symmetric functions, inequalities, Lagrange minima, Newton solves";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ConeViolation>(m, "ConeViolation", base.ptr());
    py::register_exception<DegenerateError>(m, "DegenerateError", base.ptr());
    py::register_exception<ConsistencyError>(m, "ConsistencyError", base.ptr());
    py::register_exception<UsageError>(m, "UsageError", base.ptr());

    m.def(
        "sigma", [](const std::vector<double>& lam, int k) { return elementary_symmetric(std::span<const double>(lam), k); },
        py::arg("lam"), py::arg("k"));
    m.def(
        "in_gamma", [](const std::vector<double>& lam, int k) { return cone_contains(Spectrum(lam), k); },
        py::arg("lam"), py::arg("k") = 2);
    m.def(
        "quotient_eval",
        [](const std::vector<double>& lam, const std::string& kind) {
            const Spectrum s(lam);
            const auto q = quotient_eval(s, kind_of(kind));
            py::dict d;
            d["lam"] = std::vector<double>(s.values().begin(), s.values().end());
            d["f"] = q.f;
            d["sigma1"] = q.sigma1;
            d["sigma2"] = q.sigma2;
            d["grad"] = q.grad;
            d["hess"] = q.hess;
            d["divided_diff"] = q.divided_diff;
            return d;
        },
        py::arg("lam"), py::arg("kind") = "quotient", "Values, gradient and Hessian in descending eigenvalue order.");
    m.def(
        "matrix_derivative",
        [](const Eigen::MatrixXd& a, const std::string& kind) { return matrix_derivative(a, kind_of(kind)); },
        py::arg("a"), py::arg("kind") = "quotient");
    m.def(
        "sample_gamma2",
        [](int n, std::uint64_t seed, int count) {
            std::vector<std::vector<double>> out;
            for (const auto& s : sample_gamma2(n, seed, count)) out.emplace_back(s.values().begin(), s.values().end());
            return out;
        },
        py::arg("n"), py::arg("seed"), py::arg("count"));

    m.def("cn", &cn, py::arg("n"));
    m.def("concavity_root", &concavity_root, py::arg("n"));
    m.def(
        "concavity_quadratic",
        [](double fi, int n, const std::string& kind) { return check_concavity_quadratic(fi, n, kind_of(kind)); },
        py::arg("fi"), py::arg("n"), py::arg("kind") = "quotient");
    m.def(
        "lemma21",
        [](const std::vector<double>& lam) {
            const auto r = check_lemma21(Spectrum(lam));
            return py::make_tuple(r.margin, r.proof_margin);
        },
        py::arg("lam"));
    m.def(
        "lemma22_min_margin", [](const std::vector<double>& lam) { return check_lemma22(Spectrum(lam)).min_margin(); },
        py::arg("lam"));
    m.def(
        "qtilde",
        [](const std::vector<double>& lam, int i, const std::string& kind) {
            const auto e = check_qtilde(Spectrum(lam), i, kind_of(kind));
            py::dict d;
            d["R"] = e.R;
            d["S"] = e.S;
            d["denom"] = e.denom;
            d["qtilde"] = e.qtilde;
            d["expanded"] = e.qtilde_expanded;
            d["expanded_direct"] = e.qtilde_expanded_direct;
            d["max_rel_error"] = e.max_rel_error();
            d["conditioning"] = e.conditioning();
            return d;
        },
        py::arg("lam"), py::arg("i"), py::arg("kind") = "quotient");
    m.def(
        "run_suite",
        [](const std::vector<int>& dims, long samples, std::uint64_t seed, unsigned workers) {
            std::vector<CheckReport> reports;
            {
                py::gil_scoped_release release;
                reports = run_suite(dims, samples, seed, workers);
            }
            py::list out;
            for (const auto& r : reports) {
                py::dict d;
                d["name"] = r.name;
                d["n"] = r.n;
                d["samples"] = r.samples;
                d["min_margin"] = r.min_margin;
                d["passed"] = r.passed;
                d["worst_input"] = r.worst_input;
                out.append(d);
            }
            return out;
        },
        py::arg("dims"), py::arg("samples"), py::arg("seed"), py::arg("workers") = 0);

    m.def(
        "minimize",
        [](const Eigen::VectorXd& fvec, int i, double B, double G) {
            return solution_dict(closed_form_minimize(constraint(fvec, i, B, G)));
        },
        py::arg("fvec"), py::arg("i"), py::arg("B"), py::arg("G"), "Closed-form minimum; i is 0-based.");
    m.def(
        "kkt_oracle",
        [](const Eigen::VectorXd& fvec, int i, double B, double G) {
            return solution_dict(kkt_oracle(constraint(fvec, i, B, G)));
        },
        py::arg("fvec"), py::arg("i"), py::arg("B"), py::arg("G"));
    m.def(
        "feasible_gap",
        [](const Eigen::VectorXd& fvec, int i, double B, double G, int trials, std::uint64_t seed) {
            return feasible_sample_check(constraint(fvec, i, B, G), trials, seed);
        },
        py::arg("fvec"), py::arg("i"), py::arg("B"), py::arg("G"), py::arg("trials"), py::arg("seed") = 1);

    m.def("preset_names", &preset_names);
    m.def("doubling_family_names", &doubling_family_names);
    m.def(
        "solve",
        [](const std::string& preset, std::optional<int> grid, std::optional<std::string> kind) {
            const auto s = solve_preset(preset, grid, kind);
            const auto& r = s.result.report;
            py::dict d;
            d["u"] = grid_array(s.result.u);
            d["h"] = s.result.u.h();
            d["iterations"] = r.iterations;
            d["final_residual_norm"] = r.final_residual_norm;
            d["min_sigma2_over_grid"] = r.min_sigma2_over_grid;
            d["converged"] = r.converged;
            d["residual_history"] = r.residual_history;
            d["message"] = r.message;
            d["sup_error"] = max_abs_diff(s.result.u, sample_field(s.preset.exact.value, s.result.u));
            return d;
        },
        py::arg("preset"), py::arg("grid") = py::none(), py::arg("kind") = py::none());
    m.def(
        "doubling",
        [](const std::string& preset, std::optional<int> grid) {
            const auto s = solve_preset(preset, grid, std::nullopt);
            if (!s.result.report.converged) throw DomainError("solve of '" + preset + "' did not converge");
            const auto r = doubling_report(s.result.u, s.spec);
            py::dict d;
            d["M1"] = r.M1;
            d["M2"] = r.M2;
            d["ratio"] = r.ratio;
            d["dyn_margin"] = r.dyn_margin;
            d["semiconvex_modulus"] = r.semiconvex_modulus;
            d["min_sigma2"] = r.min_sigma2;
            d["two_convex"] = r.two_convex;
            d["condition_holds"] = r.condition_holds;
            d["W_max"] = r.W_max;
            d["max_point"] = r.max_point;
            return d;
        },
        py::arg("preset"), py::arg("grid") = py::none());

    m.def(
        "cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "hqlab");
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = main_entry(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command line in-process; returns (exit status, stdout, stderr).");
}
