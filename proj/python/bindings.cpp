#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "momdyn/analysis.hpp"
#include "momdyn/cli.hpp"
#include "momdyn/errors.hpp"
#include "momdyn/kernels.hpp"
#include "momdyn/lsq.hpp"
#include "momdyn/momentum.hpp"
#include "momdyn/spectrum.hpp"
#include "momdyn/volterra.hpp"

namespace py = pybind11;
using namespace momdyn;

namespace {

py::array_t<double> arr(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

AlgoParams with_mode(AlgoParams a, const std::string& mode) {
    if (!mode.empty()) a.mode = parse_mode(mode);
    return a;
}

py::dict trajectory_dict(const Trajectory& tr) {
    py::dict d;
    d["t"] = arr(tr.times);
    if (tr.aggregated) {
        d["mean"] = arr(tr.mean);
        d["q10"] = arr(tr.q10);
        d["q90"] = arr(tr.q90);
        d["stderr"] = arr(tr.stderr_);
    } else {
        d["value"] = arr(tr.values);
    }
    d["diverged"] = tr.diverged;
    d["diverged_runs"] = tr.diverged_runs;
    return d;
}

}  // namespace

PYBIND11_MODULE(_momdyn, m) {
    m.doc() = "Stochastic momentum dynamics on random least squares";

    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

    py::class_<SpectralMeasure>(m, "SpectralMeasure")
        .def_property_readonly("lambdas", [](const SpectralMeasure& s) { return arr(s.lambda); })
        .def_property_readonly("weights", [](const SpectralMeasure& s) { return arr(s.weight); })
        .def_readonly("zero_mass", &SpectralMeasure::zero_mass)
        .def_readonly("lambda_minus", &SpectralMeasure::lambda_minus)
        .def_readonly("lambda_plus", &SpectralMeasure::lambda_plus)
        .def_readonly("r", &SpectralMeasure::r)
        .def("trace_moment", [](const SpectralMeasure& s) { return trace_moment(s); })
        .def("to_dict", [](const SpectralMeasure& s) { return to_py(to_json(s)); })
        .def("__len__", &SpectralMeasure::size);

    m.def("mp_measure", &mp_measure, py::arg("r"), py::arg("nodes") = 200);
    m.def("esm_from_eigenvalues", &esm_from_eigenvalues, py::arg("eigenvalues"));

    py::class_<AlgoParams>(m, "AlgoParams")
        .def_property_readonly("name", [](const AlgoParams& a) { return algo_name(a.name); })
        .def_readonly("gamma", &AlgoParams::gamma)
        .def_readonly("gamma1", &AlgoParams::gamma1)
        .def_readonly("gamma2", &AlgoParams::gamma2)
        .def_readonly("theta", &AlgoParams::theta)
        .def_property_readonly("mode", [](const AlgoParams& a) { return mode_name(a.mode); })
        .def("to_dict", [](const AlgoParams& a) { return to_py(a.to_json()); })
        .def("__repr__", [](const AlgoParams& a) { return "AlgoParams(" + a.to_json().dump() + ")"; });

    m.def("sgd", &sgd, py::arg("gamma"));
    m.def("shb", &shb, py::arg("gamma"), py::arg("theta"));
    m.def("sdahb", &sdahb, py::arg("gamma"), py::arg("theta"), py::arg("gamma2") = 0.0);
    m.def("sdana", &sdana, py::arg("gamma1"), py::arg("gamma2"), py::arg("theta"));
    m.def(
        "defaults",
        [](const std::string& algo, const SpectralMeasure& mu, int n) { return defaults(parse_algo(algo), mu, n); },
        py::arg("algo"), py::arg("measure"), py::arg("n") = 0);

    m.def(
        "kernel_norm", [](const AlgoParams& a, const SpectralMeasure& mu, int n) { return kernel_norm(a, mu, n); },
        py::arg("params"), py::arg("measure"), py::arg("n") = 0);
    m.def("limiting_loss", &limiting_loss, py::arg("R_tilde"), py::arg("p"), py::arg("norm"));
    m.def(
        "analyze",
        [](const AlgoParams& a, const SpectralMeasure& mu, int n, double Rt) {
            return to_py(rate_report(a, mu, n, Rt).to_json());
        },
        py::arg("params"), py::arg("measure"), py::arg("n") = 0, py::arg("R_tilde") = 1.0);

    m.def(
        "predict",
        [](const AlgoParams& a, const SpectralMeasure& mu, double R, double Rt, double h, double T, int n,
           const std::string& method, const std::string& mode) {
            const AlgoParams p = with_mode(a, mode);
            PredictOptions po;
            po.h = h;
            po.T = T;
            po.solve.method = method == "picard" ? SolveMethod::Picard : SolveMethod::Marching;
            VolterraSolution s;
            {
                py::gil_scoped_release nogil;
                s = predict(modes_from_measure(mu, R, Rt), p.continuous(n), po);
            }
            py::dict d;
            d["t"] = arr(s.grid);
            d["F"] = arr(s.F);
            d["psi"] = arr(s.psi);
            d["meta"] = to_py(solution_metadata(s));
            return d;
        },
        py::arg("params"), py::arg("measure"), py::arg("R") = 1.0, py::arg("R_tilde") = 1.0, py::arg("h") = 0.05,
        py::arg("T") = 10.0, py::arg("n") = 0, py::arg("method") = "marching", py::arg("mode") = "");

    py::class_<LsqProblem>(m, "LsqProblem")
        .def_readonly("n", &LsqProblem::n)
        .def_readonly("d", &LsqProblem::d)
        .def_property_readonly("A", [](const LsqProblem& p) { return Eigen::MatrixXd(p.A); })
        .def_property_readonly("b", [](const LsqProblem& p) { return arr({p.b.data(), p.b.data() + p.b.size()}); })
        .def("hessian_eigenvalues", [](const LsqProblem& p) { return arr(hessian_eigenvalues(p)); })
        .def("esm", [](const LsqProblem& p) { return esm_from_eigenvalues(hessian_eigenvalues(p)); });

    m.def("generate_gaussian", &generate_gaussian, py::arg("n"), py::arg("d"), py::arg("R") = 1.0,
          py::arg("R_tilde") = 0.0, py::arg("seed") = 1);
    m.def(
        "load_csv",
        [](const std::string& path, bool normalize, bool center, int target_col) {
            CsvOptions o;
            o.normalize = normalize;
            o.center = center;
            o.target_col = target_col;
            return load_csv(path, o);
        },
        py::arg("path"), py::arg("normalize") = true, py::arg("center") = false, py::arg("target_col") = -1);

    m.def(
        "simulate",
        [](const AlgoParams& a, int n, int d, double R, double Rt, double epochs, int seeds, std::uint64_t seed,
           const LsqProblem* data, int threads) {
            EnsembleSpec es;
            es.n = data ? data->n : n;
            es.d = data ? data->d : d;
            es.R = R;
            es.R_tilde = Rt;
            es.seed = seed;
            es.data = data;
            es.threads = threads;
            Trajectory tr;
            {
                py::gil_scoped_release nogil;
                tr = run_ensemble(es, a, epochs, seeds);
            }
            return trajectory_dict(tr);
        },
        py::arg("params"), py::arg("n") = 256, py::arg("d") = 256, py::arg("R") = 1.0, py::arg("R_tilde") = 0.0,
        py::arg("epochs") = 10.0, py::arg("seeds") = 10, py::arg("seed") = 1, py::arg("data") = nullptr,
        py::arg("threads") = 0);

    m.def(
        "simulate_homogenized",
        [](const LsqProblem& p, const AlgoParams& a, double T, int paths, std::uint64_t seed, double dt) {
            HomogenizedOptions ho;
            ho.dt = dt;
            Trajectory tr;
            {
                py::gil_scoped_release nogil;
                tr = simulate_homogenized_ensemble(to_spectral(p), a.continuous(p.n), T, paths, seed, ho);
            }
            return trajectory_dict(tr);
        },
        py::arg("problem"), py::arg("params"), py::arg("T") = 5.0, py::arg("paths") = 50, py::arg("seed") = 1,
        py::arg("dt") = 0.01);

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "momdyn");
            std::vector<const char*> argv;
            for (auto& s : args) argv.push_back(s.c_str());
            return run_cli(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"));
}
