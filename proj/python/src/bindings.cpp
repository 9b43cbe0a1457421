#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "copcp/cli.hpp"
#include "copcp/conformal.hpp"
#include "copcp/copula.hpp"
#include "copcp/dataio.hpp"
#include "copcp/error.hpp"
#include "copcp/eval.hpp"
#include "copcp/regress.hpp"
#include "copcp/report_io.hpp"
#include "copcp/scores.hpp"

namespace py = pybind11;
using namespace copcp;

namespace {

// Boxes come back as a pair of (rows x m) arrays.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> stack(const std::vector<PredictionBox>& boxes, Eigen::Index m) {
    Eigen::MatrixXd lower(static_cast<Eigen::Index>(boxes.size()), m), upper(lower.rows(), m);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        lower.row(static_cast<Eigen::Index>(i)) = boxes[i].lower.transpose();
        upper.row(static_cast<Eigen::Index>(i)) = boxes[i].upper.transpose();
    }
    return {lower, upper};
}

std::vector<PredictionBox> unstack(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& upper) {
    if (lower.rows() != upper.rows() || lower.cols() != upper.cols())
        throw Error(ErrorCode::DimensionMismatch, "lower and upper differ in shape");
    std::vector<PredictionBox> boxes;
    for (Eigen::Index i = 0; i < lower.rows(); ++i) {
        const Eigen::VectorXd lo = lower.row(i).transpose(), hi = upper.row(i).transpose();
        boxes.push_back({lo, hi, (lo + hi) / 2.0});
    }
    return boxes;
}

py::object json_to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& o) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_copcp, m) {
    m.doc() = "Copula-calibrated conformal prediction for multi-target regression";

    static py::exception<Error> error(m, "CopcpError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(error.ptr(), e.what());
        }
    });

    // data
    py::class_<Dataset>(m, "Dataset")
        .def(py::init([](Eigen::MatrixXd x, Eigen::MatrixXd y, std::vector<std::string> fn,
                         std::vector<std::string> tn) {
                 Dataset d{std::move(x), std::move(y), std::move(fn), std::move(tn)};
                 d.validate();
                 return d;
             }),
             py::arg("features"), py::arg("targets"), py::arg("feature_names"), py::arg("target_names"))
        .def_readonly("features", &Dataset::features)
        .def_readonly("targets", &Dataset::targets)
        .def_readonly("feature_names", &Dataset::feature_names)
        .def_readonly("target_names", &Dataset::target_names)
        .def_property_readonly("rows", &Dataset::rows);

    m.def("synth_dataset", &synth_dataset, py::arg("n"), py::arg("m"), py::arg("d") = 5, py::arg("dependence") = 0.0,
          py::arg("seed") = 0);
    m.def("load_csv", &load_csv, py::arg("path"), py::arg("targets"));
    m.def("write_csv", &write_csv, py::arg("path"), py::arg("data"));
    m.def(
        "make_folds",
        [](Index n, int folds, double calibration_fraction, std::uint64_t seed, Index min_calibration) {
            const SplitPlan plan = make_folds(n, {folds, calibration_fraction, seed, min_calibration});
            py::list out;
            for (const auto& f : plan.folds) out.append(py::make_tuple(f.train, f.calib, f.test));
            return out;
        },
        py::arg("n"), py::arg("folds") = 10, py::arg("calibration_fraction") = 0.1, py::arg("seed") = 0,
        py::arg("min_calibration") = 0, "List of (train, calib, test) index lists.");

    // scores
    m.def("standard_score", &standard_score, py::arg("y"), py::arg("yhat"));
    m.def("normalized_score", &normalized_score, py::arg("y"), py::arg("yhat"), py::arg("mu"),
          py::arg("beta") = kDefaultBeta);
    m.def(
        "score_matrix",
        [](const Eigen::MatrixXd& y, const Eigen::MatrixXd& yhat, const Eigen::MatrixXd& mu, double beta) {
            return score_matrix(y, yhat, mu, beta).values();
        },
        py::arg("y"), py::arg("yhat"), py::arg("mu"), py::arg("beta") = kDefaultBeta);
    m.def(
        "ecdf_eval",
        [](const Eigen::VectorXd& values, double x, const std::string& divisor) {
            return EmpiricalCdf(values, ecdf_divisor_from_string(divisor)).eval(x);
        },
        py::arg("values"), py::arg("x"), py::arg("divisor") = "n");
    m.def(
        "ecdf_quantile",
        [](const Eigen::VectorXd& values, double p, const std::string& divisor) {
            return EmpiricalCdf(values, ecdf_divisor_from_string(divisor)).quantile(p);
        },
        py::arg("values"), py::arg("p"), py::arg("divisor") = "n");
    m.def(
        "pseudo_observations",
        [](const Eigen::MatrixXd& scores, const std::string& divisor) {
            return pseudo_observations(ScoreMatrix(scores), ecdf_divisor_from_string(divisor)).u;
        },
        py::arg("scores"), py::arg("divisor") = "n");
    m.def(
        "p_value", [](const std::vector<double>& calib, double s) { return p_value(calib, s); }, py::arg("calib"),
        py::arg("score"));

    // copulas
    py::class_<CopulaModel>(m, "CopulaModel")
        .def_static("independent", &CopulaModel::independent)
        .def_static("gumbel", &CopulaModel::gumbel, py::arg("theta"))
        .def_static(
            "empirical", [](const Eigen::MatrixXd& u) { return CopulaModel::empirical(PseudoObservations{u}); },
            py::arg("pseudo"))
        .def_property_readonly("kind", [](const CopulaModel& c) { return std::string(to_string(c.kind())); })
        .def_property_readonly("theta", &CopulaModel::theta)
        .def(
            "cdf", [](const CopulaModel& c, const Eigen::VectorXd& u) { return copula_cdf(c, u); }, py::arg("u"))
        .def(
            "per_target_confidence",
            [](const CopulaModel& c, Eigen::Index m, double eg) {
                const auto s = per_target_confidence(c, m, eg);
                return py::make_tuple(s.epsilon_t, s.level);
            },
            py::arg("m"), py::arg("epsilon_g"), "(epsilon_t, level)");

    m.def(
        "frechet_bounds",
        [](const std::vector<double>& u) {
            const auto b = frechet_bounds(u);
            return py::make_tuple(b.lower, b.upper);
        },
        py::arg("u"));
    m.def(
        "kendall_tau", [](const std::vector<double>& x, const std::vector<double>& y) { return kendall_tau(x, y); },
        py::arg("x"), py::arg("y"));
    m.def("independent_epsilon_t", &independent_epsilon_t, py::arg("epsilon_g"), py::arg("m"));
    m.def("gumbel_epsilon_t", &gumbel_epsilon_t, py::arg("epsilon_g"), py::arg("m"), py::arg("theta"));
    m.def(
        "empirical_epsilon_t",
        [](const Eigen::MatrixXd& u, double eg) { return empirical_epsilon_t(PseudoObservations{u}, eg); },
        py::arg("pseudo"), py::arg("epsilon_g"));
    m.def("gumbel_density", &gumbel_density, py::arg("u"), py::arg("v"), py::arg("theta"));

    py::class_<GumbelFit>(m, "GumbelFit")
        .def_readonly("theta", &GumbelFit::theta)
        .def_readonly("mean_tau", &GumbelFit::mean_tau)
        .def_readonly("degenerate", &GumbelFit::degenerate)
        .def_readonly("unimodal", &GumbelFit::unimodal)
        .def_readonly("warning", &GumbelFit::warning)
        .def("model", &GumbelFit::model);
    m.def(
        "fit_gumbel",
        [](const Eigen::MatrixXd& u, const std::string& method, double theta_max) {
            return fit_gumbel(PseudoObservations{u}, gumbel_estimator_from_string(method), theta_max);
        },
        py::arg("pseudo"), py::arg("method") = "tau", py::arg("theta_max") = kGumbelThetaMax);

    // regressors
    py::class_<RegressorSpec>(m, "RegressorSpec")
        .def(py::init([](const std::string& kind, std::vector<int> widths, double dropout, int epochs, double lr,
                         int batch, int k, double l2) {
                 RegressorSpec s{regressor_kind_from_string(kind), std::move(widths), dropout, epochs, lr, batch, k,
                                 l2};
                 s.validate();
                 return s;
             }),
             py::arg("kind") = "mlp", py::arg("widths") = std::vector<int>{128, 128, 64, 32},
             py::arg("dropout") = 0.1, py::arg("epochs") = 100, py::arg("lr") = 1e-3, py::arg("batch") = 32,
             py::arg("k") = 5, py::arg("l2") = 1e-6)
        .def_property_readonly("kind", [](const RegressorSpec& s) { return std::string(to_string(s.kind)); })
        .def_readonly("widths", &RegressorSpec::widths)
        .def_readonly("epochs", &RegressorSpec::epochs)
        .def_readonly("k", &RegressorSpec::k)
        .def("__repr__", [](const RegressorSpec& s) { return "RegressorSpec(" + to_json(s).dump() + ")"; });

    py::class_<FittedModel, std::shared_ptr<FittedModel>>(m, "FittedModel")
        .def("predict", &FittedModel::predict, py::arg("x"))
        .def_property_readonly("input_dim", &FittedModel::input_dim)
        .def_property_readonly("output_dim", &FittedModel::output_dim)
        .def_property_readonly("loss_history", [](const FittedModel& f) -> py::object {
            if (const auto* mlp = std::get_if<MlpModel>(&f.params())) return py::cast(mlp->loss_history);
            return py::none();
        });
    m.def(
        "fit",
        [](const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, std::uint64_t seed) {
            return std::make_shared<FittedModel>(fit(spec, x, y, seed));
        },
        py::arg("spec"), py::arg("x"), py::arg("y"), py::arg("seed") = 0);

    // conformal predictor
    py::class_<ConformalPredictor>(m, "ConformalPredictor")
        .def_static(
            "build",
            [](const Eigen::MatrixXd& xt, const Eigen::MatrixXd& yt, const Eigen::MatrixXd& xc,
               const Eigen::MatrixXd& yc, const RegressorSpec& spec, std::optional<RegressorSpec> error_spec,
               const std::string& copula, double beta, std::uint64_t seed, const std::string& estimator,
               const std::string& divisor) {
                CalibrationOptions opts;
                opts.gumbel_estimator = gumbel_estimator_from_string(estimator);
                opts.ecdf_divisor = ecdf_divisor_from_string(divisor);
                return ConformalPredictor::build(xt, yt, xc, yc, spec, error_spec, copula_kind_from_string(copula),
                                                 beta, seed, opts);
            },
            py::arg("x_train"), py::arg("y_train"), py::arg("x_calib"), py::arg("y_calib"), py::arg("spec"),
            py::arg("error_spec") = py::none(), py::arg("copula") = "empirical", py::arg("beta") = kDefaultBeta,
            py::arg("seed") = 0, py::arg("gumbel_estimator") = "tau", py::arg("divisor") = "n")
        .def(
            "with_copula",
            [](const ConformalPredictor& p, const std::string& copula, const std::string& estimator) {
                CalibrationOptions opts;
                opts.gumbel_estimator = gumbel_estimator_from_string(estimator);
                opts.ecdf_divisor = p.divisor();
                return p.with_copula(copula_kind_from_string(copula), opts);
            },
            py::arg("copula"), py::arg("gumbel_estimator") = "tau")
        .def("thresholds", &ConformalPredictor::thresholds, py::arg("epsilon_g"))
        .def(
            "confidence",
            [](const ConformalPredictor& p, double eg) {
                const auto c = p.confidence(eg);
                return py::make_tuple(c.epsilon_t, c.level);
            },
            py::arg("epsilon_g"), "(epsilon_t, level)")
        .def(
            "predict_boxes",
            [](const ConformalPredictor& p, const Eigen::MatrixXd& x, double eg) {
                return stack(p.predict_boxes(x, eg), p.targets());
            },
            py::arg("x"), py::arg("epsilon_g"), "(lower, upper), each rows x m.")
        .def(
            "predict",
            [](const ConformalPredictor& p, const Eigen::MatrixXd& x) { return p.point_predictions(x).center; },
            py::arg("x"))
        .def_property_readonly("scores", [](const ConformalPredictor& p) { return p.scores().values(); })
        .def_property_readonly("copula", &ConformalPredictor::copula)
        .def_property_readonly("theta", [](const ConformalPredictor& p) { return p.copula().theta(); })
        .def_property_readonly("targets", &ConformalPredictor::targets);

    // evaluation
    m.def("default_epsilon_grid", &default_epsilon_grid);
    m.def(
        "coverage",
        [](const Eigen::MatrixXd& lower, const Eigen::MatrixXd& upper, const Eigen::MatrixXd& y) {
            return coverage(unstack(lower, upper), y);
        },
        py::arg("lower"), py::arg("upper"), py::arg("y"));
    m.def(
        "validity_curve",
        [](const ConformalPredictor& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
           std::optional<std::vector<double>> grid) {
            return validity_curve(p, x, y, grid ? *grid : default_epsilon_grid()).coverage;
        },
        py::arg("predictor"), py::arg("x"), py::arg("y"), py::arg("grid") = py::none());
    m.def(
        "validity_gap",
        [](std::vector<double> grid, std::vector<double> cov) {
            return validity_gap(ValidityCurve{std::move(grid), std::move(cov)});
        },
        py::arg("grid"), py::arg("coverage"));
    m.def("efficiency_median_volume", &efficiency_median_volume, py::arg("predictor"), py::arg("x"),
          py::arg("epsilon_g") = 0.1);
    m.def(
        "run_experiment",
        [](const Dataset& data, const py::object& config, int jobs) {
            const ExperimentConfig c = config_from_json(py_to_json(config));
            ExperimentReport report;
            {
                py::gil_scoped_release release;
                report = run_experiment(data, c, jobs);
            }
            return json_to_py(to_json(report));
        },
        py::arg("data"), py::arg("config"), py::arg("jobs") = 1,
        "Cross-validated run; `config` is a dict in the config-file schema, the result is the report dict.");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = run_cli(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process: (exit_code, stdout, stderr).");
}
