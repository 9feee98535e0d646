#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wildfire/cli.hpp"
#include "wildfire/counterfactual.hpp"
#include "wildfire/error.hpp"
#include "wildfire/eval.hpp"
#include "wildfire/features.hpp"
#include "wildfire/models.hpp"
#include "wildfire/smote.hpp"
#include "wildfire/synthetic.hpp"

namespace py = pybind11;
using namespace wildfire;

namespace {

// Structured results cross the boundary as JSON text; the Python package
// parses them.
std::string dump(const nlohmann::json& j) { return j.dump(); }

Dataset make_dataset(const Eigen::MatrixXd& x, const std::vector<int>& y) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorKind::Contract, "x and y differ in length");
    return Dataset{x, y};
}

ModelVariant variant_of(const std::string& name) {
    const auto v = parse_variant(name);
    if (!v) throw Error(ErrorKind::Validation, "unknown model variant '" + name + "'");
    return *v;
}

}  // namespace

PYBIND11_MODULE(_wildfire, m) {
    m.doc() = "Native core of wildfire_risk";

    py::register_exception<Error>(m, "WildfireError", PyExc_RuntimeError);

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "wildfire");
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));

    m.def("label_static", [](double acres) { return static_cast<int>(label_static(acres)); });
    m.def(
        "label_dynamic",
        [](const std::vector<double>& acres, double threshold) {
            std::vector<FireIncident> fires;
            for (const double a : acres) fires.push_back({"", 0, {}, a});
            return label_dynamic(fires, threshold);
        },
        py::arg("acres"), py::arg("threshold") = kLargeFireThreshold);

    m.def("metrics_json", [](const std::vector<int>& pred, const std::vector<int>& truth, const std::vector<int>& order) {
        const ConfusionMatrix cm = confusion(pred, truth, order);
        return dump({{"metrics", to_json(metrics(cm))}, {"confusion", to_json(cm)}});
    });

    m.def(
        "smote",
        [](const Eigen::MatrixXd& x, const std::vector<int>& y, int k, std::uint64_t seed) {
            const SmoteResult r = smote(make_dataset(x, y), {k, seed});
            return py::make_tuple(r.rows.x, r.rows.y, r.parents);
        },
        py::arg("x"), py::arg("y"), py::arg("k_neighbors") = 5, py::arg("seed") = 0);

    m.def(
        "fit_model_json",
        [](const std::string& variant, const Eigen::MatrixXd& x, const std::vector<int>& y, std::uint64_t seed,
           bool use_smote) {
            const auto smote_cfg = use_smote ? std::optional<SmoteConfig>(SmoteConfig{}) : std::nullopt;
            py::gil_scoped_release release;
            return dump(model_to_json(fit_model(variant_of(variant), make_dataset(x, y), {}, seed, smote_cfg)));
        },
        py::arg("variant"), py::arg("x"), py::arg("y"), py::arg("seed"), py::arg("smote") = true);

    m.def("model_hash", [](const std::string& doc) { return model_hash(model_from_json(nlohmann::json::parse(doc))); });

    m.def("predict_raw", [](const std::string& doc, const Eigen::MatrixXd& x) {
        return predict_raw(model_from_json(nlohmann::json::parse(doc)), x);
    });

    m.def("predict_proba_raw", [](const std::string& doc, const Eigen::MatrixXd& x) {
        const TrainedModel model = model_from_json(nlohmann::json::parse(doc));
        Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(model.class_labels.size()));
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            out.row(i) = predict_proba(model, model.standardization.apply(Eigen::VectorXd(x.row(i).transpose())))
                             .transpose();
        }
        return out;
    });

    m.def(
        "cross_validate_json",
        [](const std::string& variant, const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t k,
           std::uint64_t seed, bool use_smote) {
            CrossValidationOptions opts;
            opts.k = k;
            opts.seed = seed;
            opts.smote_on_train = use_smote;
            py::gil_scoped_release release;
            return dump(to_json(cross_validate(variant_of(variant), make_dataset(x, y), opts)));
        },
        py::arg("variant"), py::arg("x"), py::arg("y"), py::arg("k") = 5, py::arg("seed") = 0,
        py::arg("smote") = true);

    m.def(
        "synthetic_dataset",
        [](const std::string& config_json) {
            const SyntheticRegionConfig cfg = synthetic_config_from_json(nlohmann::json::parse(config_json));
            const SyntheticRegion r = generate_synthetic_region(cfg);
            Eigen::MatrixXd x(static_cast<Eigen::Index>(r.truth.size()), static_cast<Eigen::Index>(kNumFeatures));
            std::vector<int> y;
            for (std::size_t i = 0; i < r.truth.size(); ++i) {
                x.row(static_cast<Eigen::Index>(i)) = to_vector(r.truth[i].features).transpose();
                y.push_back(r.truth[i].label);
            }
            return py::make_tuple(x, y);
        },
        py::arg("config_json") = "{}");

    m.def("count_risk_cells", [](const std::string& doc, const Eigen::MatrixXd& x, const std::string& kind,
                                 double parameter) {
        const TrainedModel model = model_from_json(nlohmann::json::parse(doc));
        const auto k = parse_scenario_kind(kind);
        if (!k) throw Error(ErrorKind::Validation, "unknown scenario kind '" + kind + "'");
        std::vector<DynamicSample> rows(static_cast<std::size_t>(x.rows()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < kNumFeatures; ++j) {
                rows[i].features.values[j] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
        const std::vector<Scenario> one{Scenario{*k, parameter, ""}};
        const auto r = sweep(model, rows, one).front();
        return py::make_tuple(r.baseline_risk_cells, r.treated_risk_cells);
    });
}
