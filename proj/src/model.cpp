#include <algorithm>
#include <cmath>

#include "wildfire/codec.hpp"
#include "wildfire/error.hpp"
#include "wildfire/models.hpp"
#include "wildfire/seed.hpp"
#include "wildfire/text.hpp"

namespace wildfire {

using nlohmann::json;

std::string_view variant_name(ModelVariant v) {
    switch (v) {
        case ModelVariant::Mlp: return "mlp";
        case ModelVariant::LogReg: return "logreg";
        case ModelVariant::SvmRbf: return "svm";
        case ModelVariant::RandomForest: return "rf";
    }
    return "unknown";
}

std::optional<ModelVariant> parse_variant(std::string_view name) {
    for (const auto v : {ModelVariant::Mlp, ModelVariant::LogReg, ModelVariant::SvmRbf, ModelVariant::RandomForest}) {
        if (variant_name(v) == name) return v;
    }
    return std::nullopt;
}

json to_json(const ModelConfig& cfg, ModelVariant variant) {
    switch (variant) {
        case ModelVariant::Mlp:
            return {{"hidden", cfg.mlp.hidden},
                    {"learning_rate", cfg.mlp.learning_rate},
                    {"epochs", cfg.mlp.epochs},
                    {"batch_size", cfg.mlp.batch_size},
                    {"activation", "sigmoid"}};
        case ModelVariant::LogReg:
            return {{"l2", cfg.logreg.l2},
                    {"max_iterations", cfg.logreg.max_iterations},
                    {"tolerance", cfg.logreg.tolerance}};
        case ModelVariant::SvmRbf:
            return {{"c", cfg.svm.c},
                    {"gamma", cfg.svm.gamma},
                    {"tolerance", cfg.svm.tolerance},
                    {"max_passes", cfg.svm.max_passes},
                    {"max_total_passes", cfg.svm.max_total_passes}};
        case ModelVariant::RandomForest:
            return {{"n_estimators", cfg.forest.n_estimators},
                    {"max_features", cfg.forest.max_features},
                    {"bootstrap", cfg.forest.bootstrap},
                    {"min_samples_split", cfg.forest.min_samples_split},
                    {"criterion", "gini"}};
    }
    return json::object();
}

ModelConfig model_config_from_json(const json& doc, ModelConfig base) {
    try {
        if (doc.contains("mlp")) {
            const auto& m = doc.at("mlp");
            base.mlp.hidden = m.value("hidden", base.mlp.hidden);
            base.mlp.learning_rate = m.value("learning_rate", base.mlp.learning_rate);
            base.mlp.epochs = m.value("epochs", base.mlp.epochs);
            base.mlp.batch_size = m.value("batch_size", base.mlp.batch_size);
        }
        if (doc.contains("logreg")) {
            const auto& m = doc.at("logreg");
            base.logreg.l2 = m.value("l2", base.logreg.l2);
            base.logreg.max_iterations = m.value("max_iterations", base.logreg.max_iterations);
            base.logreg.tolerance = m.value("tolerance", base.logreg.tolerance);
        }
        if (doc.contains("svm")) {
            const auto& m = doc.at("svm");
            base.svm.c = m.value("c", base.svm.c);
            base.svm.gamma = m.value("gamma", base.svm.gamma);
            base.svm.tolerance = m.value("tolerance", base.svm.tolerance);
            base.svm.max_passes = m.value("max_passes", base.svm.max_passes);
            base.svm.max_total_passes = m.value("max_total_passes", base.svm.max_total_passes);
        }
        if (doc.contains("rf")) {
            const auto& m = doc.at("rf");
            base.forest.n_estimators = m.value("n_estimators", base.forest.n_estimators);
            base.forest.max_features = m.value("max_features", base.forest.max_features);
            base.forest.bootstrap = m.value("bootstrap", base.forest.bootstrap);
            base.forest.min_samples_split = m.value("min_samples_split", base.forest.min_samples_split);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Validation, std::string("model configuration: ") + e.what());
    }
    return base;
}

namespace {

std::vector<int> to_indices(const std::vector<int>& y, const std::vector<int>& labels) {
    std::vector<int> idx(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        idx[i] = static_cast<int>(std::lower_bound(labels.begin(), labels.end(), y[i]) - labels.begin());
    }
    return idx;
}

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

TrainedModel train(ModelVariant variant, const Dataset& rows, const ModelConfig& config, std::uint64_t seed,
                   const Standardization& standardization) {
    const auto labels = class_labels(rows.y);
    if (labels.size() < 2) {
        throw Error(ErrorKind::Contract, "training needs at least two classes, found " + std::to_string(labels.size()));
    }
    if (!rows.x.allFinite()) throw Error(ErrorKind::Contract, "training rows contain non-finite values");
    if (standardization.n_features() != rows.n_features()) {
        throw Error(ErrorKind::Contract, "standardization width does not match the training rows");
    }
    const auto y = to_indices(rows.y, labels);
    const int n_classes = static_cast<int>(labels.size());

    TrainedModel model;
    model.variant = variant;
    model.standardization = standardization;
    model.class_labels = labels;
    model.config = config;
    model.seed = seed;
    switch (variant) {
        case ModelVariant::Mlp:
            model.params = train_mlp(rows.x, y, n_classes, config.mlp, seed);
            break;
        case ModelVariant::LogReg:
            model.params = train_logreg(rows.x, y, n_classes, config.logreg);
            break;
        case ModelVariant::SvmRbf: {
            if (n_classes != 2) {
                throw Error(ErrorKind::Contract, "the RBF SVM supports the binary task only");
            }
            Eigen::VectorXd signs(static_cast<Eigen::Index>(y.size()));
            for (std::size_t i = 0; i < y.size(); ++i) signs[static_cast<Eigen::Index>(i)] = y[i] == 1 ? 1.0 : -1.0;
            model.params = train_svm(rows.x, signs, config.svm, seed);
            break;
        }
        case ModelVariant::RandomForest:
            model.params = train_forest(rows.x, y, n_classes, config.forest, seed);
            break;
    }
    return model;
}

TrainedModel fit_model(ModelVariant variant, const Dataset& raw_rows, const ModelConfig& config, std::uint64_t seed,
                       const std::optional<SmoteConfig>& smote_cfg) {
    const Standardization stats = fit_standardization(raw_rows.x);
    Dataset rows{stats.apply(raw_rows.x), raw_rows.y};
    if (smote_cfg) {
        SmoteConfig cfg = *smote_cfg;
        cfg.seed = derive_seed(seed, "smote");
        rows = smote(rows, cfg).rows;
    }
    TrainedModel model = train(variant, rows, config, derive_seed(seed, "model"), stats);
    model.seed = seed;
    model.metadata["smote"] = smote_cfg ? json{{"k_neighbors", smote_cfg->k_neighbors}} : json(nullptr);
    model.metadata["training_rows"] = raw_rows.size();
    model.metadata["training_rows_after_smote"] = rows.size();
    return model;
}

Eigen::VectorXd predict_proba(const TrainedModel& model, const Eigen::VectorXd& z) {
    if (!z.allFinite()) throw Error(ErrorKind::Contract, "prediction input contains non-finite values");
    if (static_cast<std::size_t>(z.size()) != model.standardization.n_features()) {
        throw Error(ErrorKind::Contract, "prediction input has the wrong number of features");
    }
    const auto k = static_cast<Eigen::Index>(model.class_labels.size());
    Eigen::VectorXd scores = Eigen::VectorXd::Zero(k);
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, MlpParams>) {
                scores = mlp_forward(p, z.transpose()).row(0).transpose();
            } else if constexpr (std::is_same_v<P, LogRegParams>) {
                if (p.weights.rows() == 1) {
                    const double s = logistic(p.weights.row(0).dot(z) + p.bias[0]);
                    scores << 1.0 - s, s;
                } else {
                    for (Eigen::Index c = 0; c < k; ++c) scores[c] = logistic(p.weights.row(c).dot(z) + p.bias[c]);
                    const double total = scores.sum();
                    scores = total > 0.0 ? Eigen::VectorXd(scores / total) : Eigen::VectorXd::Constant(k, 1.0 / k);
                }
            } else if constexpr (std::is_same_v<P, SvmParams>) {
                const double s = logistic(p.platt_scale * svm_decision(p, z));
                scores << 1.0 - s, s;
            } else {
                for (const auto& tree : p.trees) scores[tree.predict(z)] += 1.0;
                scores /= static_cast<double>(p.trees.size());
            }
        },
        model.params);
    return scores;
}

int predict(const TrainedModel& model, const Eigen::VectorXd& standardized) {
    const Eigen::VectorXd s = predict_proba(model, standardized);
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < s.size(); ++c) {
        if (s[c] > s[best]) best = c;
    }
    return model.class_labels[static_cast<std::size_t>(best)];
}

std::vector<int> predict_raw(const TrainedModel& model, const Eigen::MatrixXd& raw_rows) {
    const Eigen::MatrixXd z = model.standardization.apply(raw_rows);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index i = 0; i < z.rows(); ++i) out.push_back(predict(model, z.row(i).transpose()));
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr int kModelFormatVersion = 1;

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::MatrixXd matrix_from(const json& rows, Eigen::Index cols_if_empty = 0) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index cols = n > 0 ? static_cast<Eigen::Index>(rows.at(0).size()) : cols_if_empty;
    Eigen::MatrixXd m(n, cols);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = rows.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != cols) throw Error(ErrorKind::Format, "ragged matrix in model file");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

Eigen::VectorXd vector_from(const json& values) {
    const auto v = values.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json params_json(const ModelParams& params) {
    return std::visit(
        [](const auto& p) -> json {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, MlpParams>) {
                json w = json::array();
                json b = json::array();
                for (std::size_t l = 0; l < p.weights.size(); ++l) {
                    w.push_back(matrix_json(p.weights[l]));
                    b.push_back(vector_json(p.biases[l]));
                }
                return {{"layer_sizes", p.layer_sizes()}, {"weights", w}, {"biases", b}, {"activation", "sigmoid"}};
            } else if constexpr (std::is_same_v<P, LogRegParams>) {
                return {{"weights", matrix_json(p.weights)}, {"bias", vector_json(p.bias)}};
            } else if constexpr (std::is_same_v<P, SvmParams>) {
                return {{"support_vectors", matrix_json(p.support_vectors)},
                        {"alpha", vector_json(p.alpha)},
                        {"signs", vector_json(p.signs)},
                        {"bias", p.bias},
                        {"gamma", p.gamma},
                        {"c", p.c},
                        {"platt_scale", p.platt_scale}};
            } else {
                json trees = json::array();
                for (const auto& t : p.trees) {
                    json nodes = json::array();
                    for (const auto& n : t.nodes) {
                        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.class_counts});
                    }
                    trees.push_back(std::move(nodes));
                }
                return {{"n_classes", p.n_classes}, {"trees", trees}};
            }
        },
        params);
}

ModelParams params_from(ModelVariant variant, const json& doc, Eigen::Index n_features) {
    switch (variant) {
        case ModelVariant::Mlp: {
            MlpParams p;
            const auto& w = doc.at("weights");
            const auto& b = doc.at("biases");
            if (w.size() != b.size() || w.empty()) throw Error(ErrorKind::Format, "MLP layer arrays disagree");
            for (std::size_t l = 0; l < w.size(); ++l) {
                p.weights.push_back(matrix_from(w[l]));
                p.biases.push_back(vector_from(b[l]));
                if (p.weights.back().rows() != p.biases.back().size()) {
                    throw Error(ErrorKind::Format, "MLP weight and bias shapes disagree");
                }
                if (l > 0 && p.weights[l].cols() != p.weights[l - 1].rows()) {
                    throw Error(ErrorKind::Format, "MLP layer shapes are inconsistent");
                }
            }
            return p;
        }
        case ModelVariant::LogReg: {
            LogRegParams p;
            p.weights = matrix_from(doc.at("weights"), n_features);
            p.bias = vector_from(doc.at("bias"));
            return p;
        }
        case ModelVariant::SvmRbf: {
            SvmParams p;
            p.support_vectors = matrix_from(doc.at("support_vectors"), n_features);
            p.alpha = vector_from(doc.at("alpha"));
            p.signs = vector_from(doc.at("signs"));
            p.bias = doc.at("bias").get<double>();
            p.gamma = doc.at("gamma").get<double>();
            p.c = doc.at("c").get<double>();
            p.platt_scale = doc.at("platt_scale").get<double>();
            return p;
        }
        case ModelVariant::RandomForest: {
            ForestParams p;
            p.n_classes = doc.at("n_classes").get<int>();
            for (const auto& nodes : doc.at("trees")) {
                DecisionTree t;
                for (const auto& n : nodes) {
                    TreeNode node;
                    node.feature = n.at(0).get<int>();
                    node.threshold = n.at(1).get<double>();
                    node.left = n.at(2).get<int>();
                    node.right = n.at(3).get<int>();
                    node.class_counts = n.at(4).get<std::vector<double>>();
                    t.nodes.push_back(std::move(node));
                }
                p.trees.push_back(std::move(t));
            }
            return p;
        }
    }
    throw Error(ErrorKind::Format, "unknown model variant");
}

json body_json(const TrainedModel& model) {
    return {
        {"format", "wildfire-risk-model"},
        {"version", kModelFormatVersion},
        {"variant", variant_name(model.variant)},
        {"class_labels", model.class_labels},
        {"standardization",
         {{"mean", model.standardization.mean},
          {"stddev", model.standardization.stddev},
          {"epsilon", model.standardization.epsilon}}},
        {"params", params_json(model.params)},
        {"config", to_json(model.config, model.variant)},
        {"seed", model.seed},
        {"metadata", model.metadata},
    };
}

ModelConfig config_from_echo(ModelVariant variant, const json& echo) {
    json wrapped;
    switch (variant) {
        case ModelVariant::Mlp: wrapped["mlp"] = echo; break;
        case ModelVariant::LogReg: wrapped["logreg"] = echo; break;
        case ModelVariant::SvmRbf: wrapped["svm"] = echo; break;
        case ModelVariant::RandomForest: wrapped["rf"] = echo; break;
    }
    return model_config_from_json(wrapped);
}

}  // namespace

std::string model_hash(const TrainedModel& model) { return sha256_hex(body_json(model).dump()); }

json model_to_json(const TrainedModel& model) {
    json doc = body_json(model);
    doc["hash"] = sha256_hex(doc.dump());
    return doc;
}

TrainedModel model_from_json(const json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "wildfire-risk-model") {
            throw Error(ErrorKind::Format, "not a wildfire risk model document");
        }
        if (doc.at("version").get<int>() != kModelFormatVersion) {
            throw Error(ErrorKind::Format, "unsupported model format version");
        }
        const auto variant = parse_variant(doc.at("variant").get<std::string>());
        if (!variant) throw Error(ErrorKind::Format, "unknown model variant");
        TrainedModel m;
        m.variant = *variant;
        m.class_labels = doc.at("class_labels").get<std::vector<int>>();
        if (m.class_labels.empty()) throw Error(ErrorKind::Format, "model has no class labels");
        const auto& s = doc.at("standardization");
        m.standardization.mean = s.at("mean").get<std::vector<double>>();
        m.standardization.stddev = s.at("stddev").get<std::vector<double>>();
        m.standardization.epsilon = s.at("epsilon").get<double>();
        if (m.standardization.mean.size() != m.standardization.stddev.size()) {
            throw Error(ErrorKind::Format, "standardization arrays disagree");
        }
        m.params = params_from(m.variant, doc.at("params"), static_cast<Eigen::Index>(m.standardization.mean.size()));
        m.config = config_from_echo(m.variant, doc.at("config"));
        m.seed = doc.at("seed").get<std::uint64_t>();
        m.metadata = doc.value("metadata", json::object());
        if (doc.contains("hash") && doc.at("hash").get<std::string>() != model_hash(m)) {
            throw Error(ErrorKind::Format, "model content hash mismatch");
        }
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Format, std::string("model document: ") + e.what());
    }
}

void save_model(const TrainedModel& model, const std::string& path) {
    write_file(path, model_to_json(model).dump(1) + "\n");
}

TrainedModel load_model(const std::string& path) {
    try {
        return model_from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Format, "model file '" + path + "': " + e.what());
    }
}

}  // namespace wildfire
