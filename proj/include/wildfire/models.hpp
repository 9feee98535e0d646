#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "wildfire/dataset.hpp"
#include "wildfire/smote.hpp"

namespace wildfire {

enum class ModelVariant { Mlp, LogReg, SvmRbf, RandomForest };

// "mlp", "logreg", "svm", "rf".
std::string_view variant_name(ModelVariant v);
std::optional<ModelVariant> parse_variant(std::string_view name);

// ---------------------------------------------------------------------------
// Multilayer perceptron: sigmoid hidden layers, softmax output, mean
// cross-entropy, plain mini-batch SGD.

struct MlpConfig {
    int hidden = 36;
    double learning_rate = 0.01;
    int epochs = 200;
    int batch_size = 32;
};

struct MlpParams {
    // weights[l] maps layer l (cols) to layer l+1 (rows).
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    std::vector<int> layer_sizes() const;
};

struct MlpGradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

// Xavier-uniform weights, zero biases.
MlpParams mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed);

// Row-wise class probabilities.
Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x);

// Mean cross-entropy; `y` holds class indices.
double mlp_loss(const MlpParams& params, const Eigen::MatrixXd& x, const std::vector<int>& y);

// Exact gradient of mlp_loss by backpropagation.
MlpGradients mlp_backprop_gradients(const MlpParams& params, const Eigen::MatrixXd& x, const std::vector<int>& y);

// Per-epoch training loss is appended to `loss_history` when given.
MlpParams train_mlp(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_classes, const MlpConfig& cfg,
                    std::uint64_t seed, std::vector<double>* loss_history = nullptr);

// ---------------------------------------------------------------------------
// L2-regularized logistic regression by full-batch gradient descent with a
// backtracking (Armijo) step. One-vs-rest for more than two classes.

struct LogRegConfig {
    double l2 = 1.0;
    int max_iterations = 1000;
    double tolerance = 1e-6;
};

struct LogRegParams {
    Eigen::MatrixXd weights;  // one row per binary sub-model
    Eigen::VectorXd bias;
    // Objective value at every iterate, per sub-model.
    std::vector<std::vector<double>> loss_history;
};

// (1/n) sum log-loss + (l2 / 2n) |w|^2, bias unpenalized. `y` is 0/1.
double logreg_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& x, const std::vector<int>& y,
                        double l2);

LogRegParams train_logreg(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_classes,
                          const LogRegConfig& cfg);

// ---------------------------------------------------------------------------
// RBF-kernel SVM trained by simplified SMO on the dual. Binary only.

struct SvmConfig {
    double c = 1.0;
    // 0 selects 1 / (n_features * Var(x)) from the training data.
    double gamma = 0.0;
    double tolerance = 1e-3;
    // Stop after this many consecutive passes without an alpha change...
    int max_passes = 200;
    // ...or after this many passes in total.
    int max_total_passes = 2000;
};

struct SvmParams {
    Eigen::MatrixXd support_vectors;
    Eigen::VectorXd alpha;  // 0 < alpha <= c
    Eigen::VectorXd signs;  // +1 / -1
    double bias = 0.0;
    double gamma = 1.0;
    double c = 1.0;
    // Probability of the positive class is sigmoid(platt_scale * decision).
    double platt_scale = 1.0;
};

double rbf_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double gamma);

// sum alpha_i y_i K(x_i, x) + b
double svm_decision(const SvmParams& params, const Eigen::VectorXd& x);

// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
double svm_dual_objective(const Eigen::VectorXd& alpha, const Eigen::VectorXd& signs, const Eigen::MatrixXd& kernel);

// `signs` are +1/-1. The full alpha vector over the training rows is written
// to `all_alpha` when given.
SvmParams train_svm(const Eigen::MatrixXd& x, const Eigen::VectorXd& signs, const SvmConfig& cfg,
                    std::uint64_t seed, Eigen::VectorXd* all_alpha = nullptr);

// ---------------------------------------------------------------------------
// Random forest of gini decision trees.

struct ForestConfig {
    int n_estimators = 5;
    // 0 selects floor(sqrt(n_features)).
    int max_features = 0;
    bool bootstrap = true;
    int min_samples_split = 2;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    std::vector<double> class_counts;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    const TreeNode& leaf_for(const Eigen::VectorXd& x) const;
    // Majority class index at the leaf; ties go to the lower index.
    int predict(const Eigen::VectorXd& x) const;
};

struct ForestParams {
    std::vector<DecisionTree> trees;
    int n_classes = 0;
};

// 1 - sum p_i^2. Throws Contract when every count is zero.
double gini_impurity(const std::vector<double>& class_counts);

DecisionTree grow_tree(const Eigen::MatrixXd& x, const std::vector<int>& y, std::span<const std::size_t> rows,
                       int n_classes, int max_features, int min_samples_split, std::uint64_t seed);

ForestParams train_forest(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_classes,
                          const ForestConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------

struct ModelConfig {
    MlpConfig mlp;
    LogRegConfig logreg;
    SvmConfig svm;
    ForestConfig forest;
};

nlohmann::json to_json(const ModelConfig& cfg, ModelVariant variant);
ModelConfig model_config_from_json(const nlohmann::json& doc, ModelConfig base = {});

using ModelParams = std::variant<MlpParams, LogRegParams, SvmParams, ForestParams>;

struct TrainedModel {
    ModelVariant variant = ModelVariant::Mlp;
    ModelParams params;
    Standardization standardization;
    std::vector<int> class_labels;
    ModelConfig config;
    std::uint64_t seed = 0;
    // Free-form provenance: task, fire threshold, run echo.
    nlohmann::json metadata = nlohmann::json::object();
};

// Trains on already-standardized rows; `standardization` is stored with the
// model. Throws Contract for fewer than two classes, Divergence on a
// non-finite loss.
TrainedModel train(ModelVariant variant, const Dataset& standardized_rows, const ModelConfig& config,
                   std::uint64_t seed, const Standardization& standardization);

// Fits standardization on `raw_rows`, optionally oversamples with SMOTE, then
// trains. Seeds for SMOTE and the model derive from `seed`.
TrainedModel fit_model(ModelVariant variant, const Dataset& raw_rows, const ModelConfig& config, std::uint64_t seed,
                       const std::optional<SmoteConfig>& smote_cfg);

// Scores per class (ordered as class_labels) for a standardized row; they
// sum to 1. Throws Contract on a non-finite feature.
Eigen::VectorXd predict_proba(const TrainedModel& model, const Eigen::VectorXd& standardized);

// argmax of predict_proba (lower index on ties), returned as a class label.
int predict(const TrainedModel& model, const Eigen::VectorXd& standardized);

// Raw-unit rows, standardized with the model's frozen statistics.
std::vector<int> predict_raw(const TrainedModel& model, const Eigen::MatrixXd& raw_rows);

// Versioned JSON document with a SHA-256 content hash over everything else.
nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& doc);
std::string model_hash(const TrainedModel& model);

void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace wildfire
