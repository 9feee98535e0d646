#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "wildfire/dataset.hpp"
#include "wildfire/models.hpp"
#include "wildfire/smote.hpp"

namespace wildfire {

// k disjoint folds covering 0..n-1 with sizes differing by at most one, each
// sorted ascending. With `labels`, rows are dealt class by class so every
// fold keeps the class proportions. Throws Contract when n < k.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed,
                                                  std::span<const int> labels = {});

struct TrainTestSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// |test| = round-half-up(test_fraction * n). Throws Contract when n < 5.
TrainTestSplit train_test_split(std::size_t n, double test_fraction, std::uint64_t seed);

// counts[t][p]: rows whose truth is class_order[t] and prediction class_order[p].
struct ConfusionMatrix {
    std::vector<int> class_order;
    std::vector<std::vector<std::size_t>> counts;

    std::size_t total() const;
    std::size_t at(int truth, int predicted) const;
};

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> truths,
                          std::span<const int> class_order);

struct ClassMetrics {
    int label = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricReport {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::vector<ClassMetrics> per_class;
};

// Zero denominators give 0.
MetricReport metrics(const ConfusionMatrix& cm);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // population std over folds
};

struct FoldOutcome {
    std::size_t fold = 0;
    std::vector<std::size_t> test_rows;
    std::optional<MetricReport> report;
    std::optional<ConfusionMatrix> confusion;
    std::string error;  // set when the fold could not be evaluated
    // Original-row indices of the parents of every SMOTE row in this fold.
    std::vector<std::pair<std::size_t, std::size_t>> smote_parents;
};

struct CrossValidationReport {
    ModelVariant variant = ModelVariant::Mlp;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    bool smote_on_train = false;
    std::vector<FoldOutcome> folds;
    MeanStd accuracy;
    MeanStd macro_precision;
    MeanStd macro_recall;
    MeanStd macro_f1;
};

struct CrossValidationOptions {
    std::size_t k = 5;
    std::uint64_t seed = 0;
    bool smote_on_train = true;
    SmoteConfig smote;
    bool stratified = true;
    ModelConfig model;
};

// Per fold: standardization fit on the training part, SMOTE on the training
// part only, train, score the held-out part. Fold seeds derive from `seed`.
CrossValidationReport cross_validate(ModelVariant variant, const Dataset& raw_rows,
                                     const CrossValidationOptions& opts);

nlohmann::json to_json(const MetricReport& r);
nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const CrossValidationReport& r);

// Aligned text table: one row per metric, one column per model,
// "mean ± std" cells.
std::string format_report_table(std::span<const CrossValidationReport> reports);

}  // namespace wildfire
