#include "wildfire/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wildfire/error.hpp"
#include "wildfire/seed.hpp"
#include "wildfire/text.hpp"

namespace wildfire {

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed,
                                                  std::span<const int> labels) {
    if (k < 2) throw Error(ErrorKind::Contract, "k-fold needs k >= 2");
    if (n < k) throw Error(ErrorKind::Contract, "k-fold needs at least k rows");
    if (!labels.empty() && labels.size() != n) throw Error(ErrorKind::Contract, "one label per row required");
    Rng rng(seed);
    std::vector<std::size_t> order;
    order.reserve(n);
    if (labels.empty()) {
        order.resize(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle(order.begin(), order.end(), rng);
    } else {
        for (const int label : class_labels(labels)) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < n; ++i) {
                if (labels[i] == label) members.push_back(i);
            }
            shuffle(members.begin(), members.end(), rng);
            order.insert(order.end(), members.begin(), members.end());
        }
    }
    // Dealing consecutive positions round-robin keeps sizes within one and
    // spreads each class evenly.
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t pos = 0; pos < n; ++pos) folds[pos % k].push_back(order[pos]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

TrainTestSplit train_test_split(std::size_t n, double test_fraction, std::uint64_t seed) {
    if (n < 5) throw Error(ErrorKind::Contract, "train/test split needs at least 5 rows");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error(ErrorKind::Contract, "test fraction must lie in (0, 1)");
    }
    const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n) + 0.5));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(order.begin(), order.end(), rng);
    TrainTestSplit s;
    s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(s.test.begin(), s.test.end());
    std::sort(s.train.begin(), s.train.end());
    return s;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
    return t;
}

std::size_t ConfusionMatrix::at(int truth, int predicted) const {
    const auto pos = [&](int label) {
        const auto it = std::find(class_order.begin(), class_order.end(), label);
        if (it == class_order.end()) throw Error(ErrorKind::Contract, "label not in the confusion matrix");
        return static_cast<std::size_t>(it - class_order.begin());
    };
    return counts[pos(truth)][pos(predicted)];
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> truths,
                          std::span<const int> class_order) {
    if (predictions.size() != truths.size()) {
        throw Error(ErrorKind::Contract, "predictions and truths differ in length");
    }
    ConfusionMatrix cm;
    cm.class_order.assign(class_order.begin(), class_order.end());
    cm.counts.assign(class_order.size(), std::vector<std::size_t>(class_order.size(), 0));
    const auto pos = [&](int label) {
        const auto it = std::find(class_order.begin(), class_order.end(), label);
        if (it == class_order.end()) throw Error(ErrorKind::Contract, "unknown label " + std::to_string(label));
        return static_cast<std::size_t>(it - class_order.begin());
    };
    for (std::size_t i = 0; i < truths.size(); ++i) ++cm.counts[pos(truths[i])][pos(predictions[i])];
    return cm;
}

MetricReport metrics(const ConfusionMatrix& cm) {
    const std::size_t k = cm.class_order.size();
    const std::size_t total = cm.total();
    if (total == 0) throw Error(ErrorKind::Contract, "metrics of an empty confusion matrix");
    MetricReport r;
    std::size_t trace = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const double tp = static_cast<double>(cm.counts[c][c]);
        trace += cm.counts[c][c];
        double predicted = 0.0;
        double actual = 0.0;
        for (std::size_t o = 0; o < k; ++o) {
            predicted += static_cast<double>(cm.counts[o][c]);
            actual += static_cast<double>(cm.counts[c][o]);
        }
        ClassMetrics m;
        m.label = cm.class_order[c];
        m.precision = predicted > 0.0 ? tp / predicted : 0.0;
        m.recall = actual > 0.0 ? tp / actual : 0.0;
        m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        r.macro_precision += m.precision;
        r.macro_recall += m.recall;
        r.macro_f1 += m.f1;
        r.per_class.push_back(m);
    }
    r.accuracy = static_cast<double>(trace) / static_cast<double>(total);
    r.macro_precision /= static_cast<double>(k);
    r.macro_recall /= static_cast<double>(k);
    r.macro_f1 /= static_cast<double>(k);
    return r;
}

namespace {

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd out;
    if (v.empty()) return out;
    const double n = static_cast<double>(v.size());
    out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (const double x : v) ss += (x - out.mean) * (x - out.mean);
    out.stddev = std::sqrt(ss / n);
    return out;
}

}  // namespace

CrossValidationReport cross_validate(ModelVariant variant, const Dataset& raw_rows,
                                     const CrossValidationOptions& opts) {
    CrossValidationReport report;
    report.variant = variant;
    report.k = opts.k;
    report.seed = opts.seed;
    report.smote_on_train = opts.smote_on_train;

    const auto labels = class_labels(raw_rows.y);
    const auto folds = kfold_split(raw_rows.size(), opts.k, derive_seed(opts.seed, "split"),
                                   opts.stratified ? std::span<const int>(raw_rows.y) : std::span<const int>{});

    std::vector<double> acc;
    std::vector<double> prec;
    std::vector<double> rec;
    std::vector<double> f1;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        FoldOutcome out;
        out.fold = f;
        out.test_rows = folds[f];
        std::vector<std::size_t> train_rows;
        for (std::size_t g = 0; g < folds.size(); ++g) {
            if (g != f) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
        }
        std::sort(train_rows.begin(), train_rows.end());
        try {
            const Dataset train_raw = raw_rows.subset(train_rows);
            const Dataset test_raw = raw_rows.subset(folds[f]);
            if (class_labels(train_raw.y).size() < 2) {
                throw Error(ErrorKind::Contract, "training part of fold has a single class");
            }
            const Standardization stats = fit_standardization(train_raw.x);
            Dataset train_z{stats.apply(train_raw.x), train_raw.y};
            if (opts.smote_on_train) {
                SmoteConfig cfg = opts.smote;
                cfg.seed = derive_seed(opts.seed, "smote", f);
                SmoteResult aug = smote(train_z, cfg);
                for (const auto& [a, b] : aug.parents) out.smote_parents.emplace_back(train_rows[a], train_rows[b]);
                train_z = std::move(aug.rows);
            }
            const TrainedModel model = train(variant, train_z, opts.model, derive_seed(opts.seed, "model", f), stats);
            const std::vector<int> predicted = predict_raw(model, test_raw.x);
            out.confusion = confusion(predicted, test_raw.y, labels);
            out.report = metrics(*out.confusion);
            acc.push_back(out.report->accuracy);
            prec.push_back(out.report->macro_precision);
            rec.push_back(out.report->macro_recall);
            f1.push_back(out.report->macro_f1);
        } catch (const Error& e) {
            out.error = e.what();
        }
        report.folds.push_back(std::move(out));
    }
    report.accuracy = mean_std(acc);
    report.macro_precision = mean_std(prec);
    report.macro_recall = mean_std(rec);
    report.macro_f1 = mean_std(f1);
    return report;
}

nlohmann::json to_json(const MetricReport& r) {
    nlohmann::json per_class = nlohmann::json::array();
    for (const auto& c : r.per_class) {
        per_class.push_back({{"label", c.label}, {"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}});
    }
    return {{"accuracy", r.accuracy},
            {"macro_precision", r.macro_precision},
            {"macro_recall", r.macro_recall},
            {"macro_f1", r.macro_f1},
            {"per_class", per_class}};
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
    return {{"class_order", cm.class_order}, {"counts", cm.counts}, {"layout", "counts[truth][predicted]"}};
}

nlohmann::json to_json(const CrossValidationReport& r) {
    const auto ms = [](const MeanStd& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.stddev}}; };
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : r.folds) {
        nlohmann::json entry = {{"fold", f.fold}, {"test_rows", f.test_rows.size()}};
        if (f.report) entry["metrics"] = to_json(*f.report);
        if (f.confusion) entry["confusion"] = to_json(*f.confusion);
        if (!f.error.empty()) entry["error"] = f.error;
        entry["smote_rows"] = f.smote_parents.size();
        folds.push_back(std::move(entry));
    }
    return {{"model", variant_name(r.variant)},
            {"k", r.k},
            {"seed", r.seed},
            {"smote_on_train", r.smote_on_train},
            {"accuracy", ms(r.accuracy)},
            {"macro_precision", ms(r.macro_precision)},
            {"macro_recall", ms(r.macro_recall)},
            {"macro_f1", ms(r.macro_f1)},
            {"folds", folds}};
}

std::string format_report_table(std::span<const CrossValidationReport> reports) {
    // "±" is two bytes but one column wide.
    const auto width = [](const std::string& s) { return s.size() - (s.find("±") != std::string::npos ? 1 : 0); };
    const auto pad = [&](const std::string& s, std::size_t w) { return s + std::string(w - std::min(w, width(s)), ' '); };

    std::vector<std::vector<std::string>> rows = {{"Metric"}, {"Accuracy"}, {"Macro Precision"}, {"Macro Recall"},
                                                  {"Macro F1 Score"}};
    for (const auto& r : reports) {
        const bool scored =
            std::any_of(r.folds.begin(), r.folds.end(), [](const FoldOutcome& f) { return f.report.has_value(); });
        const auto cell = [&](const MeanStd& m) {
            if (!scored) return std::string("n/a");
            return format_fixed(m.mean, 3) + " ± " + format_fixed(m.stddev, 3);
        };
        std::string name(variant_name(r.variant));
        std::transform(name.begin(), name.end(), name.begin(), ::toupper);
        rows[0].push_back(name);
        rows[1].push_back(cell(r.accuracy));
        rows[2].push_back(cell(r.macro_precision));
        rows[3].push_back(cell(r.macro_recall));
        rows[4].push_back(cell(r.macro_f1));
    }
    std::vector<std::size_t> widths(rows[0].size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], width(row[c]));
    }
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "  " : "") + pad(row[c], widths[c]);
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += '\n';
    }
    return out;
}

}  // namespace wildfire
