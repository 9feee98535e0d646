#include <doctest.h>

#include <cmath>
#include <random>

#include "wildfire/error.hpp"
#include "wildfire/models.hpp"
#include "helpers.hpp"

using namespace wildfire;

namespace {

// Two well-separated Gaussian blobs in d dimensions.
Dataset blobs(std::size_t n, int d, double gap, std::uint64_t seed, int n_classes = 2) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(n), d);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % static_cast<std::size_t>(n_classes));
        out.y.push_back(label);
        for (int j = 0; j < d; ++j) {
            const double center = (j == label % d) ? gap * (label + 1) : 0.0;
            out.x(static_cast<Eigen::Index>(i), j) = center + g(rng);
        }
    }
    return out;
}

double accuracy(const TrainedModel& m, const Dataset& d) {
    const auto p = predict_raw(m, d.x);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < p.size(); ++i) ok += p[i] == d.y[i] ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(p.size());
}

TrainedModel hand_built(ModelVariant v, ModelParams params, std::vector<int> labels, std::size_t d = 6) {
    TrainedModel m;
    m.variant = v;
    m.params = std::move(params);
    m.standardization = Standardization::identity(d);
    m.class_labels = std::move(labels);
    return m;
}

TreeNode leaf(std::vector<double> counts) {
    TreeNode n;
    n.class_counts = std::move(counts);
    return n;
}

double rel_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

}  // namespace

TEST_SUITE("models") {
    TEST_CASE("variant names") {
        for (const auto v : {ModelVariant::Mlp, ModelVariant::LogReg, ModelVariant::SvmRbf, ModelVariant::RandomForest}) {
            CHECK(parse_variant(variant_name(v)) == v);
        }
        CHECK_FALSE(parse_variant("xgboost").has_value());
    }

    TEST_CASE("MLP reaches perfect training accuracy on separable data") {
        const Dataset d = blobs(60, 6, 6.0, 1);
        const TrainedModel m = fit_model(ModelVariant::Mlp, d, {}, 5, std::nullopt);
        CHECK(accuracy(m, d) == 1.0);
        const auto& p = std::get<MlpParams>(m.params);
        CHECK(p.layer_sizes() == std::vector<int>{6, 36, 2});
    }

    TEST_CASE("MLP gradients match central differences") {
        std::mt19937_64 rng(17);
        std::normal_distribution<double> g(0.0, 1.0);
        Eigen::MatrixXd x(5, 6);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
        const std::vector<int> y{0, 2, 1, 2, 0};
        for (int point = 0; point < 20; ++point) {
            MlpParams p = mlp_init({6, 36, 3}, static_cast<std::uint64_t>(point));
            for (auto& b : p.biases) {
                for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = 0.3 * g(rng);
            }
            const MlpGradients grad = mlp_backprop_gradients(p, x, y);
            double worst = 0.0;
            constexpr double eps = 1e-5;
            for (std::size_t l = 0; l < p.weights.size(); ++l) {
                for (Eigen::Index k = 0; k < p.weights[l].size(); ++k) {
                    const double keep = p.weights[l].data()[k];
                    p.weights[l].data()[k] = keep + eps;
                    const double up = mlp_loss(p, x, y);
                    p.weights[l].data()[k] = keep - eps;
                    const double down = mlp_loss(p, x, y);
                    p.weights[l].data()[k] = keep;
                    worst = std::max(worst, rel_error(grad.weights[l].data()[k], (up - down) / (2 * eps)));
                }
                for (Eigen::Index k = 0; k < p.biases[l].size(); ++k) {
                    const double keep = p.biases[l][k];
                    p.biases[l][k] = keep + eps;
                    const double up = mlp_loss(p, x, y);
                    p.biases[l][k] = keep - eps;
                    const double down = mlp_loss(p, x, y);
                    p.biases[l][k] = keep;
                    worst = std::max(worst, rel_error(grad.biases[l][k], (up - down) / (2 * eps)));
                }
            }
            CHECK(worst < 1e-4);
        }
    }

    TEST_CASE("MLP bias gradient with zero weights is mean(softmax - onehot)") {
        MlpParams p = mlp_init({2, 4, 3}, 1);
        for (auto& w : p.weights) w.setZero();
        Eigen::MatrixXd x(3, 2);
        x << 1, -1, -1, 1, 0, 0;
        const std::vector<int> y{0, 1, 2};
        const MlpGradients g = mlp_backprop_gradients(p, x, y);
        // Uniform softmax: each class gets (1/3 - share of that class) = 0.
        CHECK(g.biases.back().cwiseAbs().maxCoeff() < 1e-15);
        const std::vector<int> y2{0, 0, 1};
        const MlpGradients g2 = mlp_backprop_gradients(p, x, y2);
        CHECK(g2.biases.back()[0] == doctest::Approx(1.0 / 3 - 2.0 / 3));
        CHECK(g2.biases.back()[1] == doctest::Approx(1.0 / 3 - 1.0 / 3));
        CHECK(g2.biases.back()[2] == doctest::Approx(1.0 / 3));
    }

    TEST_CASE("MLP gradient is a mean over rows") {
        const MlpParams p = mlp_init({3, 5, 2}, 9);
        Eigen::MatrixXd one(1, 3);
        one << 0.2, -1.0, 0.5;
        Eigen::MatrixXd three(3, 3);
        three << one, one, one;
        const MlpGradients a = mlp_backprop_gradients(p, one, {1});
        const MlpGradients b = mlp_backprop_gradients(p, three, {1, 1, 1});
        for (std::size_t l = 0; l < a.weights.size(); ++l) {
            CHECK((a.weights[l] - b.weights[l]).cwiseAbs().maxCoeff() < 1e-15);
            CHECK((a.biases[l] - b.biases[l]).cwiseAbs().maxCoeff() < 1e-15);
        }
    }

    TEST_CASE("MLP with zero weights scores classes uniformly") {
        MlpParams p = mlp_init({6, 36, 3}, 1);
        for (auto& w : p.weights) w.setZero();
        for (auto& b : p.biases) b.setZero();
        const TrainedModel m = hand_built(ModelVariant::Mlp, p, {0, 1, 2});
        const Eigen::VectorXd s = predict_proba(m, Eigen::VectorXd::Constant(6, 0.7));
        for (Eigen::Index i = 0; i < 3; ++i) CHECK(s[i] == doctest::Approx(1.0 / 3));
        CHECK(predict(m, Eigen::VectorXd::Zero(6)) == 0);
    }

    TEST_CASE("MLP divergence names the epoch") {
        const Dataset d = blobs(40, 6, 2.0, 3);
        ModelConfig cfg;
        cfg.mlp.learning_rate = 1e306;
        try {
            fit_model(ModelVariant::Mlp, d, cfg, 1, std::nullopt);
            FAIL("expected divergence");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Divergence);
            CHECK(std::string(e.what()).find("epoch") != std::string::npos);
        }
    }

    TEST_CASE("logistic regression loss is monotone non-increasing") {
        for (const int classes : {2, 3}) {
            const Dataset d = blobs(120, 6, 1.5, 4, classes);
            const LogRegParams p = train_logreg(d.x, d.y, classes, {});
            REQUIRE(!p.loss_history.empty());
            for (const auto& h : p.loss_history) {
                REQUIRE(h.size() > 1);
                for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1] + 1e-12);
            }
        }
    }

    TEST_CASE("logistic regression with a huge penalty shrinks the weights") {
        const Dataset d = blobs(100, 6, 3.0, 6);
        LogRegConfig cfg;
        cfg.l2 = 1e6;
        const LogRegParams p = train_logreg(d.x, d.y, 2, cfg);
        CHECK(p.weights.norm() < 1e-3);
    }

    TEST_CASE("logistic regression with zero weights scores 0.5") {
        LogRegParams p;
        p.weights = Eigen::MatrixXd::Zero(1, 6);
        p.bias = Eigen::VectorXd::Zero(1);
        const TrainedModel m = hand_built(ModelVariant::LogReg, p, {0, 1});
        const Eigen::VectorXd s = predict_proba(m, Eigen::VectorXd::Constant(6, 2.0));
        CHECK(s[0] == 0.5);
        CHECK(s[1] == 0.5);
    }

    TEST_CASE("logistic regression objective") {
        Eigen::MatrixXd x(2, 1);
        x << 1.0, -1.0;
        const Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 2.0);
        // mean log-loss of sigmoid(2) for y=1 and sigmoid(-2) for y=0, plus (1/4)*4.
        const double expected = std::log1p(std::exp(-2.0)) + 1.0;
        CHECK(logreg_objective(w, 0.0, x, {1, 0}, 1.0) == doctest::Approx(expected));
    }

    TEST_CASE("gini impurity") {
        CHECK(gini_impurity({10, 0}) == 0.0);
        CHECK(gini_impurity({5, 5}) == 0.5);
        CHECK(gini_impurity({7, 2, 1}) == doctest::Approx(0.46));
        CHECK_THROWS_AS(gini_impurity({0, 0}), Error);
    }

    TEST_CASE("a single full-feature tree fits unique rows exactly") {
        const Dataset d = blobs(150, 6, 0.5, 8, 3);
        ModelConfig cfg;
        cfg.forest.n_estimators = 1;
        cfg.forest.max_features = 6;
        cfg.forest.bootstrap = false;
        const TrainedModel m = fit_model(ModelVariant::RandomForest, d, cfg, 2, std::nullopt);
        CHECK(accuracy(m, d) == 1.0);
        for (const auto& node : std::get<ForestParams>(m.params).trees[0].nodes) {
            double total = 0.0;
            for (const double c : node.class_counts) total += c;
            CHECK(total > 0.0);
        }
    }

    TEST_CASE("forest scores are vote shares") {
        ForestParams f;
        f.n_classes = 2;
        for (int t = 0; t < 5; ++t) {
            DecisionTree tree;
            tree.nodes.push_back(leaf(t < 3 ? std::vector<double>{4, 1} : std::vector<double>{0, 2}));
            f.trees.push_back(tree);
        }
        const TrainedModel m = hand_built(ModelVariant::RandomForest, f, {0, 1});
        const Eigen::VectorXd s = predict_proba(m, Eigen::VectorXd::Zero(6));
        CHECK(s[0] == doctest::Approx(0.6));
        CHECK(s[1] == doctest::Approx(0.4));
        CHECK(predict(m, Eigen::VectorXd::Zero(6)) == 0);
    }

    TEST_CASE("default forest uses floor(sqrt(d)) features and five trees") {
        const Dataset d = blobs(80, 6, 2.0, 10);
        const TrainedModel m = fit_model(ModelVariant::RandomForest, d, {}, 3, std::nullopt);
        CHECK(std::get<ForestParams>(m.params).trees.size() == 5);
        CHECK(accuracy(m, d) > 0.9);
    }

    TEST_CASE("SVM decision at a lone support vector") {
        SvmParams p;
        p.support_vectors = Eigen::MatrixXd::Constant(1, 6, 0.3);
        p.alpha = Eigen::VectorXd::Constant(1, 0.7);
        p.signs = Eigen::VectorXd::Constant(1, -1.0);
        p.bias = 0.25;
        p.gamma = 3.0;
        CHECK(svm_decision(p, p.support_vectors.row(0).transpose()) == doctest::Approx(-0.7 + 0.25));
    }

    TEST_CASE("SVM separates XOR") {
        Eigen::MatrixXd x(4, 2);
        x << 0, 0, 1, 1, 0, 1, 1, 0;
        Eigen::VectorXd s(4);
        s << -1, -1, 1, 1;
        SvmConfig cfg;
        cfg.gamma = 1.0;
        const SvmParams p = train_svm(x, s, cfg, 7);
        for (Eigen::Index i = 0; i < 4; ++i) CHECK(svm_decision(p, x.row(i).transpose()) * s[i] > 0.0);
    }

    TEST_CASE("SVM dual matches a brute-force search on 4-point problems") {
        std::mt19937_64 rng(21);
        std::normal_distribution<double> g(0.0, 1.0);
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::MatrixXd x(4, 2);
            for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
            Eigen::VectorXd s(4);
            s << 1, 1, -1, -1;
            SvmConfig cfg;
            cfg.gamma = 0.5;
            Eigen::VectorXd alpha;
            train_svm(x, s, cfg, static_cast<std::uint64_t>(trial), &alpha);
            Eigen::MatrixXd k(4, 4);
            for (int i = 0; i < 4; ++i) {
                for (int j = 0; j < 4; ++j) k(i, j) = rbf_kernel(x.row(i).transpose(), x.row(j).transpose(), 0.5);
            }
            CHECK(std::abs(alpha.dot(s)) < 1e-6);
            for (Eigen::Index i = 0; i < 4; ++i) {
                CHECK(alpha[i] >= 0.0);
                CHECK(alpha[i] <= cfg.c);
            }
            // alpha_3 = a1 + a2 - a2' keeps the equality constraint.
            double best = -1e300;
            constexpr int steps = 200;
            Eigen::VectorXd a(4);
            for (int i = 0; i <= steps; ++i) {
                for (int j = 0; j <= steps; ++j) {
                    for (int l = 0; l <= steps; ++l) {
                        a << double(i) / steps, double(j) / steps, double(l) / steps, 0.0;
                        a[3] = a[0] + a[1] - a[2];
                        if (a[3] < 0.0 || a[3] > 1.0) continue;
                        best = std::max(best, svm_dual_objective(a, s, k));
                    }
                }
            }
            CHECK(std::abs(svm_dual_objective(alpha, s, k) - best) < 1e-3);
        }
    }

    TEST_CASE("SVM is binary only") {
        const Dataset d = blobs(60, 6, 3.0, 11, 3);
        CHECK_THROWS_AS(fit_model(ModelVariant::SvmRbf, d, {}, 1, std::nullopt), Error);
    }

    TEST_CASE("SVM scores are a monotone transform of the decision value") {
        const Dataset d = blobs(80, 6, 1.0, 12);
        const TrainedModel m = fit_model(ModelVariant::SvmRbf, d, {}, 4, std::nullopt);
        const auto& p = std::get<SvmParams>(m.params);
        CHECK(p.platt_scale > 0.0);
        CHECK(p.gamma > 0.0);
        std::vector<std::pair<double, double>> pairs;
        for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
            const Eigen::VectorXd z = m.standardization.apply(Eigen::VectorXd(d.x.row(i).transpose()));
            const Eigen::VectorXd s = predict_proba(m, z);
            CHECK(s.sum() == doctest::Approx(1.0).epsilon(1e-12));
            pairs.emplace_back(svm_decision(p, z), s[1]);
        }
        std::sort(pairs.begin(), pairs.end());
        for (std::size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[i].second >= pairs[i - 1].second);
    }

    TEST_CASE("every variant: scores sum to one, predict is argmax, training is deterministic") {
        const Dataset d = blobs(90, 6, 1.5, 13);
        for (const auto v : {ModelVariant::Mlp, ModelVariant::LogReg, ModelVariant::SvmRbf, ModelVariant::RandomForest}) {
            CAPTURE(variant_name(v));
            const TrainedModel a = fit_model(v, d, {}, 99, SmoteConfig{});
            const TrainedModel b = fit_model(v, d, {}, 99, SmoteConfig{});
            CHECK(model_to_json(a).dump() == model_to_json(b).dump());
            for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
                const Eigen::VectorXd z = a.standardization.apply(Eigen::VectorXd(d.x.row(i).transpose()));
                const Eigen::VectorXd s = predict_proba(a, z);
                CHECK(s.sum() == doctest::Approx(1.0).epsilon(1e-9));
                Eigen::Index best = 0;
                s.maxCoeff(&best);
                CHECK(predict(a, z) == a.class_labels[static_cast<std::size_t>(best)]);
            }
        }
    }

    TEST_CASE("predictions are invariant to rescaling the raw inputs") {
        const Dataset d = blobs(90, 6, 1.5, 14);
        Dataset scaled = d;
        scaled.x *= 4.0;
        for (const auto v : {ModelVariant::Mlp, ModelVariant::LogReg, ModelVariant::SvmRbf, ModelVariant::RandomForest}) {
            const auto a = predict_raw(fit_model(v, d, {}, 5, std::nullopt), d.x);
            const auto b = predict_raw(fit_model(v, scaled, {}, 5, std::nullopt), scaled.x);
            CHECK(a == b);
        }
    }

    TEST_CASE("single-class training data is a contract error") {
        Dataset d = blobs(20, 6, 1.0, 15);
        std::fill(d.y.begin(), d.y.end(), 1);
        for (const auto v : {ModelVariant::Mlp, ModelVariant::LogReg, ModelVariant::SvmRbf, ModelVariant::RandomForest}) {
            try {
                fit_model(v, d, {}, 1, std::nullopt);
                FAIL("expected a contract error");
            } catch (const Error& e) {
                CHECK(e.kind() == ErrorKind::Contract);
            }
        }
    }

    TEST_CASE("non-finite features are rejected at prediction") {
        const Dataset d = blobs(40, 6, 2.0, 16);
        const TrainedModel m = fit_model(ModelVariant::LogReg, d, {}, 1, std::nullopt);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(6);
        z[2] = std::nan("");
        CHECK_THROWS_AS(predict_proba(m, z), Error);
    }

    TEST_CASE("model files round-trip bit-stably and carry a content hash") {
        const Dataset d = blobs(90, 6, 1.5, 17, 3);
        testing::TempDir dir("model");
        for (const auto v : {ModelVariant::Mlp, ModelVariant::LogReg, ModelVariant::RandomForest}) {
            TrainedModel m = fit_model(v, d, {}, 3, std::nullopt);
            m.metadata["note"] = "round trip";
            save_model(m, dir / "m.json");
            const TrainedModel back = load_model(dir / "m.json");
            CHECK(model_hash(back) == model_hash(m));
            CHECK(predict_raw(back, d.x) == predict_raw(m, d.x));
            for (Eigen::Index i = 0; i < 10; ++i) {
                const Eigen::VectorXd z = m.standardization.apply(Eigen::VectorXd(d.x.row(i).transpose()));
                CHECK((predict_proba(back, z) - predict_proba(m, z)).cwiseAbs().maxCoeff() == 0.0);
            }
            nlohmann::json doc = model_to_json(m);
            CHECK(doc.at("format") == "wildfire-risk-model");
            CHECK(doc.at("version") == 1);
            CHECK(doc.at("hash").get<std::string>().size() == 64);
            doc["seed"] = 4;
            CHECK_THROWS_AS(model_from_json(doc), Error);
        }
    }

    TEST_CASE("SVM model files round-trip") {
        const Dataset d = blobs(60, 6, 1.5, 18);
        const TrainedModel m = fit_model(ModelVariant::SvmRbf, d, {}, 3, std::nullopt);
        const TrainedModel back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
        CHECK(model_hash(back) == model_hash(m));
        CHECK(predict_raw(back, d.x) == predict_raw(m, d.x));
    }
}
