#include <cmath>
#include <numeric>

#include "wildfire/error.hpp"
#include "wildfire/models.hpp"
#include "wildfire/seed.hpp"

namespace wildfire {

std::vector<int> MlpParams::layer_sizes() const {
    std::vector<int> sizes;
    if (weights.empty()) return sizes;
    sizes.push_back(static_cast<int>(weights.front().cols()));
    for (const auto& w : weights) sizes.push_back(static_cast<int>(w.rows()));
    return sizes;
}

MlpParams mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw Error(ErrorKind::Contract, "an MLP needs at least input and output layers");
    Rng rng(seed);
    MlpParams p;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
        }
        p.weights.push_back(std::move(w));
        p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return p;
}

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
    return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

void softmax_rows(Eigen::MatrixXd& z) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double m = z.row(i).maxCoeff();
        z.row(i) = (z.row(i).array() - m).exp();
        z.row(i) /= z.row(i).sum();
    }
}

// Activations of every layer, input included.
std::vector<Eigen::MatrixXd> forward_all(const MlpParams& p, const Eigen::MatrixXd& x) {
    std::vector<Eigen::MatrixXd> acts{x};
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        Eigen::MatrixXd z = acts.back() * p.weights[l].transpose();
        z.rowwise() += p.biases[l].transpose();
        if (l + 1 == p.weights.size()) {
            softmax_rows(z);
            acts.push_back(std::move(z));
        } else {
            acts.push_back(sigmoid(z));
        }
    }
    return acts;
}

void check_labels(const MlpParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y) {
    if (static_cast<std::size_t>(x.rows()) != y.size() || y.empty()) {
        throw Error(ErrorKind::Contract, "MLP batch needs one label per row and at least one row");
    }
    const int classes = static_cast<int>(p.weights.back().rows());
    for (const int c : y) {
        if (c < 0 || c >= classes) throw Error(ErrorKind::Contract, "MLP label index out of range");
    }
}

}  // namespace

Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x) {
    return forward_all(params, x).back();
}

double mlp_loss(const MlpParams& params, const Eigen::MatrixXd& x, const std::vector<int>& y) {
    check_labels(params, x, y);
    const Eigen::MatrixXd probs = mlp_forward(params, x);
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        total -= std::log(probs(static_cast<Eigen::Index>(i), y[i]));
    }
    return total / static_cast<double>(y.size());
}

MlpGradients mlp_backprop_gradients(const MlpParams& params, const Eigen::MatrixXd& x, const std::vector<int>& y) {
    check_labels(params, x, y);
    const auto acts = forward_all(params, x);
    const std::size_t layers = params.weights.size();
    MlpGradients g;
    g.weights.resize(layers);
    g.biases.resize(layers);

    // d(mean CE)/d(logits) = (softmax - onehot) / n
    Eigen::MatrixXd delta = acts.back();
    for (std::size_t i = 0; i < y.size(); ++i) delta(static_cast<Eigen::Index>(i), y[i]) -= 1.0;
    delta /= static_cast<double>(y.size());

    for (std::size_t l = layers; l-- > 0;) {
        g.weights[l] = delta.transpose() * acts[l];
        g.biases[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            const Eigen::MatrixXd& a = acts[l];
            delta = (delta * params.weights[l]).cwiseProduct(a.cwiseProduct((1.0 - a.array()).matrix()));
        }
    }
    return g;
}

MlpParams train_mlp(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_classes, const MlpConfig& cfg,
                    std::uint64_t seed, std::vector<double>* loss_history) {
    if (cfg.hidden < 1 || cfg.epochs < 0 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) {
        throw Error(ErrorKind::Contract, "invalid MLP configuration");
    }
    MlpParams p = mlp_init({static_cast<int>(x.cols()), cfg.hidden, n_classes}, derive_seed(seed, "mlp-init"));
    Rng rng(derive_seed(seed, "mlp-batches"));
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto batch = static_cast<std::size_t>(cfg.batch_size);

    Eigen::MatrixXd xb;
    std::vector<int> yb;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            xb.resize(static_cast<Eigen::Index>(stop - start), x.cols());
            yb.clear();
            for (std::size_t k = start; k < stop; ++k) {
                xb.row(static_cast<Eigen::Index>(k - start)) = x.row(static_cast<Eigen::Index>(order[k]));
                yb.push_back(y[order[k]]);
            }
            const MlpGradients g = mlp_backprop_gradients(p, xb, yb);
            for (std::size_t l = 0; l < p.weights.size(); ++l) {
                p.weights[l] -= cfg.learning_rate * g.weights[l];
                p.biases[l] -= cfg.learning_rate * g.biases[l];
            }
        }
        const double loss = mlp_loss(p, x, y);
        if (!std::isfinite(loss)) {
            throw Error(ErrorKind::Divergence, "MLP loss became non-finite at epoch " + std::to_string(epoch + 1));
        }
        if (loss_history) loss_history->push_back(loss);
    }
    return p;
}

}  // namespace wildfire
