#include <cmath>

#include "wildfire/error.hpp"
#include "wildfire/models.hpp"

namespace wildfire {

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct Fit {
    Eigen::VectorXd w;
    double b = 0.0;
    std::vector<double> history;
};

Fit fit_binary(const Eigen::MatrixXd& x, const std::vector<int>& y, const LogRegConfig& cfg) {
    const auto n = static_cast<double>(x.rows());
    Fit fit{Eigen::VectorXd::Zero(x.cols()), 0.0, {}};
    Eigen::VectorXd target(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) target[i] = y[static_cast<std::size_t>(i)];

    double value = logreg_objective(fit.w, fit.b, x, y, cfg.l2);
    fit.history.push_back(value);
    double step = 1.0;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        const Eigen::VectorXd z = (x * fit.w).array() + fit.b;
        const Eigen::VectorXd resid = z.unaryExpr([](double v) { return sigmoid(v); }) - target;
        const Eigen::VectorXd gw = x.transpose() * resid / n + (cfg.l2 / n) * fit.w;
        const double gb = resid.sum() / n;
        const double gnorm2 = gw.squaredNorm() + gb * gb;
        if (std::sqrt(gnorm2) < cfg.tolerance) break;

        // Armijo backtracking: only accept a step that lowers the objective.
        step = std::min(step * 2.0, 1e6);
        bool accepted = false;
        while (step > 1e-20) {
            const Eigen::VectorXd w_new = fit.w - step * gw;
            const double b_new = fit.b - step * gb;
            const double candidate = logreg_objective(w_new, b_new, x, y, cfg.l2);
            if (!std::isfinite(candidate)) {
                throw Error(ErrorKind::Divergence,
                            "logistic regression objective became non-finite at iteration " + std::to_string(it + 1));
            }
            if (candidate <= value - 0.5 * step * gnorm2) {
                fit.w = w_new;
                fit.b = b_new;
                value = candidate;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        fit.history.push_back(value);
    }
    return fit;
}

}  // namespace

double logreg_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& x, const std::vector<int>& y,
                        double l2) {
    const Eigen::VectorXd z = (x * w).array() + b;
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) total += softplus(z[i]) - y[static_cast<std::size_t>(i)] * z[i];
    const auto n = static_cast<double>(x.rows());
    return total / n + 0.5 * (l2 / n) * w.squaredNorm();
}

LogRegParams train_logreg(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_classes,
                          const LogRegConfig& cfg) {
    if (!(cfg.l2 >= 0.0) || cfg.max_iterations < 0 || !(cfg.tolerance > 0.0)) {
        throw Error(ErrorKind::Contract, "invalid logistic regression configuration");
    }
    if (n_classes < 2) throw Error(ErrorKind::Contract, "logistic regression needs at least two classes");
    const int models = n_classes == 2 ? 1 : n_classes;
    LogRegParams p;
    p.weights.resize(models, x.cols());
    p.bias.resize(models);
    for (int m = 0; m < models; ++m) {
        // Binary: class index 1 is positive. One-vs-rest: class m is positive.
        const int positive = n_classes == 2 ? 1 : m;
        std::vector<int> target(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) target[i] = y[i] == positive ? 1 : 0;
        Fit fit = fit_binary(x, target, cfg);
        p.weights.row(m) = fit.w.transpose();
        p.bias[m] = fit.b;
        p.loss_history.push_back(std::move(fit.history));
    }
    return p;
}

}  // namespace wildfire
