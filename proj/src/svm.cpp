#include <algorithm>
#include <cmath>

#include "wildfire/error.hpp"
#include "wildfire/models.hpp"
#include "wildfire/seed.hpp"

namespace wildfire {

double rbf_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double gamma) {
    return std::exp(-gamma * (u - v).squaredNorm());
}

double svm_decision(const SvmParams& params, const Eigen::VectorXd& x) {
    double f = params.bias;
    for (Eigen::Index i = 0; i < params.support_vectors.rows(); ++i) {
        const double k = std::exp(-params.gamma * (params.support_vectors.row(i).transpose() - x).squaredNorm());
        f += params.alpha[i] * params.signs[i] * k;
    }
    return f;
}

double svm_dual_objective(const Eigen::VectorXd& alpha, const Eigen::VectorXd& signs, const Eigen::MatrixXd& kernel) {
    const Eigen::VectorXd ay = alpha.cwiseProduct(signs);
    return alpha.sum() - 0.5 * ay.dot(kernel * ay);
}

namespace {

// Platt-style squashing with a single slope: maximize the likelihood of
// sigmoid(a * f) against smoothed 0/1 targets, keeping a > 0 so the
// probability ranks rows exactly like the decision value.
double fit_platt_scale(const Eigen::VectorXd& decision, const Eigen::VectorXd& signs) {
    double n_pos = 0.0;
    for (Eigen::Index i = 0; i < signs.size(); ++i) n_pos += signs[i] > 0 ? 1.0 : 0.0;
    const double n_neg = static_cast<double>(signs.size()) - n_pos;
    const double hi = (n_pos + 1.0) / (n_pos + 2.0);
    const double lo = 1.0 / (n_neg + 2.0);

    double a = 1.0;
    for (int it = 0; it < 100; ++it) {
        double grad = 0.0;
        double hess = 0.0;
        for (Eigen::Index i = 0; i < decision.size(); ++i) {
            const double t = signs[i] > 0 ? hi : lo;
            const double p = 1.0 / (1.0 + std::exp(-a * decision[i]));
            grad += (t - p) * decision[i];
            hess += p * (1.0 - p) * decision[i] * decision[i];
        }
        if (!(hess > 1e-12)) break;
        const double next = std::clamp(a + grad / hess, 1e-6, 1e6);
        if (std::abs(next - a) < 1e-10 * std::max(1.0, a)) {
            a = next;
            break;
        }
        a = next;
    }
    return a;
}

}  // namespace

SvmParams train_svm(const Eigen::MatrixXd& x, const Eigen::VectorXd& signs, const SvmConfig& cfg,
                    std::uint64_t seed, Eigen::VectorXd* all_alpha) {
    const Eigen::Index n = x.rows();
    if (n < 2 || signs.size() != n) throw Error(ErrorKind::Contract, "SVM needs at least two labelled rows");
    if (!(cfg.c > 0.0) || !(cfg.tolerance > 0.0) || cfg.gamma < 0.0) {
        throw Error(ErrorKind::Contract, "invalid SVM configuration");
    }
    double gamma = cfg.gamma;
    if (gamma == 0.0) {
        const double mean = x.mean();
        const double var = (x.array() - mean).square().mean();
        gamma = var > 0.0 ? 1.0 / (static_cast<double>(x.cols()) * var) : 1.0;
    }
    const double c = cfg.c;

    const auto kernel_row = [&](Eigen::Index i, Eigen::VectorXd& row) {
        row = ((x.rowwise() - x.row(i)).rowwise().squaredNorm() * -gamma).array().exp();
    };

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    // g = sum_j alpha_j y_j K(j, .), so the error is g + b - y.
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    double b = 0.0;
    Rng rng(seed);
    Eigen::VectorXd ki;
    Eigen::VectorXd kj;

    int quiet_passes = 0;
    for (int pass = 0; pass < cfg.max_total_passes && quiet_passes < cfg.max_passes; ++pass) {
        int changed = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double ei = g[i] + b - signs[i];
            const double yi = signs[i];
            if (!((yi * ei < -cfg.tolerance && alpha[i] < c) || (yi * ei > cfg.tolerance && alpha[i] > 0.0))) continue;

            auto j = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n - 1)));
            if (j >= i) ++j;
            const double yj = signs[j];
            const double ej = g[j] + b - yj;
            const double ai_old = alpha[i];
            const double aj_old = alpha[j];
            double lo = 0.0;
            double hi = 0.0;
            if (yi != yj) {
                lo = std::max(0.0, aj_old - ai_old);
                hi = std::min(c, c + aj_old - ai_old);
            } else {
                lo = std::max(0.0, ai_old + aj_old - c);
                hi = std::min(c, ai_old + aj_old);
            }
            if (hi - lo < 1e-12) continue;
            const double kij = rbf_kernel(x.row(i).transpose(), x.row(j).transpose(), gamma);
            const double eta = 2.0 * kij - 2.0;  // K(i,i) = K(j,j) = 1
            if (eta >= 0.0) continue;
            double aj = std::clamp(aj_old - yj * (ei - ej) / eta, lo, hi);
            if (std::abs(aj - aj_old) < 1e-5) continue;
            double ai = ai_old + yi * yj * (aj_old - aj);
            ai = std::clamp(ai, 0.0, c);
            alpha[i] = ai;
            alpha[j] = aj;

            const double dai = ai - ai_old;
            const double daj = aj - aj_old;
            const double b1 = b - ei - yi * dai - yj * daj * kij;
            const double b2 = b - ej - yi * dai * kij - yj * daj;
            if (ai > 0.0 && ai < c) {
                b = b1;
            } else if (aj > 0.0 && aj < c) {
                b = b2;
            } else {
                b = 0.5 * (b1 + b2);
            }
            kernel_row(i, ki);
            kernel_row(j, kj);
            g += (yi * dai) * ki + (yj * daj) * kj;
            ++changed;
        }
        quiet_passes = changed == 0 ? quiet_passes + 1 : 0;
    }

    SvmParams p;
    p.gamma = gamma;
    p.c = c;
    p.bias = b;
    std::vector<Eigen::Index> sv;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (alpha[i] > 0.0) sv.push_back(i);
    }
    p.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
    p.alpha.resize(static_cast<Eigen::Index>(sv.size()));
    p.signs.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t k = 0; k < sv.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(k);
        p.support_vectors.row(row) = x.row(sv[k]);
        p.alpha[row] = alpha[sv[k]];
        p.signs[row] = signs[sv[k]];
    }
    const Eigen::VectorXd decision = g.array() + b;
    if (!decision.allFinite()) throw Error(ErrorKind::Divergence, "SVM decision values became non-finite");
    p.platt_scale = fit_platt_scale(decision, signs);
    if (all_alpha) *all_alpha = alpha;
    return p;
}

}  // namespace wildfire
