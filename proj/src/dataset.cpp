#include "wildfire/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "wildfire/error.hpp"

namespace wildfire {

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    out.y.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
        out.y.push_back(y.at(rows[i]));
    }
    return out;
}

std::vector<int> class_labels(std::span<const int> y) {
    std::vector<int> labels(y.begin(), y.end());
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return labels;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& x) const {
    if (static_cast<std::size_t>(x.cols()) != mean.size()) {
        throw Error(ErrorKind::Contract, "standardization expects " + std::to_string(mean.size()) + " features");
    }
    Eigen::MatrixXd z(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const auto uj = static_cast<std::size_t>(j);
        z.col(j) = (x.col(j).array() - mean[uj]) / stddev[uj];
    }
    return z;
}

Eigen::VectorXd Standardization::apply(const Eigen::VectorXd& row) const {
    if (static_cast<std::size_t>(row.size()) != mean.size()) {
        throw Error(ErrorKind::Contract, "standardization expects " + std::to_string(mean.size()) + " features");
    }
    Eigen::VectorXd z(row.size());
    for (Eigen::Index j = 0; j < row.size(); ++j) {
        const auto uj = static_cast<std::size_t>(j);
        z[j] = (row[j] - mean[uj]) / stddev[uj];
    }
    return z;
}

Eigen::MatrixXd Standardization::invert(const Eigen::MatrixXd& z) const {
    Eigen::MatrixXd x(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const auto uj = static_cast<std::size_t>(j);
        x.col(j) = z.col(j).array() * stddev[uj] + mean[uj];
    }
    return x;
}

Standardization Standardization::identity(std::size_t n_features) {
    Standardization s;
    s.mean.assign(n_features, 0.0);
    s.stddev.assign(n_features, 1.0);
    return s;
}

Standardization fit_standardization(const Eigen::MatrixXd& x, double epsilon) {
    if (x.rows() < 2) throw Error(ErrorKind::Contract, "standardization needs at least 2 training rows");
    if (!(epsilon > 0.0)) throw Error(ErrorKind::Contract, "standardization epsilon must be positive");
    Standardization s;
    s.epsilon = epsilon;
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double m = x.col(j).sum() / n;
        const double var = (x.col(j).array() - m).square().sum() / n;
        s.mean.push_back(m);
        s.stddev.push_back(std::max(std::sqrt(var), epsilon));
    }
    return s;
}

}  // namespace wildfire
