#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace wildfire {

// Feature matrix (one row per sample) with integer class labels.
struct Dataset {
    Eigen::MatrixXd x;
    std::vector<int> y;

    std::size_t size() const { return y.size(); }
    std::size_t n_features() const { return static_cast<std::size_t>(x.cols()); }

    Dataset subset(std::span<const std::size_t> rows) const;
};

// Sorted distinct labels.
std::vector<int> class_labels(std::span<const int> y);

// z-score statistics fit on training rows only.
struct Standardization {
    std::vector<double> mean;
    std::vector<double> stddev;
    double epsilon = 1e-9;

    std::size_t n_features() const { return mean.size(); }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& row) const;
    Eigen::MatrixXd invert(const Eigen::MatrixXd& z) const;

    // mean 0 / stddev 1 for every column.
    static Standardization identity(std::size_t n_features);
};

// Population statistics; a standard deviation below `epsilon` is floored to
// it, so constant columns map to zeros. Throws Contract for fewer than 2 rows.
Standardization fit_standardization(const Eigen::MatrixXd& x, double epsilon = 1e-9);

}  // namespace wildfire
