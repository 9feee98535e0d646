#include <algorithm>
#include <cmath>
#include <numeric>

#include "wildfire/error.hpp"
#include "wildfire/models.hpp"
#include "wildfire/seed.hpp"

namespace wildfire {

double gini_impurity(const std::vector<double>& class_counts) {
    double total = 0.0;
    for (const double c : class_counts) {
        if (c < 0.0) throw Error(ErrorKind::Contract, "class counts must be non-negative");
        total += c;
    }
    if (!(total > 0.0)) throw Error(ErrorKind::Contract, "gini impurity of an empty node");
    double sum_sq = 0.0;
    for (const double c : class_counts) sum_sq += (c / total) * (c / total);
    return 1.0 - sum_sq;
}

const TreeNode& DecisionTree::leaf_for(const Eigen::VectorXd& x) const {
    const TreeNode* node = &nodes.at(0);
    while (node->feature >= 0) {
        node = &nodes[static_cast<std::size_t>(x[node->feature] <= node->threshold ? node->left : node->right)];
    }
    return *node;
}

int DecisionTree::predict(const Eigen::VectorXd& x) const {
    const auto& counts = leaf_for(x).class_counts;
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = -1.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_classes, int max_features,
                int min_samples_split, std::uint64_t seed)
        : x_(x), y_(y), n_classes_(n_classes), max_features_(max_features),
          min_samples_split_(min_samples_split), rng_(seed) {}

    DecisionTree build(std::vector<std::size_t> rows) {
        DecisionTree tree;
        struct Pending {
            int node;
            std::vector<std::size_t> rows;
        };
        std::vector<Pending> stack;
        tree.nodes.emplace_back();
        stack.push_back({0, std::move(rows)});
        while (!stack.empty()) {
            Pending cur = std::move(stack.back());
            stack.pop_back();
            auto counts = class_counts(cur.rows);
            const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;
            Split split;
            if (!pure && static_cast<int>(cur.rows.size()) >= min_samples_split_) split = best_split(cur.rows, counts);
            TreeNode& node = tree.nodes[static_cast<std::size_t>(cur.node)];
            node.class_counts = std::move(counts);
            if (split.feature < 0) continue;

            std::vector<std::size_t> left;
            std::vector<std::size_t> right;
            for (const std::size_t r : cur.rows) {
                (x_(static_cast<Eigen::Index>(r), split.feature) <= split.threshold ? left : right).push_back(r);
            }
            node.feature = split.feature;
            node.threshold = split.threshold;
            node.left = static_cast<int>(tree.nodes.size());
            node.right = node.left + 1;
            const int left_id = node.left;
            const int right_id = node.right;
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            stack.push_back({right_id, std::move(right)});
            stack.push_back({left_id, std::move(left)});
        }
        return tree;
    }

private:
    std::vector<double> class_counts(const std::vector<std::size_t>& rows) const {
        std::vector<double> counts(static_cast<std::size_t>(n_classes_), 0.0);
        for (const std::size_t r : rows) counts[static_cast<std::size_t>(y_[r])] += 1.0;
        return counts;
    }

    // Draws max_features candidates; if none of them can split the node the
    // remaining features are tried as well.
    Split best_split(const std::vector<std::size_t>& rows, const std::vector<double>& parent_counts) {
        const int d = static_cast<int>(x_.cols());
        std::vector<int> order(static_cast<std::size_t>(d));
        std::iota(order.begin(), order.end(), 0);
        shuffle(order.begin(), order.end(), rng_);
        const auto m = static_cast<std::ptrdiff_t>(std::clamp(max_features_, 1, d));
        std::vector<int> first(order.begin(), order.begin() + m);
        std::vector<int> rest(order.begin() + m, order.end());
        std::sort(first.begin(), first.end());
        std::sort(rest.begin(), rest.end());

        const double parent = gini_impurity(parent_counts);
        Split best = search(rows, first, parent, parent_counts);
        if (best.feature < 0) best = search(rows, rest, parent, parent_counts);
        return best;
    }

    // Features ascending, thresholds ascending; only a strictly larger gain
    // replaces the incumbent, so ties keep the lower feature and threshold.
    Split search(const std::vector<std::size_t>& rows, const std::vector<int>& features, double parent,
                 const std::vector<double>& parent_counts) const {
        Split best;
        const double n = static_cast<double>(rows.size());
        std::vector<std::pair<double, int>> values(rows.size());
        std::vector<double> left(static_cast<std::size_t>(n_classes_));
        std::vector<double> right(static_cast<std::size_t>(n_classes_));
        for (const int f : features) {
            for (std::size_t k = 0; k < rows.size(); ++k) {
                values[k] = {x_(static_cast<Eigen::Index>(rows[k]), f), y_[rows[k]]};
            }
            std::sort(values.begin(), values.end());
            std::fill(left.begin(), left.end(), 0.0);
            right = parent_counts;
            for (std::size_t k = 0; k + 1 < values.size(); ++k) {
                left[static_cast<std::size_t>(values[k].second)] += 1.0;
                right[static_cast<std::size_t>(values[k].second)] -= 1.0;
                const double lo = values[k].first;
                const double hi = values[k + 1].first;
                if (!(lo < hi)) continue;
                double threshold = lo + (hi - lo) / 2.0;
                if (threshold >= hi) threshold = lo;
                const double nl = static_cast<double>(k + 1);
                const double nr = n - nl;
                const double gain = parent - (nl / n) * gini_impurity(left) - (nr / n) * gini_impurity(right);
                if (gain > best.gain) best = {f, threshold, gain};
            }
        }
        return best;
    }

    const Eigen::MatrixXd& x_;
    const std::vector<int>& y_;
    int n_classes_;
    int max_features_;
    int min_samples_split_;
    Rng rng_;
};

}  // namespace

DecisionTree grow_tree(const Eigen::MatrixXd& x, const std::vector<int>& y, std::span<const std::size_t> rows,
                       int n_classes, int max_features, int min_samples_split, std::uint64_t seed) {
    if (rows.empty()) throw Error(ErrorKind::Contract, "cannot grow a tree on zero rows");
    TreeBuilder builder(x, y, n_classes, max_features, std::max(2, min_samples_split), seed);
    return builder.build({rows.begin(), rows.end()});
}

ForestParams train_forest(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_classes,
                          const ForestConfig& cfg, std::uint64_t seed) {
    if (cfg.n_estimators < 1) throw Error(ErrorKind::Contract, "a forest needs at least one tree");
    const std::size_t n = y.size();
    if (n == 0) throw Error(ErrorKind::Contract, "cannot train a forest on zero rows");
    const int d = static_cast<int>(x.cols());
    const int m = cfg.max_features > 0 ? cfg.max_features
                                       : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
    ForestParams p;
    p.n_classes = n_classes;
    for (int t = 0; t < cfg.n_estimators; ++t) {
        std::vector<std::size_t> rows(n);
        if (cfg.bootstrap) {
            Rng rng(derive_seed(seed, "bootstrap", static_cast<std::uint64_t>(t)));
            for (auto& r : rows) r = static_cast<std::size_t>(uniform_index(rng, n));
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        p.trees.push_back(grow_tree(x, y, rows, n_classes, m, cfg.min_samples_split,
                                    derive_seed(seed, "tree", static_cast<std::uint64_t>(t))));
    }
    return p;
}

}  // namespace wildfire
