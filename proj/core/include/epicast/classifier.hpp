#pragma once

#include "epicast/ingest.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace epicast::classify {

/// Per-column centring and scaling. Columns with zero spread keep scale 1.
struct Standardization {
    std::vector<double> mean;
    std::vector<double> scale;

    Eigen::MatrixXd apply(const Eigen::MatrixXd &raw) const;
    static Standardization estimate(const Eigen::MatrixXd &raw);
};

struct LabeledTable {
    Eigen::MatrixXd features; // raw values, one row per observation
    std::vector<int> labels;  // 0 or 1
    std::vector<std::string> feature_names;
    Standardization standardization;

    std::size_t rows() const { return labels.size(); }
    std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }
    Eigen::MatrixXd standardized() const { return standardization.apply(features); }

    /// Subset of rows; standardization is carried over unchanged.
    LabeledTable subset(std::span<const std::size_t> rows) const;
    /// Subset of columns with a freshly estimated standardization.
    LabeledTable select_columns(std::span<const std::size_t> columns) const;
};

/// Features [temperature, latitude, day_index]; label 1 when the row's new
/// cases exceed the median of its own region. Throws ContractError for fewer
/// than 10 rows and DataError when every label comes out equal.
LabeledTable build_labels(std::span<const std::vector<JoinedRow>> regions);
LabeledTable build_labels(std::span<const JoinedRow> rows);

/// Builds a table from explicit features and labels (standardization estimated).
LabeledTable make_table(Eigen::MatrixXd features, std::vector<int> labels, std::vector<std::string> names = {});

struct LogisticModel {
    std::vector<double> weights; // on standardized features
    double bias = 0.0;
    Standardization standardization;
    int n_iters_run = 0;
    double final_loss = 0.0;
    double final_learning_rate = 0.0;
};

struct LogisticOptions {
    double learning_rate = 0.1;
    int max_iters = 5000;
    double tol = 1e-8;
};

/// Mean log-loss on standardized features.
double logistic_loss(const Eigen::MatrixXd &x, std::span<const int> labels, std::span<const double> weights,
                     double bias);
/// Gradient of logistic_loss: d/dweights followed by d/dbias.
std::vector<double> logistic_gradient(const Eigen::MatrixXd &x, std::span<const int> labels,
                                      std::span<const double> weights, double bias);

/// Full-batch gradient descent; the step halves whenever the loss would rise.
/// `loss_trace`, when given, receives the loss after every accepted step.
LogisticModel fit_logistic(const LabeledTable &table, const LogisticOptions &options = {},
                           std::vector<double> *loss_trace = nullptr);

struct TreeNode {
    int feature = -1; // -1 for leaves
    double threshold = 0.0;
    int left = -1;    // x[feature] <= threshold
    int right = -1;
    double probability = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes; // nodes[0] is the root
    int depth() const;
    double predict(std::span<const double> row) const;
};

struct ForestModel {
    std::vector<Tree> trees;
    int max_depth = 8;
    int mtry = 2;
    int min_leaf = 5;
    std::uint64_t seed = 0;
    Standardization standardization;
};

struct ForestOptions {
    int n_trees = 100;
    int max_depth = 8;
    int mtry = 2;
    int min_leaf = 5;
    std::uint64_t seed = 0;
    bool bootstrap = true;
    unsigned jobs = 1; // trees are grown in parallel; results do not depend on this
};

/// Tree t uses its own generator seeded with seed + t.
ForestModel fit_forest(const LabeledTable &table, const ForestOptions &options = {});

/// Inputs are raw (unstandardized) feature rows.
std::vector<double> predict_proba(const LogisticModel &model, const Eigen::MatrixXd &raw);
std::vector<double> predict_proba(const ForestModel &model, const Eigen::MatrixXd &raw);

/// Mann-Whitney AUC: (concordant + ties/2) / (n_pos * n_neg).
double auc(std::span<const double> scores, std::span<const int> labels);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Class-stratified split; each class contributes round(train_fraction * size) rows to train.
Split stratified_split(std::span<const int> labels, double train_fraction, std::uint64_t seed);

std::string to_json(const LogisticModel &model);
std::string to_json(const ForestModel &model);

} // namespace epicast::classify
