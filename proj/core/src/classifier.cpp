#include "epicast/classifier.hpp"

#include "epicast/errors.hpp"
#include "epicast/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace epicast::classify {

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_table(const LabeledTable &table) {
    if (table.rows() == 0 || static_cast<std::size_t>(table.features.rows()) != table.rows()) {
        throw ContractError("labeled table is empty or its feature and label counts differ");
    }
    for (int label : table.labels) {
        if (label != 0 && label != 1) {
            throw ContractError("labels must be 0 or 1");
        }
    }
    if (!table.features.allFinite()) {
        throw ContractError("labeled table has missing or non-finite features");
    }
}

double gini(double positives, double total) {
    if (total <= 0.0) {
        return 0.0;
    }
    const double p = positives / total;
    return 2.0 * p * (1.0 - p);
}

struct Grower {
    const Eigen::MatrixXd &x;
    const std::vector<int> &labels;
    const ForestOptions &options;
    Rng rng;
    Tree tree;

    int grow(std::vector<std::size_t> &rows, int depth) {
        double positives = 0.0;
        for (std::size_t r : rows) {
            positives += labels[r];
        }
        const double total = static_cast<double>(rows.size());
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, total > 0.0 ? positives / total : 0.0});

        const auto min_leaf = static_cast<std::size_t>(std::max(1, options.min_leaf));
        if (depth >= options.max_depth || rows.size() < 2 * min_leaf || positives == 0.0 || positives == total) {
            return node_id;
        }

        const auto n_features = static_cast<std::size_t>(x.cols());
        const auto mtry = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.mtry)), n_features);
        std::vector<std::size_t> features(n_features);
        std::iota(features.begin(), features.end(), 0);
        for (std::size_t i = 0; i < mtry; ++i) {
            const std::size_t j = i + rng.index(n_features - i);
            std::swap(features[i], features[j]);
        }
        features.resize(mtry);
        std::sort(features.begin(), features.end());

        const double parent = gini(positives, total);
        double best_gain = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::size_t> sorted = rows;
        for (std::size_t f : features) {
            const auto fi = static_cast<Eigen::Index>(f);
            std::stable_sort(sorted.begin(), sorted.end(),
                             [&](std::size_t a, std::size_t b) { return x(static_cast<Eigen::Index>(a), fi) <
                                                                        x(static_cast<Eigen::Index>(b), fi); });
            double left_pos = 0.0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                left_pos += labels[sorted[i]];
                const double v = x(static_cast<Eigen::Index>(sorted[i]), fi);
                const double next = x(static_cast<Eigen::Index>(sorted[i + 1]), fi);
                if (v == next) {
                    continue;
                }
                const std::size_t n_left = i + 1;
                const std::size_t n_right = sorted.size() - n_left;
                if (n_left < min_leaf || n_right < min_leaf) {
                    continue;
                }
                const double nl = static_cast<double>(n_left);
                const double nr = static_cast<double>(n_right);
                const double child = (nl * gini(left_pos, nl) + nr * gini(positives - left_pos, nr)) / total;
                const double gain = parent - child;
                // Strict improvement keeps the lowest feature, then the lowest threshold.
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (v + next);
                }
            }
        }
        if (best_feature < 0) {
            return node_id;
        }

        std::vector<std::size_t> left, right;
        for (std::size_t r : rows) {
            (x(static_cast<Eigen::Index>(r), best_feature) <= best_threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)].feature = best_feature;
        tree.nodes[static_cast<std::size_t>(node_id)].threshold = best_threshold;
        tree.nodes[static_cast<std::size_t>(node_id)].left = l;
        tree.nodes[static_cast<std::size_t>(node_id)].right = r;
        return node_id;
    }
};

} // namespace

Standardization Standardization::estimate(const Eigen::MatrixXd &raw) {
    Standardization s;
    const auto n = static_cast<double>(raw.rows());
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
        const double mean = n > 0 ? raw.col(c).mean() : 0.0;
        const double var = n > 0 ? (raw.col(c).array() - mean).square().sum() / n : 0.0;
        const double sd = std::sqrt(var);
        s.mean.push_back(mean);
        s.scale.push_back(sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0);
    }
    return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd &raw) const {
    if (static_cast<std::size_t>(raw.cols()) != mean.size()) {
        throw ContractError("feature arity mismatch: model expects " + std::to_string(mean.size()) +
                            " columns, got " + std::to_string(raw.cols()));
    }
    Eigen::MatrixXd out(raw.rows(), raw.cols());
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
        out.col(c) = (raw.col(c).array() - mean[static_cast<std::size_t>(c)]) / scale[static_cast<std::size_t>(c)];
    }
    return out;
}

LabeledTable LabeledTable::subset(std::span<const std::size_t> rows) const {
    LabeledTable out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
        out.labels.push_back(labels[rows[i]]);
    }
    out.feature_names = feature_names;
    out.standardization = standardization;
    return out;
}

LabeledTable LabeledTable::select_columns(std::span<const std::size_t> columns) const {
    Eigen::MatrixXd x(features.rows(), static_cast<Eigen::Index>(columns.size()));
    std::vector<std::string> names;
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j] >= cols()) {
            throw ContractError("column index " + std::to_string(columns[j]) + " out of range");
        }
        x.col(static_cast<Eigen::Index>(j)) = features.col(static_cast<Eigen::Index>(columns[j]));
        names.push_back(columns[j] < feature_names.size() ? feature_names[columns[j]] : std::string{});
    }
    return make_table(std::move(x), labels, std::move(names));
}

LabeledTable make_table(Eigen::MatrixXd features, std::vector<int> labels, std::vector<std::string> names) {
    LabeledTable table;
    table.standardization = Standardization::estimate(features);
    table.features = std::move(features);
    table.labels = std::move(labels);
    table.feature_names = std::move(names);
    check_table(table);
    return table;
}

LabeledTable build_labels(std::span<const std::vector<JoinedRow>> regions) {
    std::size_t total = 0;
    for (const auto &rows : regions) {
        total += rows.size();
    }
    if (total < 10) {
        throw ContractError("need at least 10 joined rows to build a labeled table, got " + std::to_string(total));
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(total), 3);
    std::vector<int> labels;
    labels.reserve(total);
    Eigen::Index r = 0;
    for (const auto &rows : regions) {
        if (rows.empty()) {
            continue;
        }
        std::vector<double> cases;
        for (const auto &row : rows) {
            cases.push_back(row.new_cases);
        }
        const double cut = median(cases);
        for (const auto &row : rows) {
            x(r, 0) = row.temperature;
            x(r, 1) = row.latitude;
            x(r, 2) = static_cast<double>(row.day_index);
            labels.push_back(row.new_cases > cut ? 1 : 0);
            ++r;
        }
    }
    const auto positives = std::accumulate(labels.begin(), labels.end(), std::size_t{0});
    if (positives == 0 || positives == labels.size()) {
        throw DataError("every row received the same label; the median split is degenerate", 0, 0);
    }
    return make_table(std::move(x), std::move(labels), {"temperature", "latitude", "day"});
}

LabeledTable build_labels(std::span<const JoinedRow> rows) {
    const std::vector<std::vector<JoinedRow>> one{std::vector<JoinedRow>(rows.begin(), rows.end())};
    return build_labels(std::span<const std::vector<JoinedRow>>(one));
}

double logistic_loss(const Eigen::MatrixXd &x, std::span<const int> labels, std::span<const double> weights,
                     double bias) {
    const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
    const Eigen::VectorXd z = (x * w).array() + bias;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        loss += softplus(z[i]) - labels[static_cast<std::size_t>(i)] * z[i];
    }
    return loss / static_cast<double>(z.size());
}

std::vector<double> logistic_gradient(const Eigen::MatrixXd &x, std::span<const int> labels,
                                      std::span<const double> weights, double bias) {
    const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
    const Eigen::VectorXd z = (x * w).array() + bias;
    Eigen::VectorXd residual(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        residual[i] = sigmoid(z[i]) - labels[static_cast<std::size_t>(i)];
    }
    const double n = static_cast<double>(z.size());
    const Eigen::VectorXd gw = x.transpose() * residual / n;
    std::vector<double> g(gw.data(), gw.data() + gw.size());
    g.push_back(residual.sum() / n);
    return g;
}

LogisticModel fit_logistic(const LabeledTable &table, const LogisticOptions &options,
                           std::vector<double> *loss_trace) {
    check_table(table);
    if (!(options.learning_rate > 0.0) || options.max_iters < 0) {
        throw ContractError("learning rate must be positive and max_iters non-negative");
    }
    const Eigen::MatrixXd x = table.standardized();
    const auto k = static_cast<std::size_t>(x.cols());

    LogisticModel model;
    model.standardization = table.standardization;
    model.weights.assign(k, 0.0);
    double lr = options.learning_rate;
    double loss = logistic_loss(x, table.labels, model.weights, model.bias);
    std::vector<double> trial(k);

    int iter = 0;
    for (; iter < options.max_iters; ++iter) {
        const auto g = logistic_gradient(x, table.labels, model.weights, model.bias);
        double next_loss = 0.0;
        double trial_bias = 0.0;
        while (true) {
            for (std::size_t j = 0; j < k; ++j) {
                trial[j] = model.weights[j] - lr * g[j];
            }
            trial_bias = model.bias - lr * g[k];
            next_loss = logistic_loss(x, table.labels, trial, trial_bias);
            if (std::isfinite(next_loss) && next_loss <= loss) {
                break;
            }
            lr *= 0.5;
            if (lr < 1e-300) {
                throw NumericalError("logistic regression diverged (loss " + std::to_string(next_loss) +
                                     "); try a smaller learning rate");
            }
        }
        model.weights = trial;
        model.bias = trial_bias;
        const double improvement = loss - next_loss;
        loss = next_loss;
        if (loss_trace != nullptr) {
            loss_trace->push_back(loss);
        }
        if (improvement < options.tol) {
            ++iter;
            break;
        }
    }
    if (!std::isfinite(loss)) {
        throw NumericalError("logistic regression produced a non-finite loss; try a smaller learning rate");
    }
    model.n_iters_run = iter;
    model.final_loss = loss;
    model.final_learning_rate = lr;
    return model;
}

int Tree::depth() const {
    if (nodes.empty()) {
        return 0;
    }
    std::vector<int> depth(nodes.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto &n = nodes[i];
        if (n.feature >= 0) {
            depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
            depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
            deepest = std::max(deepest, depth[i] + 1);
        }
    }
    return deepest;
}

double Tree::predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const auto &n = nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].probability;
}

ForestModel fit_forest(const LabeledTable &table, const ForestOptions &options) {
    check_table(table);
    if (options.n_trees < 1 || options.max_depth < 0) {
        throw ContractError("forest needs n_trees >= 1 and max_depth >= 0");
    }
    const Eigen::MatrixXd x = table.standardized();
    const std::size_t n = table.rows();

    ForestModel model;
    model.max_depth = options.max_depth;
    model.mtry = options.mtry;
    model.min_leaf = options.min_leaf;
    model.seed = options.seed;
    model.standardization = table.standardization;
    model.trees.resize(static_cast<std::size_t>(options.n_trees));

    const auto grow_tree = [&](std::size_t t) {
        Grower grower{x, table.labels, options, Rng(options.seed + t), {}};
        std::vector<std::size_t> rows(n);
        if (options.bootstrap) {
            for (auto &r : rows) {
                r = grower.rng.index(n);
            }
        } else {
            std::iota(rows.begin(), rows.end(), 0);
        }
        grower.grow(rows, 0);
        model.trees[t] = std::move(grower.tree);
    };

    const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(options.n_trees)));
    if (jobs == 1) {
        for (std::size_t t = 0; t < model.trees.size(); ++t) {
            grow_tree(t);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> workers;
        for (unsigned j = 0; j < jobs; ++j) {
            workers.emplace_back([&] {
                for (std::size_t t = next++; t < model.trees.size(); t = next++) {
                    grow_tree(t);
                }
            });
        }
    }
    return model;
}

std::vector<double> predict_proba(const LogisticModel &model, const Eigen::MatrixXd &raw) {
    const Eigen::MatrixXd x = model.standardization.apply(raw);
    if (static_cast<std::size_t>(x.cols()) != model.weights.size()) {
        throw ContractError("feature arity mismatch for logistic model");
    }
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double z = model.bias;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            z += model.weights[static_cast<std::size_t>(j)] * x(i, j);
        }
        out[static_cast<std::size_t>(i)] = sigmoid(z);
    }
    return out;
}

std::vector<double> predict_proba(const ForestModel &model, const Eigen::MatrixXd &raw) {
    if (model.trees.empty()) {
        throw ContractError("forest has no trees");
    }
    const Eigen::MatrixXd x = model.standardization.apply(raw);
    std::vector<double> out(static_cast<std::size_t>(x.rows()), 0.0);
    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            row[static_cast<std::size_t>(j)] = x(i, j);
        }
        double sum = 0.0;
        for (const auto &tree : model.trees) {
            sum += tree.predict(row);
        }
        out[static_cast<std::size_t>(i)] = sum / static_cast<double>(model.trees.size());
    }
    return out;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw ContractError("auc: scores and labels differ in length");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double n_pos = 0.0;
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j); // average of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) {
                rank_sum += mid_rank;
                n_pos += 1.0;
            } else if (labels[order[k]] != 0) {
                throw ContractError("auc: labels must be 0 or 1");
            }
        }
        i = j;
    }
    const double n_neg = static_cast<double>(scores.size()) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) {
        throw ContractError("auc needs at least one positive and one negative label");
    }
    return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

Split stratified_split(std::span<const int> labels, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ContractError("train fraction must lie in (0, 1)");
    }
    Rng rng(seed);
    Split out;
    for (int cls = 0; cls <= 1; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) {
                members.push_back(i);
            }
        }
        for (std::size_t i = members.size(); i > 1; --i) {
            std::swap(members[i - 1], members[rng.index(i)]);
        }
        const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(members.size())));
        out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

namespace {

nlohmann::ordered_json standardization_json(const Standardization &s) {
    return {{"mean", s.mean}, {"scale", s.scale}};
}

} // namespace

std::string to_json(const LogisticModel &model) {
    const nlohmann::ordered_json j{{"type", "logistic"},
                                   {"weights", model.weights},
                                   {"bias", model.bias},
                                   {"standardization", standardization_json(model.standardization)},
                                   {"n_iters_run", model.n_iters_run},
                                   {"final_loss", model.final_loss}};
    return j.dump();
}

std::string to_json(const ForestModel &model) {
    nlohmann::ordered_json trees = nlohmann::ordered_json::array();
    for (const auto &tree : model.trees) {
        nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
        for (const auto &n : tree.nodes) {
            nodes.push_back({{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right},
                             {"probability", n.probability}});
        }
        trees.push_back(std::move(nodes));
    }
    const nlohmann::ordered_json j{{"type", "random_forest"},
                                   {"n_trees", model.trees.size()},
                                   {"max_depth", model.max_depth},
                                   {"mtry", model.mtry},
                                   {"min_leaf", model.min_leaf},
                                   {"seed", model.seed},
                                   {"standardization", standardization_json(model.standardization)},
                                   {"trees", trees}};
    return j.dump();
}

} // namespace epicast::classify
