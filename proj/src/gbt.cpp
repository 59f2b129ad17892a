#include "midas/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

using ordered_json = nlohmann::ordered_json;

namespace midas {

double GbtTree::predict(const double* x) const {
    int node = 0;
    while (feature[node] >= 0)
        node = x[feature[node]] <= threshold[node] ? left[node] : right[node];
    return value[node];
}

double GbtModel::decision(const double* x) const {
    double f = init_logodds;
    for (const auto& t : trees) f += learning_rate * t.predict(x);
    return f;
}

int GbtModel::predict(const double* x) const { return decision(x) > 0.0 ? 1 : 0; }

namespace {

struct TreeBuilder {
    const FlatData& data;
    const GbtConfig& cfg;
    const std::vector<std::vector<int>>& order;  // per-feature presorted sample indices
    const std::vector<double>& grad;             // residuals y - p
    const std::vector<double>& hess;             // p (1 - p)
    GbtTree tree;
    std::vector<int> node_of;  // sample -> current node during the build

    TreeBuilder(const FlatData& d, const GbtConfig& c, const std::vector<std::vector<int>>& o,
                const std::vector<double>& g, const std::vector<double>& h)
        : data(d), cfg(c), order(o), grad(g), hess(h), node_of(d.n, 0) {}

    int new_node() {
        tree.feature.push_back(-1);
        tree.threshold.push_back(0.0);
        tree.left.push_back(-1);
        tree.right.push_back(-1);
        tree.value.push_back(0.0);
        return static_cast<int>(tree.feature.size()) - 1;
    }

    void set_leaf(int node, double gsum, double hsum) {
        double v = hsum > 1e-12 ? gsum / hsum : 0.0;
        tree.value[node] = std::clamp(v, -10.0, 10.0);
    }

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
    };

    Split best_split(int node, int count, double gsum) {
        Split best;
        double parent_score = gsum * gsum / count;
        for (int f = 0; f < data.d; ++f) {
            double lsum = 0.0;
            int lcount = 0;
            double prev_val = 0.0;
            bool have_prev = false;
            for (int idx : order[f]) {
                if (node_of[idx] != node) continue;
                double v = data.at(idx, f);
                if (have_prev && v > prev_val && lcount >= cfg.min_leaf &&
                    count - lcount >= cfg.min_leaf) {
                    double rsum = gsum - lsum;
                    double score = lsum * lsum / lcount + rsum * rsum / (count - lcount);
                    double gain = score - parent_score;
                    if (gain > best.gain + 1e-12) {
                        best.gain = gain;
                        best.feature = f;
                        best.threshold = (prev_val + v) / 2.0;
                    }
                }
                lsum += grad[idx];
                ++lcount;
                prev_val = v;
                have_prev = true;
            }
        }
        return best;
    }

    void build(int node, int depth, int count, double gsum, double hsum) {
        if (depth >= cfg.max_depth || count < 2 * cfg.min_leaf) {
            set_leaf(node, gsum, hsum);
            return;
        }
        Split s = best_split(node, count, gsum);
        if (s.feature < 0) {
            set_leaf(node, gsum, hsum);
            return;
        }
        int l = new_node();
        int r = new_node();
        tree.feature[node] = s.feature;
        tree.threshold[node] = s.threshold;
        tree.left[node] = l;
        tree.right[node] = r;

        double lg = 0.0, lh = 0.0;
        int lcount = 0;
        for (int i = 0; i < data.n; ++i) {
            if (node_of[i] != node) continue;
            if (data.at(i, s.feature) <= s.threshold) {
                node_of[i] = l;
                lg += grad[i];
                lh += hess[i];
                ++lcount;
            } else {
                node_of[i] = r;
            }
        }
        build(l, depth + 1, lcount, lg, lh);
        build(r, depth + 1, count - lcount, gsum - lg, hsum - lh);
    }
};

}  // namespace

GbtModel gbt_fit(const FlatData& data, const GbtConfig& cfg) {
    if (data.n == 0 || data.d == 0) throw FitError("gbt_fit: empty data");
    int pos = std::accumulate(data.y.begin(), data.y.end(), 0);
    if (pos == 0 || pos == data.n) throw FitError("gbt_fit: single-class labels");

    GbtModel model;
    model.learning_rate = cfg.learning_rate;
    double p0 = static_cast<double>(pos) / data.n;
    model.init_logodds = std::log(p0 / (1.0 - p0));

    std::vector<std::vector<int>> order(data.d);
    for (int f = 0; f < data.d; ++f) {
        order[f].resize(data.n);
        std::iota(order[f].begin(), order[f].end(), 0);
        std::stable_sort(order[f].begin(), order[f].end(),
                         [&](int a, int b) { return data.at(a, f) < data.at(b, f); });
    }

    std::vector<double> score(data.n, model.init_logodds);
    std::vector<double> grad(data.n), hess(data.n);
    for (int round = 0; round < cfg.n_trees; ++round) {
        double loss = 0.0;
        for (int i = 0; i < data.n; ++i) {
            double p = 1.0 / (1.0 + std::exp(-score[i]));
            grad[i] = data.y[i] - p;
            hess[i] = std::max(p * (1.0 - p), 1e-12);
            loss += data.y[i] == 1 ? -std::log(std::max(p, 1e-15))
                                   : -std::log(std::max(1.0 - p, 1e-15));
        }
        model.train_loss.push_back(loss / data.n);

        TreeBuilder tb(data, cfg, order, grad, hess);
        int root = tb.new_node();
        double gsum = std::accumulate(grad.begin(), grad.end(), 0.0);
        double hsum = std::accumulate(hess.begin(), hess.end(), 0.0);
        tb.build(root, 0, data.n, gsum, hsum);

        for (int i = 0; i < data.n; ++i) score[i] += cfg.learning_rate * tb.tree.value[tb.node_of[i]];
        model.trees.push_back(std::move(tb.tree));
    }
    return model;
}

void save_gbt(const GbtModel& m, const std::string& path) {
    ordered_json j;
    j["schema_version"] = 1;
    j["kind"] = "gbt";
    j["init_logodds"] = m.init_logodds;
    j["learning_rate"] = m.learning_rate;
    ordered_json trees = ordered_json::array();
    for (const auto& t : m.trees) {
        ordered_json tj;
        tj["feature"] = t.feature;
        tj["threshold"] = t.threshold;
        tj["left"] = t.left;
        tj["right"] = t.right;
        tj["value"] = t.value;
        trees.push_back(std::move(tj));
    }
    j["trees"] = std::move(trees);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot open for writing: " + path);
    out << j.dump() << "\n";
}

GbtModel load_gbt(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open: " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(path + ": " + e.what());
    }
    if (j.value("kind", std::string()) != "gbt") throw SchemaError("not a gbt file: " + path);
    GbtModel m;
    m.init_logodds = j["init_logodds"].get<double>();
    m.learning_rate = j["learning_rate"].get<double>();
    for (const auto& tj : j["trees"]) {
        GbtTree t;
        t.feature = tj["feature"].get<std::vector<int>>();
        t.threshold = tj["threshold"].get<std::vector<double>>();
        t.left = tj["left"].get<std::vector<int>>();
        t.right = tj["right"].get<std::vector<int>>();
        t.value = tj["value"].get<std::vector<double>>();
        m.trees.push_back(std::move(t));
    }
    return m;
}

}  // namespace midas
