#pragma once

#include <string>
#include <vector>

#include "midas/linear_models.hpp"
#include "midas/types.hpp"

namespace midas {

struct GbtConfig {
    int n_trees = 200;
    int max_depth = 3;
    double learning_rate = 0.1;
    int min_leaf = 1;
};

// Flattened node arrays; feature = -1 marks a leaf holding value
struct GbtTree {
    std::vector<int> feature;
    std::vector<double> threshold;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<double> value;

    double predict(const double* x) const;
};

struct GbtModel {
    double init_logodds = 0.0;
    double learning_rate = 0.1;
    std::vector<GbtTree> trees;
    std::vector<double> train_loss;  // per boosting round

    double decision(const double* x) const;  // log-odds
    int predict(const double* x) const;
};

// Stage-wise boosting on logistic loss: trees fit the residual y - p by
// least-squares splits, leaves take a Newton step.
GbtModel gbt_fit(const FlatData& data, const GbtConfig& cfg = {});

void save_gbt(const GbtModel& m, const std::string& path);
GbtModel load_gbt(const std::string& path);

}  // namespace midas
