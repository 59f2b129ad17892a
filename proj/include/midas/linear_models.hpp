#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "midas/types.hpp"

namespace midas {

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Row-major feature matrix with labels (0 = inspection, 1 = manipulation)
struct FlatData {
    std::vector<double> x;
    int n = 0;
    int d = 0;
    std::vector<int> y;

    double at(int i, int j) const { return x[static_cast<size_t>(i) * d + j]; }
    const double* row(int i) const { return x.data() + static_cast<size_t>(i) * d; }
};

struct HandednessModel {
    double theta = 0.0;
    double train_acc = 0.0;
};

// Sweeps theta over {0.00, 0.01, ..., 1.00}; rule mean_u > theta ->
// manipulation. Trials without on-target samples are skipped in the sweep and
// predicted as inspection.
HandednessModel handedness_fit(const std::vector<double>& mean_u,
                               const std::vector<uint8_t>& has_u, const std::vector<int>& labels);
int handedness_predict(const HandednessModel& m, double mean_u, bool has_u);

struct LinearModel {
    std::vector<double> w;
    double b = 0.0;
};

double logreg_loss(const FlatData& data, const std::vector<double>& w, double b, double l2);
void logreg_gradient(const FlatData& data, const std::vector<double>& w, double b, double l2,
                     std::vector<double>& gw, double& gb);

// Full-batch gradient descent with a fixed step 1/L, L estimated from the
// data's smoothness bound; the intercept is unregularized.
LinearModel logreg_fit(const FlatData& data, double l2 = 1e-4, int epochs = 200);
int logreg_predict(const LinearModel& m, const double* x, int d);

// Primal subgradient descent on hinge loss with 1/(lambda t) step decay
LinearModel svm_fit(const FlatData& data, double C = 1.0, int epochs = 200);
int svm_predict(const LinearModel& m, const double* x, int d);

void save_linear(const LinearModel& m, const std::string& kind, const std::string& path);
LinearModel load_linear(const std::string& path, std::string& kind);

}  // namespace midas
