#include "midas/ref_kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace midas::ref {

static double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void lstm_cell(const std::vector<double>& x, const std::vector<double>& h_prev,
               const std::vector<double>& c_prev, const std::vector<double>& wx,
               const std::vector<double>& wh, const std::vector<double>& b,
               int in_dim, int hidden, std::vector<double>& h,
               std::vector<double>& c) {
    const int g4 = 4 * hidden;
    std::vector<double> gates(b);
    for (int p = 0; p < in_dim; ++p)
        for (int j = 0; j < g4; ++j) gates[j] += x[p] * wx[p * g4 + j];
    for (int p = 0; p < hidden; ++p)
        for (int j = 0; j < g4; ++j) gates[j] += h_prev[p] * wh[p * g4 + j];
    h.assign(hidden, 0.0);
    c.assign(hidden, 0.0);
    for (int j = 0; j < hidden; ++j) {
        const double gi = sigmoid(gates[j]);
        const double gf = sigmoid(gates[hidden + j]);
        const double gg = std::tanh(gates[2 * hidden + j]);
        const double go = sigmoid(gates[3 * hidden + j]);
        c[j] = gf * c_prev[j] + gi * gg;
        h[j] = go * std::tanh(c[j]);
    }
}

std::vector<double> masked_softmax(const std::vector<double>& scores,
                                   const std::vector<uint8_t>& mask) {
    if (scores.size() != mask.size())
        throw std::invalid_argument("masked_softmax: size mismatch");
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < scores.size(); ++i)
        if (mask[i] && scores[i] > mx) mx = scores[i];
    if (!std::isfinite(mx))
        throw std::invalid_argument("masked_softmax: all entries masked");
    std::vector<double> out(scores.size(), 0.0);
    double denom = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (!mask[i]) continue;
        out[i] = std::exp(scores[i] - mx);
        denom += out[i];
    }
    for (double& v : out) v /= denom;
    return out;
}

}  // namespace midas::ref
