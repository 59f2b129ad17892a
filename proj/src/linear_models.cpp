#include "midas/linear_models.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

using ordered_json = nlohmann::ordered_json;

namespace midas {

static double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

HandednessModel handedness_fit(const std::vector<double>& mean_u,
                               const std::vector<uint8_t>& has_u, const std::vector<int>& labels) {
    if (mean_u.size() != labels.size() || mean_u.size() != has_u.size())
        throw FitError("handedness_fit: size mismatch");
    int usable = 0, pos = 0;
    for (size_t i = 0; i < labels.size(); ++i)
        if (has_u[i]) {
            ++usable;
            pos += labels[i];
        }
    if (usable == 0) throw FitError("handedness_fit: no trials with on-target samples");
    if (pos == 0 || pos == usable) throw FitError("handedness_fit: single-class training data");

    HandednessModel best;
    best.train_acc = -1.0;
    for (int s = 0; s <= 100; ++s) {
        double theta = s * 0.01;
        int correct = 0;
        for (size_t i = 0; i < labels.size(); ++i) {
            if (!has_u[i]) continue;
            int pred = mean_u[i] > theta ? 1 : 0;
            if (pred == labels[i]) ++correct;
        }
        double acc = static_cast<double>(correct) / usable;
        if (acc > best.train_acc) {
            best.train_acc = acc;
            best.theta = theta;
        }
    }
    return best;
}

int handedness_predict(const HandednessModel& m, double mean_u, bool has_u) {
    if (!has_u) return 0;
    return mean_u > m.theta ? 1 : 0;
}

double logreg_loss(const FlatData& data, const std::vector<double>& w, double b, double l2) {
    double loss = 0.0;
    for (int i = 0; i < data.n; ++i) {
        double z = b;
        const double* xi = data.row(i);
        for (int j = 0; j < data.d; ++j) z += xi[j] * w[j];
        // log(1 + exp(-yz)) written stably for either sign
        double yz = data.y[i] == 1 ? z : -z;
        loss += yz > 0 ? std::log1p(std::exp(-yz)) : -yz + std::log1p(std::exp(yz));
    }
    loss /= data.n;
    double reg = 0.0;
    for (double v : w) reg += v * v;
    return loss + 0.5 * l2 * reg;
}

void logreg_gradient(const FlatData& data, const std::vector<double>& w, double b, double l2,
                     std::vector<double>& gw, double& gb) {
    gw.assign(data.d, 0.0);
    gb = 0.0;
    for (int i = 0; i < data.n; ++i) {
        double z = b;
        const double* xi = data.row(i);
        for (int j = 0; j < data.d; ++j) z += xi[j] * w[j];
        double g = sigmoid(z) - data.y[i];
        for (int j = 0; j < data.d; ++j) gw[j] += xi[j] * g;
        gb += g;
    }
    for (int j = 0; j < data.d; ++j) gw[j] = gw[j] / data.n + l2 * w[j];
    gb /= data.n;
}

LinearModel logreg_fit(const FlatData& data, double l2, int epochs) {
    if (data.n == 0 || data.d == 0) throw FitError("logreg_fit: empty data");
    // Lipschitz bound of the logistic loss gradient: 0.25 * E[|x|^2 + 1]
    double L = 0.0;
    for (int i = 0; i < data.n; ++i) {
        const double* xi = data.row(i);
        double s = 1.0;
        for (int j = 0; j < data.d; ++j) s += xi[j] * xi[j];
        L += s;
    }
    L = 0.25 * L / data.n + l2;
    double lr = 1.0 / L;

    LinearModel m;
    m.w.assign(data.d, 0.0);
    std::vector<double> gw;
    double gb;
    for (int e = 0; e < epochs; ++e) {
        logreg_gradient(data, m.w, m.b, l2, gw, gb);
        for (int j = 0; j < data.d; ++j) m.w[j] -= lr * gw[j];
        m.b -= lr * gb;
    }
    return m;
}

int logreg_predict(const LinearModel& m, const double* x, int d) {
    double z = m.b;
    for (int j = 0; j < d; ++j) z += x[j] * m.w[j];
    return z > 0.0 ? 1 : 0;
}

LinearModel svm_fit(const FlatData& data, double C, int epochs) {
    if (data.n == 0 || data.d == 0) throw FitError("svm_fit: empty data");
    double lam = 1.0 / (C * data.n);
    LinearModel m;
    m.w.assign(data.d, 0.0);
    std::vector<double> gw(data.d);
    for (int t = 0; t < epochs; ++t) {
        double lr = 1.0 / (lam * (t + 1)) / data.n;
        std::fill(gw.begin(), gw.end(), 0.0);
        double viol_sum = 0.0;
        int viol_count = 0;
        for (int i = 0; i < data.n; ++i) {
            double yi = data.y[i] == 1 ? 1.0 : -1.0;
            const double* xi = data.row(i);
            double z = m.b;
            for (int j = 0; j < data.d; ++j) z += xi[j] * m.w[j];
            if (yi * z < 1.0) {
                for (int j = 0; j < data.d; ++j) gw[j] -= xi[j] * yi;
                viol_sum += yi;
                ++viol_count;
            }
        }
        double gb = viol_count > 0 ? -viol_sum / viol_count : 0.0;
        for (int j = 0; j < data.d; ++j) {
            double g = lam * m.w[j] + gw[j] / data.n;
            m.w[j] -= lr * g;
        }
        m.b -= lr * gb;
    }
    return m;
}

int svm_predict(const LinearModel& m, const double* x, int d) {
    double z = m.b;
    for (int j = 0; j < d; ++j) z += x[j] * m.w[j];
    return z > 0.0 ? 1 : 0;
}

void save_linear(const LinearModel& m, const std::string& kind, const std::string& path) {
    ordered_json j;
    j["schema_version"] = 1;
    j["kind"] = kind;
    j["w"] = m.w;
    j["b"] = m.b;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot open for writing: " + path);
    out << j.dump() << "\n";
}

LinearModel load_linear(const std::string& path, std::string& kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open: " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(path + ": " + e.what());
    }
    kind = j.value("kind", std::string());
    LinearModel m;
    m.w = j["w"].get<std::vector<double>>();
    m.b = j["b"].get<double>();
    return m;
}

}  // namespace midas
