#include "midas/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "midas/rng.hpp"

using ordered_json = nlohmann::ordered_json;

namespace midas {

static constexpr double kLog2Pi = 1.8378770664093454835606594728112;
static constexpr double kCovReg = 1e-6;

static double log_normal2(const Point2& p, const Point2& mu, const std::array<double, 3>& cov) {
    double a = cov[0], b = cov[1], c = cov[2];
    double det = a * c - b * b;
    double dx = p.x - mu.x, dy = p.y - mu.y;
    double quad = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
    return -kLog2Pi - 0.5 * std::log(det) - 0.5 * quad;
}

double GmmModel::log_density(const Point2& p) const {
    double m = -std::numeric_limits<double>::infinity();
    std::vector<double> lp(k);
    for (int j = 0; j < k; ++j) {
        lp[j] = std::log(weights[j]) + log_normal2(p, means[j], covariances[j]);
        m = std::max(m, lp[j]);
    }
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += std::exp(lp[j] - m);
    return m + std::log(s);
}

static std::array<double, 3> sample_cov(const std::vector<Point2>& pts) {
    double mx = 0.0, my = 0.0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    double n = static_cast<double>(pts.size());
    mx /= n;
    my /= n;
    double xx = 0.0, xy = 0.0, yy = 0.0;
    for (const auto& p : pts) {
        double dx = p.x - mx, dy = p.y - my;
        xx += dx * dx;
        xy += dx * dy;
        yy += dy * dy;
    }
    return {xx / n + kCovReg, xy / n, yy / n + kCovReg};
}

// k-means++ style seeding: next mean drawn with probability proportional to
// the squared distance from the nearest already-chosen mean
static std::vector<Point2> seed_means(const std::vector<Point2>& pts, int k, Rng& rng) {
    std::vector<Point2> means;
    means.push_back(pts[static_cast<size_t>(rng.integers(0, static_cast<int64_t>(pts.size())))]);
    std::vector<double> d2(pts.size());
    while (static_cast<int>(means.size()) < k) {
        double total = 0.0;
        for (size_t i = 0; i < pts.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& m : means) {
                double dx = pts[i].x - m.x, dy = pts[i].y - m.y;
                best = std::min(best, dx * dx + dy * dy);
            }
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            means.push_back(pts[static_cast<size_t>(rng.integers(0, static_cast<int64_t>(pts.size())))]);
            continue;
        }
        double r = rng.random() * total;
        double acc = 0.0;
        size_t pick = pts.size() - 1;
        for (size_t i = 0; i < pts.size(); ++i) {
            acc += d2[i];
            if (r < acc) {
                pick = i;
                break;
            }
        }
        means.push_back(pts[pick]);
    }
    return means;
}

GmmModel em_fit(const std::vector<Point2>& points, int k, uint64_t seed, int max_iter,
                double tol) {
    size_t n = points.size();
    if (static_cast<int>(n) < k)
        throw InsufficientData("em_fit: " + std::to_string(n) + " points for k=" +
                               std::to_string(k));
    for (const auto& p : points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw NumericError("em_fit: non-finite input point");

    Rng rng(seed);
    GmmModel m;
    m.k = k;
    m.weights.assign(k, 1.0 / k);
    m.means = seed_means(points, k, rng);
    m.covariances.assign(k, sample_cov(points));

    std::vector<double> resp(n * static_cast<size_t>(k));
    std::vector<double> lp(k);
    bool reseeded = false;
    GmmModel prev = m;
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int it = 0; it < max_iter; ++it) {
        // E-step with log-sum-exp, which also evaluates the current LL
        double ll = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < k; ++j) {
                lp[j] = std::log(m.weights[j]) + log_normal2(points[i], m.means[j], m.covariances[j]);
                mx = std::max(mx, lp[j]);
            }
            double s = 0.0;
            for (int j = 0; j < k; ++j) {
                lp[j] = std::exp(lp[j] - mx);
                s += lp[j];
            }
            for (int j = 0; j < k; ++j) resp[i * k + j] = lp[j] / s;
            ll += mx + std::log(s);
        }

        if (ll < prev_ll) {
            // the covariance floor can nudge a converged fit slightly
            // downhill; keep the better previous iterate
            m = prev;
            m.log_likelihood = prev_ll;
            return m;
        }
        m.ll_trace.push_back(ll);
        m.log_likelihood = ll;
        if (ll - prev_ll < tol && it > 0) return m;
        prev = m;
        prev_ll = ll;

        // M-step
        for (int j = 0; j < k; ++j) {
            double nk = 0.0, sx = 0.0, sy = 0.0;
            for (size_t i = 0; i < n; ++i) {
                double r = resp[i * k + j];
                nk += r;
                sx += r * points[i].x;
                sy += r * points[i].y;
            }
            double w = nk / static_cast<double>(n);
            if (w < 1e-8) {
                if (reseeded)
                    throw NumericError("em_fit: component collapsed twice (k=" +
                                       std::to_string(k) + ")");
                reseeded = true;
                m.means[j] = points[static_cast<size_t>(
                    rng.integers(0, static_cast<int64_t>(n)))];
                m.covariances[j] = sample_cov(points);
                m.weights[j] = 1.0 / k;
                double tw = 0.0;
                for (double x : m.weights) tw += x;
                for (double& x : m.weights) x /= tw;
                continue;
            }
            m.weights[j] = w;
            m.means[j] = {sx / nk, sy / nk};
            double xx = 0.0, xy = 0.0, yy = 0.0;
            for (size_t i = 0; i < n; ++i) {
                double r = resp[i * k + j];
                double dx = points[i].x - m.means[j].x;
                double dy = points[i].y - m.means[j].y;
                xx += r * dx * dx;
                xy += r * dx * dy;
                yy += r * dy * dy;
            }
            m.covariances[j] = {xx / nk + kCovReg, xy / nk, yy / nk + kCovReg};
        }
    }
    return m;
}

double bic(const GmmModel& model, const std::vector<Point2>& points) {
    // free parameters: (k-1) weights + 2k means + 3k covariance entries
    double p = 6.0 * model.k - 1.0;
    return p * std::log(static_cast<double>(points.size())) - 2.0 * model.log_likelihood;
}

SelectKResult select_k(const std::vector<Point2>& points, int k_min, int k_max, int seeds_per_k,
                       uint64_t seed) {
    SelectKResult res;
    res.bic_by_k.assign(k_max, std::numeric_limits<double>::quiet_NaN());
    double best_bic = std::numeric_limits<double>::infinity();
    for (int k = k_min; k <= k_max; ++k) {
        if (static_cast<int>(points.size()) < k) continue;
        GmmModel best;
        bool have = false;
        for (int s = 0; s < seeds_per_k; ++s) {
            GmmModel m;
            try {
                m = em_fit(points, k, derive_seed(seed, static_cast<uint64_t>(k) * 1000 + s));
            } catch (const NumericError&) {
                continue;
            }
            if (!have || m.log_likelihood > best.log_likelihood) {
                best = std::move(m);
                have = true;
            }
        }
        if (!have) continue;
        double b = bic(best, points);
        res.bic_by_k[k - 1] = b;
        // strict comparison keeps the smaller k on ties
        if (b < best_bic) {
            best_bic = b;
            res.k = k;
            res.model = std::move(best);
        }
    }
    if (res.k == 0) throw InsufficientData("select_k: no fittable k in range");
    return res;
}

Intent gmm_classify(const std::vector<Point2>& points, const GmmModel& inspection,
                    const GmmModel& manipulation) {
    if (points.empty()) throw NoEvidence("gmm_classify: no on-target points");
    double li = 0.0, lm = 0.0;
    for (const auto& p : points) {
        li += inspection.log_density(p);
        lm += manipulation.log_density(p);
    }
    return lm > li ? Intent::manipulation : Intent::inspection;
}

static ordered_json gmm_to_json(const GmmModel& m) {
    ordered_json j;
    j["k"] = m.k;
    j["weights"] = m.weights;
    ordered_json means = ordered_json::array();
    for (const auto& mu : m.means) means.push_back({mu.x, mu.y});
    j["means"] = std::move(means);
    ordered_json covs = ordered_json::array();
    for (const auto& c : m.covariances) covs.push_back({c[0], c[1], c[2]});
    j["covariances"] = std::move(covs);
    j["log_likelihood"] = m.log_likelihood;
    return j;
}

static GmmModel gmm_from_json(const ordered_json& j) {
    GmmModel m;
    m.k = j["k"].get<int>();
    m.weights = j["weights"].get<std::vector<double>>();
    for (const auto& mu : j["means"]) m.means.push_back({mu[0].get<double>(), mu[1].get<double>()});
    for (const auto& c : j["covariances"])
        m.covariances.push_back({c[0].get<double>(), c[1].get<double>(), c[2].get<double>()});
    m.log_likelihood = j["log_likelihood"].get<double>();
    return m;
}

void save_gmm_pair(const GmmModel& inspection, const GmmModel& manipulation,
                   const std::string& path) {
    ordered_json j;
    j["schema_version"] = 1;
    j["kind"] = "gmm_pair";
    j["inspection"] = gmm_to_json(inspection);
    j["manipulation"] = gmm_to_json(manipulation);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

void load_gmm_pair(const std::string& path, GmmModel& inspection, GmmModel& manipulation) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open: " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(path + ": " + e.what());
    }
    if (j.value("kind", std::string()) != "gmm_pair") throw SchemaError("not a gmm file: " + path);
    inspection = gmm_from_json(j["inspection"]);
    manipulation = gmm_from_json(j["manipulation"]);
}

}  // namespace midas
