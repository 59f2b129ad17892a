#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "midas/types.hpp"

namespace midas {

struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoEvidence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct GmmModel {
    int k = 0;
    std::vector<double> weights;
    std::vector<Point2> means;
    std::vector<std::array<double, 3>> covariances;  // (xx, xy, yy), symmetric 2x2
    double log_likelihood = 0.0;
    std::vector<double> ll_trace;  // per-iteration log-likelihood during the fit

    double log_density(const Point2& p) const;
};

GmmModel em_fit(const std::vector<Point2>& points, int k, uint64_t seed, int max_iter = 200,
                double tol = 1e-6);

double bic(const GmmModel& model, const std::vector<Point2>& points);

struct SelectKResult {
    int k = 0;
    GmmModel model;
    std::vector<double> bic_by_k;  // indexed by k-1, NaN where skipped
};

SelectKResult select_k(const std::vector<Point2>& points, int k_min = 1, int k_max = 8,
                       int seeds_per_k = 5, uint64_t seed = 0);

// Sum of per-point log densities under each model; ties go to inspection.
// Zero points is NoEvidence: the caller decides the fallback.
Intent gmm_classify(const std::vector<Point2>& points, const GmmModel& inspection,
                    const GmmModel& manipulation);

void save_gmm_pair(const GmmModel& inspection, const GmmModel& manipulation,
                   const std::string& path);
void load_gmm_pair(const std::string& path, GmmModel& inspection, GmmModel& manipulation);

}  // namespace midas
