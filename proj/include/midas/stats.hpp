#pragma once

#include <cstddef>
#include <vector>

namespace midas {

double mean(const std::vector<double>& x);
double variance_pop(const std::vector<double>& x);
double stddev_pop(const std::vector<double>& x);

// numpy-style linear interpolation between order statistics, q in [0, 100]
double percentile(std::vector<double> x, double q);

double digamma(double x);
double trigamma(double x);

struct GammaFit {
    double shape = 0.0;
    double scale = 0.0;
};

// Maximum-likelihood gamma fit (location fixed at zero), Newton iteration on
// the shape from the Greenwood-Durand starting point.
GammaFit gamma_mle(const std::vector<double>& x);

// Regularized lower incomplete gamma P(a, x)
double gammap(double a, double x);

double gamma_cdf(double x, double shape, double scale);

// One-sample KS distance of the sample against Gamma(shape, scale)
double ks_gamma_distance(std::vector<double> x, double shape, double scale);

struct KsResult {
    double d = 0.0;
    double p = 1.0;
};

// Two-sample Kolmogorov-Smirnov with the asymptotic p-value
KsResult ks_2samp(std::vector<double> a, std::vector<double> b);

// Survival function of the Kolmogorov distribution
double kolmogorov_q(double lambda);

}  // namespace midas
