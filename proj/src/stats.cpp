#include "midas/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace midas {

double mean(const std::vector<double>& x) {
    if (x.empty()) throw std::invalid_argument("mean: empty");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double variance_pop(const std::vector<double>& x) {
    double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

double stddev_pop(const std::vector<double>& x) { return std::sqrt(variance_pop(x)); }

double percentile(std::vector<double> x, double q) {
    if (x.empty()) throw std::invalid_argument("percentile: empty");
    std::sort(x.begin(), x.end());
    double pos = q / 100.0 * static_cast<double>(x.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(pos));
    size_t hi = static_cast<size_t>(std::ceil(pos));
    double frac = pos - static_cast<double>(lo);
    return x[lo] + frac * (x[hi] - x[lo]);
}

// Asymptotic series after shifting the argument above 6 with the recurrence
// psi(x) = psi(x+1) - 1/x.
double digamma(double x) {
    double r = 0.0;
    while (x < 6.0) {
        r -= 1.0 / x;
        x += 1.0;
    }
    double f = 1.0 / (x * x);
    r += std::log(x) - 0.5 / x
         - f * (1.0 / 12.0 - f * (1.0 / 120.0 - f * (1.0 / 252.0 - f * (1.0 / 240.0 - f / 132.0))));
    return r;
}

double trigamma(double x) {
    double r = 0.0;
    while (x < 6.0) {
        r += 1.0 / (x * x);
        x += 1.0;
    }
    double f = 1.0 / (x * x);
    r += 1.0 / x + 0.5 * f
         + f / x * (1.0 / 6.0 - f * (1.0 / 30.0 - f * (1.0 / 42.0 - f / 30.0)));
    return r;
}

GammaFit gamma_mle(const std::vector<double>& x) {
    if (x.size() < 2) throw std::invalid_argument("gamma_mle: need >= 2 points");
    double m = 0.0, lm = 0.0;
    for (double v : x) {
        if (!(v > 0.0)) throw std::invalid_argument("gamma_mle: nonpositive sample");
        m += v;
        lm += std::log(v);
    }
    m /= static_cast<double>(x.size());
    lm /= static_cast<double>(x.size());
    double s = std::log(m) - lm;
    if (s <= 0.0) throw std::invalid_argument("gamma_mle: degenerate sample");
    double k = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
    for (int it = 0; it < 100; ++it) {
        double g = std::log(k) - digamma(k) - s;
        double gp = 1.0 / k - trigamma(k);
        double step = g / gp;
        k -= step;
        if (k <= 0.0) k = 1e-8;
        if (std::fabs(step) < 1e-12 * k) break;
    }
    return {k, m / k};
}

// Series for x < a+1, Lentz continued fraction otherwise.
double gammap(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gammap: bad arguments");
    if (x == 0.0) return 0.0;
    double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    double q = std::exp(-x + a * std::log(x) - lg) * h;
    return 1.0 - q;
}

double gamma_cdf(double x, double shape, double scale) {
    if (x <= 0.0) return 0.0;
    return gammap(shape, x / scale);
}

double ks_gamma_distance(std::vector<double> x, double shape, double scale) {
    if (x.empty()) throw std::invalid_argument("ks_gamma_distance: empty");
    std::sort(x.begin(), x.end());
    double n = static_cast<double>(x.size());
    double d = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double f = gamma_cdf(x[i], shape, scale);
        double hi = (static_cast<double>(i) + 1.0) / n - f;
        double lo = f - static_cast<double>(i) / n;
        d = std::max(d, std::max(hi, lo));
    }
    return d;
}

double kolmogorov_q(double lambda) {
    if (lambda < 1e-10) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        double term = std::exp(-2.0 * lambda * lambda * static_cast<double>(j) * static_cast<double>(j));
        sum += sign * term;
        if (term < 1e-12) break;
        sign = -sign;
    }
    return std::min(1.0, std::max(0.0, 2.0 * sum));
}

KsResult ks_2samp(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_2samp: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double na = static_cast<double>(a.size());
    double nb = static_cast<double>(b.size());
    size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    double en = std::sqrt(na * nb / (na + nb));
    KsResult r;
    r.d = d;
    r.p = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
    return r;
}

}  // namespace midas
