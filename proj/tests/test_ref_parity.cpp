#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <vector>

#include "doctest.h"
#include "midas/kernels.hpp"
#include "midas/ref_kernels.hpp"
#include "midas/rng.hpp"

using namespace midas;

namespace {

template <typename Real>
std::vector<Real> randu(Rng& rng, size_t n) {
    std::vector<Real> v(n);
    for (auto& x : v) x = (Real)rng.normal(0.0, 1.0);
    return v;
}

}  // namespace

// The tuned kernels keep the same summation order as the reference loops, so
// equality is bitwise, not approximate.
TEST_CASE_TEMPLATE("gemm_acc matches the reference bitwise", Real, float, double) {
    Rng rng(101);
    const int shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {12, 32, 128}, {40, 13, 1}, {1, 64, 33},
                             {17, 1, 9}, {128, 40, 64}};
    for (const auto& s : shapes) {
        const int m = s[0], k = s[1], n = s[2];
        const auto a = randu<Real>(rng, (size_t)m * k);
        const auto b = randu<Real>(rng, (size_t)k * n);
        auto c1 = randu<Real>(rng, (size_t)m * n);
        auto c2 = c1;
        kern::gemm_acc(a.data(), b.data(), c1.data(), m, k, n);
        ref::gemm_acc(a.data(), b.data(), c2.data(), m, k, n);
        CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(Real)) == 0);
    }
}

TEST_CASE_TEMPLATE("gemm_atb matches the reference bitwise", Real, float, double) {
    Rng rng(102);
    const int shapes[][3] = {{1, 1, 1}, {4, 9, 6}, {64, 4800, 128}, {2, 33, 1}, {31, 7, 31}};
    for (const auto& s : shapes) {
        const int m = s[0], k = s[1], n = s[2];
        const auto a = randu<Real>(rng, (size_t)k * m);
        const auto b = randu<Real>(rng, (size_t)k * n);
        auto c1 = randu<Real>(rng, (size_t)m * n);
        auto c2 = c1;
        kern::gemm_atb(a.data(), b.data(), c1.data(), m, k, n);
        ref::gemm_atb(a.data(), b.data(), c2.data(), m, k, n);
        CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(Real)) == 0);
    }
}

TEST_CASE("gemm_acc accumulates into existing values") {
    const double a[2] = {2.0, 3.0};   // 1x2
    const double b[2] = {10.0, 100.0};  // 2x1
    double c[1] = {5.0};
    kern::gemm_acc(a, b, c, 1, 2, 1);
    CHECK(c[0] == doctest::Approx(5.0 + 2.0 * 10.0 + 3.0 * 100.0));
}

TEST_CASE("gemm_atb computes the transposed product") {
    // A is 3x2 (k x m), B is 3x2 (k x n): C = A^T B is 2x2
    const double a[6] = {1, 2, 3, 4, 5, 6};
    const double b[6] = {7, 8, 9, 10, 11, 12};
    double c[4] = {0, 0, 0, 0};
    kern::gemm_atb(a, b, c, 2, 3, 2);
    CHECK(c[0] == doctest::Approx(1 * 7 + 3 * 9 + 5 * 11));
    CHECK(c[1] == doctest::Approx(1 * 8 + 3 * 10 + 5 * 12));
    CHECK(c[2] == doctest::Approx(2 * 7 + 4 * 9 + 6 * 11));
    CHECK(c[3] == doctest::Approx(2 * 8 + 4 * 10 + 6 * 12));
}

TEST_CASE("transpose round-trips") {
    Rng rng(103);
    const auto m = randu<double>(rng, 7 * 13);
    std::vector<double> t(13 * 7), back(7 * 13);
    kern::transpose(m.data(), t.data(), 7, 13);
    kern::transpose(t.data(), back.data(), 13, 7);
    CHECK(std::memcmp(m.data(), back.data(), m.size() * sizeof(double)) == 0);
    CHECK(t[0 * 7 + 3] == m[3 * 13 + 0]);
}

TEST_CASE("lstm cell reference matches a hand computation") {
    // H=1: all gates see g = wx*x + wh*h + b with sigmoid/tanh activation
    const std::vector<double> wx = {0.5, -0.3, 0.8, 0.2};  // i f g o blocks
    const std::vector<double> wh = {0.1, 0.4, -0.2, 0.3};
    const std::vector<double> bias = {0.0, 1.0, 0.0, -0.5};
    const std::vector<double> x = {0.7}, hprev = {-0.4}, cprev = {0.6};
    std::vector<double> h(1), c(1);
    ref::lstm_cell(x, hprev, cprev, wx, wh, bias, 1, 1, h, c);

    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const double gi = sig(0.5 * x[0] + 0.1 * hprev[0]);
    const double gf = sig(-0.3 * x[0] + 0.4 * hprev[0] + 1.0);
    const double gg = std::tanh(0.8 * x[0] + (-0.2) * hprev[0]);
    const double go = sig(0.2 * x[0] + 0.3 * hprev[0] - 0.5);
    const double ce = gf * cprev[0] + gi * gg;
    CHECK(c[0] == doctest::Approx(ce).epsilon(1e-14));
    CHECK(h[0] == doctest::Approx(go * std::tanh(ce)).epsilon(1e-14));
}

TEST_CASE("masked softmax normalizes over the unmasked slots only") {
    const std::vector<double> e = {1.0, 2.0, 3.0, 4.0};
    const std::vector<uint8_t> m = {1, 0, 1, 1};
    const std::vector<double> w = ref::masked_softmax(e, m);
    CHECK(w[1] == 0.0);
    CHECK(w[0] + w[2] + w[3] == doctest::Approx(1.0).epsilon(1e-14));
    const double z = std::exp(1.0) + std::exp(3.0) + std::exp(4.0);
    CHECK(w[0] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-14));
    CHECK(w[3] == doctest::Approx(std::exp(4.0) / z).epsilon(1e-14));

    // shift invariance: adding a constant to scores must not change weights
    const std::vector<double> e2 = {1001.0, 1002.0, 1003.0, 1004.0};
    const std::vector<double> w2 = ref::masked_softmax(e2, m);
    for (int i = 0; i < 4; ++i) CHECK(w2[i] == doctest::Approx(w[i]).epsilon(1e-12));

    CHECK_THROWS_AS(ref::masked_softmax({1.0}, {0}), std::invalid_argument);
    CHECK_THROWS_AS(ref::masked_softmax({1.0, 2.0}, {1}), std::invalid_argument);
}
