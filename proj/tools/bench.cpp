// Throughput comparison between the tuned kernels and the serial reference
// versions, at the matrix shapes the recurrent model actually uses, plus an
// end-to-end forward/backward timing. The two kernel sets keep identical
// summation order, so outputs are compared bitwise here as a safety net.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "midas/kernels.hpp"
#include "midas/nn.hpp"
#include "midas/parallel.hpp"
#include "midas/ref_kernels.hpp"
#include "midas/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void fill(midas::Rng& rng, std::vector<float>& v) {
    for (float& x : v) x = (float)rng.normal(0.0, 1.0);
}

struct Shape {
    const char* label;
    int m, k, n;
};

// repeats scaled so every row takes a comparable wall time
void bench_gemm(const Shape& s, int reps) {
    midas::Rng rng(17);
    std::vector<float> a((size_t)s.m * s.k), b((size_t)s.k * s.n);
    std::vector<float> c_tuned((size_t)s.m * s.n, 0.0f), c_ref((size_t)s.m * s.n, 0.0f);
    fill(rng, a);
    fill(rng, b);

    const double flops = 2.0 * s.m * s.k * s.n * reps;
    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
        midas::kern::gemm_acc(a.data(), b.data(), c_tuned.data(), s.m, s.k, s.n);
    const double dt_tuned = seconds_since(t0);

    t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
        midas::ref::gemm_acc(a.data(), b.data(), c_ref.data(), s.m, s.k, s.n);
    const double dt_ref = seconds_since(t0);

    const bool same =
        std::memcmp(c_tuned.data(), c_ref.data(), c_tuned.size() * sizeof(float)) == 0;
    std::printf("%-28s %4dx%4dx%4d  tuned %7.2f GF/s  ref %7.2f GF/s  x%5.2f  %s\n",
                s.label, s.m, s.k, s.n, flops / dt_tuned / 1e9, flops / dt_ref / 1e9,
                dt_ref / dt_tuned, same ? "bitwise equal" : "MISMATCH");
}

void bench_step(bool quick) {
    midas::MidasConfig cfg;
    cfg.input_channels = 8;
    const int T = 400, B = cfg.batch_size;
    midas::MidasNet net(cfg, 5);
    midas::Rng rng(23);
    std::vector<float> x((size_t)T * B * cfg.input_channels);
    fill(rng, x);
    std::vector<uint8_t> mask((size_t)T * B, 1);
    std::vector<float> onehot((size_t)B * 2, 0.0f);
    for (int i = 0; i < B; ++i) onehot[(size_t)i * 2 + (i & 1)] = 1.0f;
    std::vector<float> grad(net.param_count());

    net.loss_and_grad(x.data(), mask.data(), onehot.data(), T, B, grad);  // warm up
    const int reps = quick ? 3 : 10;
    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
        net.loss_and_grad(x.data(), mask.data(), onehot.data(), T, B, grad);
    const double dt = seconds_since(t0) / reps;
    std::printf("forward+backward  T=%d B=%d H=%d C=%d: %.1f ms/batch (%.1f batches/s)\n",
                T, B, cfg.hidden, cfg.input_channels, dt * 1e3, 1.0 / dt);
}

}  // namespace

int main(int argc, char** argv) {
    bool quick = false;
    for (int i = 1; i < argc; ++i)
        if (std::string(argv[i]) == "--quick") quick = true;

    std::printf("threads: %d\n\n", midas::max_threads());
    const int scale = quick ? 1 : 8;
    const Shape shapes[] = {
        {"input projection", 400 * 12, 8, 4 * 32},
        {"recurrent step", 12, 32, 4 * 32},
        {"attention projection", 400 * 12, 64, 64},
        {"head layer", 12, 64, 32},
    };
    for (const Shape& s : shapes) {
        const double work = 2.0 * s.m * s.k * s.n;
        const int reps = std::max(1, (int)(2e8 * scale / work));
        bench_gemm(s, reps);
    }
    std::printf("\n");
    bench_step(quick);
    return 0;
}
