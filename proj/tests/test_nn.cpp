#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "midas/nn.hpp"
#include "midas/ref_kernels.hpp"
#include "midas/rng.hpp"
#include "midas/types.hpp"

using namespace midas;

namespace {

MidasConfig tiny_config() {
    MidasConfig c;
    c.input_channels = 2;
    c.hidden = 3;
    c.layers = 2;
    c.attn_dim = 4;
    c.head1 = 5;
    c.head2 = 4;
    return c;
}

// x ~ N(0,1) on unmasked steps, zero elsewhere; labels alternate.
SeqData random_seq(int n, int T, int C, uint64_t seed) {
    SeqData d;
    d.n = n;
    d.T = T;
    d.C = C;
    d.x.assign((size_t)n * T * C, 0.0f);
    d.mask.assign((size_t)n * T, 1);
    d.labels.resize(n);
    Rng rng(seed);
    for (size_t i = 0; i < d.x.size(); ++i) d.x[i] = (float)rng.normal(0.0, 1.0);
    for (int i = 0; i < n; ++i) d.labels[i] = i % 2;
    return d;
}

// Class 0 trials sit at -1 on every channel, class 1 trials at +1.
SeqData separable_seq(int n, int T, int C) {
    SeqData d;
    d.n = n;
    d.T = T;
    d.C = C;
    d.x.assign((size_t)n * T * C, 0.0f);
    d.mask.assign((size_t)n * T, 1);
    d.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        d.labels[i] = i % 2;
        const float v = d.labels[i] ? 1.0f : -1.0f;
        std::fill(d.trial(i), d.trial(i) + (size_t)T * C, v);
    }
    return d;
}

size_t entry_index(const MidasNetT<double>& net, const std::string& name) {
    const auto& lay = net.layout();
    for (size_t i = 0; i < lay.size(); ++i)
        if (lay[i].name == name) return i;
    REQUIRE(false);
    return 0;
}

std::vector<double> entry_slice(const MidasNetT<double>& net, const std::string& name) {
    const auto& e = net.layout()[entry_index(net, name)];
    const double* p = net.params().data() + e.offset;
    return std::vector<double>(p, p + e.size);
}

}  // namespace

TEST_CASE("zero parameters give indifferent outputs and ln 2 loss") {
    MidasNetT<double> net(tiny_config(), 99);
    std::fill(net.params().begin(), net.params().end(), 0.0);

    const int T = 5, B = 3, C = 2;
    std::vector<double> x((size_t)T * B * C, 0.7);
    std::vector<uint8_t> mask((size_t)T * B, 1);
    std::vector<double> probs((size_t)B * 2, -1.0);
    net.forward(x.data(), mask.data(), T, B, probs.data());
    for (double p : probs) CHECK(p == 0.5);

    std::vector<double> onehot = {1, 0, 0, 1, 1, 0};
    std::vector<double> grad;
    const double loss = net.loss_and_grad(x.data(), mask.data(), onehot.data(), T, B, grad);
    CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(grad.size() == net.param_count());
    for (double g : grad) CHECK(std::isfinite(g));
    for (double p : net.params()) CHECK(p == 0.0);
}

TEST_CASE("single step forward matches the serial cell and head composition") {
    const MidasConfig cfg = tiny_config();
    MidasNetT<double> net(cfg, 4242);
    const int H = cfg.hidden;

    const std::vector<double> x = {0.3, -0.8};
    const std::vector<uint8_t> mask = {1};
    std::vector<double> probs(2);
    net.forward(x.data(), mask.data(), 1, 1, probs.data());

    // with a single step both directions see the same input from zero state,
    // and the attention pool reduces to the identity
    const std::vector<double> zero(H, 0.0);
    std::vector<double> inp = x;
    for (int l = 0; l < cfg.layers; ++l) {
        std::vector<double> y(2 * H);
        for (int d = 0; d < 2; ++d) {
            const std::string pre = "lstm" + std::to_string(l) + (d ? ".bwd" : ".fwd");
            std::vector<double> h, c;
            ref::lstm_cell(inp, zero, zero, entry_slice(net, pre + ".wx"),
                           entry_slice(net, pre + ".wh"), entry_slice(net, pre + ".b"),
                           (int)inp.size(), H, h, c);
            std::copy(h.begin(), h.end(), y.begin() + (size_t)d * H);
        }
        inp = y;
    }

    auto dense = [&](const std::vector<double>& v, const std::string& w,
                     const std::string& b, int out, bool relu) {
        const std::vector<double> wm = entry_slice(net, w);
        std::vector<double> z = entry_slice(net, b);
        REQUIRE((int)z.size() == out);
        for (size_t i = 0; i < v.size(); ++i)
            for (int j = 0; j < out; ++j) z[j] += v[i] * wm[i * out + j];
        if (relu)
            for (double& zj : z) zj = std::max(0.0, zj);
        return z;
    };
    const std::vector<double> z1 = dense(inp, "head.w1", "head.b1", cfg.head1, true);
    const std::vector<double> z2 = dense(z1, "head.w2", "head.b2", cfg.head2, true);
    std::vector<double> logits = dense(z2, "head.w3", "head.b3", 2, false);
    for (int k = 0; k < 2; ++k) {
        const double want = 1.0 / (1.0 + std::exp(-logits[k]));
        CHECK(probs[k] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("attention weights form a distribution over the unmasked steps") {
    MidasNetT<double> net(tiny_config(), 7);
    const int T = 6, B = 2, C = 2;
    Rng rng(55);
    std::vector<double> x((size_t)T * B * C);
    for (double& v : x) v = rng.normal(0.0, 1.0);
    std::vector<uint8_t> mask((size_t)T * B, 1);
    mask[1 * B + 0] = 0;
    mask[4 * B + 0] = 0;
    for (int t = 0; t < T; ++t)
        for (int b = 0; b < B; ++b)
            if (!mask[(size_t)t * B + b])
                for (int c = 0; c < C; ++c) x[((size_t)t * B + b) * C + c] = 0.0;

    std::vector<double> probs((size_t)B * 2);
    net.forward(x.data(), mask.data(), T, B, probs.data());
    const std::vector<double>& alpha = net.last_attention();
    for (int b = 0; b < B; ++b) {
        double sum = 0.0;
        for (int t = 0; t < T; ++t) {
            const double a = alpha[(size_t)t * B + b];
            CHECK(a >= 0.0);
            if (!mask[(size_t)t * B + b]) CHECK(a == 0.0);
            sum += a;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("appending masked padding leaves the outputs unchanged") {
    MidasNetT<double> net(tiny_config(), 31);
    const int T = 8, B = 2, C = 2, Tpad = 12;
    Rng rng(77);
    std::vector<double> x((size_t)T * B * C);
    for (double& v : x) v = rng.normal(0.0, 1.0);
    std::vector<uint8_t> mask((size_t)T * B, 1);
    mask[3 * B + 1] = 0;
    x[(3 * B + 1) * C + 0] = 0.0;
    x[(3 * B + 1) * C + 1] = 0.0;

    std::vector<double> probs((size_t)B * 2);
    net.forward(x.data(), mask.data(), T, B, probs.data());

    std::vector<double> xp((size_t)Tpad * B * C, 0.0);
    std::vector<uint8_t> mp((size_t)Tpad * B, 0);
    std::copy(x.begin(), x.end(), xp.begin());
    std::copy(mask.begin(), mask.end(), mp.begin());
    std::vector<double> probs_pad((size_t)B * 2);
    net.forward(xp.data(), mp.data(), Tpad, B, probs_pad.data());

    for (int i = 0; i < 2 * B; ++i) CHECK(probs[i] == probs_pad[i]);
}

TEST_CASE("prediction is invariant to the evaluation batch size") {
    const SeqData data = random_seq(7, 10, 2, 2024);
    MidasConfig cfg = tiny_config();
    cfg.batch_size = 3;
    MidasNet a(cfg, 5);
    cfg.batch_size = 7;
    MidasNet b(cfg, 5);
    cfg.batch_size = 1;
    MidasNet c(cfg, 5);
    REQUIRE(a.params() == b.params());

    const std::vector<int> pa = predict_midas(a, data, 10);
    const std::vector<int> pb = predict_midas(b, data, 10);
    const std::vector<int> pc = predict_midas(c, data, 10);
    CHECK(pa == pb);
    CHECK(pa == pc);
    CHECK((int)pa.size() == data.n);
}

TEST_CASE("a window that is fully masked at the evaluated length still predicts") {
    SeqData data = random_seq(3, 10, 2, 11);
    for (int t = 0; t < 5; ++t) {
        data.mask[(size_t)0 * 10 + t] = 0;
        data.x[((size_t)0 * 10 + t) * 2 + 0] = 0.0f;
        data.x[((size_t)0 * 10 + t) * 2 + 1] = 0.0f;
    }
    MidasNet net(tiny_config(), 13);
    const std::vector<int> p = predict_midas(net, data, 5);
    REQUIRE((int)p.size() == 3);
    for (int v : p) CHECK((v == 0 || v == 1));
}

TEST_CASE("truncated evaluation sees only the leading window") {
    SeqData data = random_seq(2, 12, 2, 303);
    // same first 6 steps, different tails
    std::copy(data.trial(0), data.trial(0) + 6 * 2, data.trial(1));
    MidasNet net(tiny_config(), 8);
    const std::vector<int> p6 = predict_midas(net, data, 6);
    CHECK(p6[0] == p6[1]);
    CHECK_THROWS_AS(predict_midas(net, data, 0), ConfigError);
    CHECK_THROWS_AS(predict_midas(net, data, 13), ConfigError);
}

TEST_CASE("fit learns a separable toy problem and logs every epoch") {
    const SeqData data = separable_seq(20, 20, 2);
    MidasConfig cfg;
    cfg.input_channels = 2;
    cfg.hidden = 4;
    cfg.attn_dim = 4;
    cfg.head1 = 8;
    cfg.head2 = 4;
    cfg.learning_rate = 1e-2;
    cfg.epochs = 50;
    cfg.batch_size = 4;
    cfg.trunc_min = 20;
    cfg.trunc_max = 20;

    int calls = 0;
    FitResult r = fit_midas(cfg, data, 90210, [&](int ep, double loss, double va) {
        CHECK(ep == calls);
        CHECK(std::isfinite(loss));
        CHECK(va >= 0.0);
        CHECK(va <= 1.0);
        ++calls;
    });
    CHECK(calls == cfg.epochs);
    REQUIRE((int)r.log.train_loss.size() == cfg.epochs);
    REQUIRE((int)r.log.val_acc.size() == cfg.epochs);
    REQUIRE(r.log.best_epoch >= 0);
    REQUIRE(r.log.best_epoch < cfg.epochs);
    CHECK(r.log.best_val_acc == r.log.val_acc[r.log.best_epoch]);
    double mx = 0.0;
    int last_best = -1;
    for (int e = 0; e < cfg.epochs; ++e)
        if (r.log.val_acc[e] >= mx || last_best < 0) {
            mx = r.log.val_acc[e];
            last_best = e;
        }
    CHECK(r.log.best_val_acc == mx);
    CHECK(r.log.best_epoch == last_best);

    const std::vector<int> pred = predict_midas(r.net, data, 20);
    CHECK(accuracy(pred, data.labels) == 1.0);
}

TEST_CASE("training is reproducible for a fixed seed") {
    const SeqData data = separable_seq(16, 10, 2);
    MidasConfig cfg;
    cfg.input_channels = 2;
    cfg.hidden = 3;
    cfg.attn_dim = 3;
    cfg.head1 = 4;
    cfg.head2 = 3;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    cfg.trunc_min = 5;
    cfg.trunc_max = 10;

    const FitResult a = fit_midas(cfg, data, 777);
    const FitResult b = fit_midas(cfg, data, 777);
    CHECK(a.net.params() == b.net.params());
    CHECK(a.log.train_loss == b.log.train_loss);
    CHECK(a.log.val_acc == b.log.val_acc);

    const FitResult c = fit_midas(cfg, data, 778);
    CHECK(a.net.params() != c.net.params());
}

TEST_CASE("gradient check passes on the probe configuration") {
    const GradcheckReport g = run_gradcheck(123);
    CHECK(g.pass);
    CHECK(g.checked > 0);
    CHECK(g.max_rel_err < 1e-4);
    CHECK(g.seconds < 30.0);
}

TEST_CASE("configuration validation rejects bad settings") {
    MidasConfig c;
    c.validate();

    auto bad = [](auto&& tweak) {
        MidasConfig c;
        tweak(c);
        CHECK_THROWS_AS(c.validate(), ConfigError);
    };
    bad([](MidasConfig& c) { c.input_channels = 0; });
    bad([](MidasConfig& c) { c.hidden = 0; });
    bad([](MidasConfig& c) { c.layers = 0; });
    bad([](MidasConfig& c) { c.attn_dim = -1; });
    bad([](MidasConfig& c) { c.head1 = 0; });
    bad([](MidasConfig& c) { c.learning_rate = 0.0; });
    bad([](MidasConfig& c) { c.beta1 = 1.0; });
    bad([](MidasConfig& c) { c.adam_eps = 0.0; });
    bad([](MidasConfig& c) { c.grad_clip = -1.0; });
    bad([](MidasConfig& c) { c.epochs = 0; });
    bad([](MidasConfig& c) { c.batch_size = 0; });
    bad([](MidasConfig& c) { c.trunc_min = 0; });
    bad([](MidasConfig& c) { c.trunc_min = 5; c.trunc_max = 4; });
    bad([](MidasConfig& c) { c.val_fraction = 0.0; });
    bad([](MidasConfig& c) { c.val_fraction = 1.0; });

    const SeqData data = separable_seq(16, 10, 2);
    MidasConfig cfg;
    cfg.input_channels = 3;  // data has 2 channels
    cfg.trunc_min = 5;
    cfg.trunc_max = 10;
    CHECK_THROWS_AS(fit_midas(cfg, data, 1), ConfigError);
    cfg.input_channels = 2;
    cfg.trunc_max = 11;
    CHECK_THROWS_AS(fit_midas(cfg, data, 1), ConfigError);
    cfg.trunc_max = 10;
    const SeqData one = separable_seq(1, 10, 2);
    CHECK_THROWS_AS(fit_midas(cfg, one, 1), ConfigError);
}

TEST_CASE("config json round trip preserves every field") {
    MidasConfig c;
    c.input_channels = 8;
    c.hidden = 16;
    c.layers = 3;
    c.attn_dim = 12;
    c.head1 = 20;
    c.head2 = 10;
    c.learning_rate = 1e-3;
    c.beta1 = 0.8;
    c.beta2 = 0.95;
    c.adam_eps = 1e-7;
    c.grad_clip = 2.5;
    c.epochs = 11;
    c.batch_size = 6;
    c.trunc_min = 30;
    c.trunc_max = 200;
    c.val_fraction = 0.2;

    const MidasConfig d = MidasConfig::from_json(c.to_json());
    CHECK(d.input_channels == c.input_channels);
    CHECK(d.hidden == c.hidden);
    CHECK(d.layers == c.layers);
    CHECK(d.attn_dim == c.attn_dim);
    CHECK(d.head1 == c.head1);
    CHECK(d.head2 == c.head2);
    CHECK(d.learning_rate == c.learning_rate);
    CHECK(d.beta1 == c.beta1);
    CHECK(d.beta2 == c.beta2);
    CHECK(d.adam_eps == c.adam_eps);
    CHECK(d.grad_clip == c.grad_clip);
    CHECK(d.epochs == c.epochs);
    CHECK(d.batch_size == c.batch_size);
    CHECK(d.trunc_min == c.trunc_min);
    CHECK(d.trunc_max == c.trunc_max);
    CHECK(d.val_fraction == c.val_fraction);
}

TEST_CASE("checkpoints round-trip the parameters, config, and log") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "midas_nn_ckpt_test";
    fs::create_directories(dir);
    const std::string path = (dir / "net.json").string();

    MidasConfig cfg = tiny_config();
    MidasNet net(cfg, 909);
    TrainLog log;
    log.train_loss = {0.9, 0.5, 0.3};
    log.val_acc = {0.5, 0.75, 0.7};
    log.best_epoch = 1;
    log.best_val_acc = 0.75;
    save_checkpoint(net, log, 424242, path);

    TrainLog rlog;
    uint64_t rseed = 0;
    MidasNet loaded = load_checkpoint(path, &rlog, &rseed);
    CHECK(loaded.params() == net.params());
    CHECK(loaded.config().hidden == cfg.hidden);
    CHECK(loaded.config().attn_dim == cfg.attn_dim);
    CHECK(rlog.train_loss == log.train_loss);
    CHECK(rlog.val_acc == log.val_acc);
    CHECK(rlog.best_epoch == log.best_epoch);
    CHECK(rlog.best_val_acc == log.best_val_acc);
    CHECK(rseed == 424242);

    SUBCASE("corrupting the blob is detected") {
        const std::string bpath = (dir / "net.bin").string();
        std::fstream bf(bpath, std::ios::in | std::ios::out | std::ios::binary);
        REQUIRE(bf.good());
        bf.seekp(4);
        char byte = 0;
        bf.seekg(4);
        bf.read(&byte, 1);
        byte = (char)(byte ^ 0x40);
        bf.seekp(4);
        bf.write(&byte, 1);
        bf.close();
        CHECK_THROWS_AS(load_checkpoint(path), LoadError);
    }

    SUBCASE("a manifest of the wrong kind is rejected") {
        std::ifstream mf(path);
        std::string text((std::istreambuf_iterator<char>(mf)), std::istreambuf_iterator<char>());
        mf.close();
        const size_t at = text.find("midas_checkpoint");
        REQUIRE(at != std::string::npos);
        text.replace(at, 16, "something_else!!");
        std::ofstream out(path);
        out << text;
        out.close();
        CHECK_THROWS_AS(load_checkpoint(path), SchemaError);
    }

    SUBCASE("a missing manifest is reported") {
        CHECK_THROWS_AS(load_checkpoint((dir / "nope.json").string()), LoadError);
    }
}

TEST_CASE("accuracy counts matches and rejects mismatched sizes") {
    CHECK(accuracy({1, 0, 1, 1}, {1, 1, 1, 0}) == 0.5);
    CHECK(accuracy({0}, {0}) == 1.0);
    CHECK_THROWS_AS(accuracy({1, 0}, {1}), ConfigError);
    CHECK_THROWS_AS(accuracy({}, {}), ConfigError);
}
