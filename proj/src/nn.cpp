#include "midas/nn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "midas/dataset_io.hpp"
#include "midas/kernels.hpp"
#include "midas/rng.hpp"

namespace midas {

using nlohmann::json;
using nlohmann::ordered_json;

void MidasConfig::validate() const {
    if (input_channels < 1) throw ConfigError("input_channels must be >= 1");
    if (hidden < 1) throw ConfigError("hidden must be >= 1");
    if (layers < 1) throw ConfigError("layers must be >= 1");
    if (attn_dim < 0) throw ConfigError("attn_dim must be >= 0");
    if (head1 < 1 || head2 < 1) throw ConfigError("head sizes must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ConfigError("adam betas must lie in [0, 1)");
    if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
    if (grad_clip < 0.0) throw ConfigError("grad_clip must be >= 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (trunc_min < 1 || trunc_max < trunc_min)
        throw ConfigError("truncation range must satisfy 1 <= min <= max");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw ConfigError("val_fraction must lie in (0, 1)");
}

ordered_json MidasConfig::to_json() const {
    ordered_json j;
    j["input_channels"] = input_channels;
    j["hidden"] = hidden;
    j["layers"] = layers;
    j["attn_dim"] = attn_dim;
    j["head1"] = head1;
    j["head2"] = head2;
    j["learning_rate"] = learning_rate;
    j["beta1"] = beta1;
    j["beta2"] = beta2;
    j["adam_eps"] = adam_eps;
    j["grad_clip"] = grad_clip;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["trunc_min"] = trunc_min;
    j["trunc_max"] = trunc_max;
    j["val_fraction"] = val_fraction;
    return j;
}

MidasConfig MidasConfig::from_json(const json& j) {
    MidasConfig c;
    auto geti = [&](const char* k, int& v) { if (j.contains(k)) v = j.at(k).get<int>(); };
    auto getd = [&](const char* k, double& v) { if (j.contains(k)) v = j.at(k).get<double>(); };
    geti("input_channels", c.input_channels);
    geti("hidden", c.hidden);
    geti("layers", c.layers);
    geti("attn_dim", c.attn_dim);
    geti("head1", c.head1);
    geti("head2", c.head2);
    getd("learning_rate", c.learning_rate);
    getd("beta1", c.beta1);
    getd("beta2", c.beta2);
    getd("adam_eps", c.adam_eps);
    getd("grad_clip", c.grad_clip);
    geti("epochs", c.epochs);
    geti("batch_size", c.batch_size);
    geti("trunc_min", c.trunc_min);
    geti("trunc_max", c.trunc_max);
    getd("val_fraction", c.val_fraction);
    c.validate();
    return c;
}

namespace {

// layout entry indices: 3 per (layer, direction), then attention and head
inline int wx_i(int l, int d) { return (l * 2 + d) * 3; }
inline int wh_i(int l, int d) { return (l * 2 + d) * 3 + 1; }
inline int b_i(int l, int d) { return (l * 2 + d) * 3 + 2; }

template <typename Real>
inline Real sigmoid_r(Real z) {
    if (z >= Real(0)) return Real(1) / (Real(1) + std::exp(-z));
    const Real e = std::exp(z);
    return e / (Real(1) + e);
}

template <typename Real>
Real bce_mean(const Real* p, const Real* onehot, int B) {
    Real s = Real(0);
    for (int i = 0; i < 2 * B; ++i) {
        const Real pi = std::min(Real(1) - Real(1e-12), std::max(Real(1e-12), p[i]));
        const Real yi = onehot[i];
        s -= yi * std::log(pi) + (Real(1) - yi) * std::log1p(-pi);
    }
    return s / Real(2 * B);
}

template <typename Real>
void grow(std::vector<Real>& v, size_t need) {
    if (v.size() < need) v.resize(need);
}

}  // namespace

template <typename Real>
MidasNetT<Real>::MidasNetT(const MidasConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    attn_dim_ = cfg_.attn_dim > 0 ? cfg_.attn_dim : 2 * cfg_.hidden;
    cfg_.attn_dim = attn_dim_;
    build_layout();
    init_params(init_seed);
    const int nd = cfg_.layers * 2;
    gates_.resize(nd);
    cell_.resize(nd);
    hid_.resize(nd);
    ybuf_.resize(cfg_.layers);
}

template <typename Real>
void MidasNetT<Real>::build_layout() {
    const int H = cfg_.hidden, G4 = 4 * H, A = attn_dim_;
    layout_.clear();
    size_t off = 0;
    auto add = [&](std::string name, std::vector<int> shape) {
        size_t sz = 1;
        for (int s : shape) sz *= (size_t)s;
        layout_.push_back({std::move(name), std::move(shape), off, sz});
        off += sz;
    };
    for (int l = 0; l < cfg_.layers; ++l) {
        const int in = l == 0 ? cfg_.input_channels : 2 * H;
        for (int d = 0; d < 2; ++d) {
            const char* dn = d == 0 ? "fwd" : "bwd";
            add("lstm" + std::to_string(l) + "." + dn + ".wx", {in, G4});
            add("lstm" + std::to_string(l) + "." + dn + ".wh", {H, G4});
            add("lstm" + std::to_string(l) + "." + dn + ".b", {G4});
        }
    }
    add("attn.w", {2 * H, A});
    add("attn.v", {A});
    add("head.w1", {2 * H, cfg_.head1});
    add("head.b1", {cfg_.head1});
    add("head.w2", {cfg_.head1, cfg_.head2});
    add("head.b2", {cfg_.head2});
    add("head.w3", {cfg_.head2, 2});
    add("head.b3", {2});
    params_.assign(off, Real(0));
}

template <typename Real>
void MidasNetT<Real>::init_params(uint64_t seed) {
    Rng rng(seed);
    const int H = cfg_.hidden;
    auto xavier = [&](int entry, double fan_in, double fan_out) {
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        Real* p = param_at(entry);
        for (size_t i = 0; i < layout_[entry].size; ++i)
            p[i] = (Real)rng.uniform(-a, a);
    };
    const int base = cfg_.layers * 6;
    for (int l = 0; l < cfg_.layers; ++l) {
        const int in = l == 0 ? cfg_.input_channels : 2 * H;
        for (int d = 0; d < 2; ++d) {
            xavier(wx_i(l, d), in, 4 * H);
            xavier(wh_i(l, d), H, 4 * H);
            Real* b = param_at(b_i(l, d));
            std::fill(b, b + 4 * H, Real(0));
            std::fill(b + H, b + 2 * H, Real(1));  // forget gate bias
        }
    }
    xavier(base + 0, 2 * H, attn_dim_);
    xavier(base + 1, attn_dim_, 1);
    xavier(base + 2, 2 * H, cfg_.head1);
    xavier(base + 4, cfg_.head1, cfg_.head2);
    xavier(base + 6, cfg_.head2, 2);
    // head biases stay zero
}

template <typename Real>
void MidasNetT<Real>::ensure_workspace(int T, int B) {
    const int H = cfg_.hidden, G4 = 4 * H, A = attn_dim_;
    const size_t TB = (size_t)T * B;
    const int in_max = std::max(cfg_.input_channels, 2 * H);
    for (int ld = 0; ld < cfg_.layers * 2; ++ld) {
        grow(gates_[ld], TB * G4);
        grow(cell_[ld], TB * H);
        grow(hid_[ld], TB * H);
    }
    for (int l = 0; l < cfg_.layers; ++l) grow(ybuf_[l], TB * 2 * H);
    grow(proj_, TB * A);
    grow(escore_, TB);
    grow(alpha_, TB);
    grow(ctx_, (size_t)B * 2 * H);
    grow(z1_, (size_t)B * cfg_.head1);
    grow(z2_, (size_t)B * cfg_.head2);
    grow(probs_, (size_t)B * 2);
    grow(gpre_, TB * G4);
    grow(zeros_, (size_t)B * H);
    std::fill(zeros_.begin(), zeros_.end(), Real(0));
    grow(wt_, (size_t)std::max({G4 * in_max, 2 * H * A, 2 * H * cfg_.head1,
                                cfg_.head1 * cfg_.head2, cfg_.head2 * 2}));
    grow(dG_, TB * G4);
    grow(dh_, (size_t)B * H);
    grow(dc_, (size_t)B * H);
    grow(dy_, TB * 2 * H);
    grow(dy_below_, TB * 2 * H);
    grow(dctx_, (size_t)B * 2 * H);
    grow(dz1_, (size_t)B * cfg_.head1);
    grow(dz2_, (size_t)B * cfg_.head2);
    grow(dzp_, (size_t)B * 2);
    grow(dalpha_, TB);
    grow(dproj_, TB * A);
    ws_T_ = T;
    ws_B_ = B;
}

template <typename Real>
void MidasNetT<Real>::forward(const Real* x, const uint8_t* mask, int T, int B,
                              Real* probs) {
    ensure_workspace(T, B);
    const int H = cfg_.hidden, G4 = 4 * H, A = attn_dim_;
    const size_t TB = (size_t)T * B;
    const int base = cfg_.layers * 6;

    const Real* inp = x;
    int in_dim = cfg_.input_channels;
    for (int l = 0; l < cfg_.layers; ++l) {
        Real* y = ybuf_[l].data();
        for (int d = 0; d < 2; ++d) {
            const int ld = l * 2 + d;
            const Real* wx = param_at(wx_i(l, d));
            const Real* wh = param_at(wh_i(l, d));
            const Real* bb = param_at(b_i(l, d));
            for (size_t tb = 0; tb < TB; ++tb)
                std::copy(bb, bb + G4, gpre_.data() + tb * G4);
            kern::gemm_acc(inp, wx, gpre_.data(), (int64_t)TB, in_dim, G4);
            const Real* hprev = zeros_.data();
            const Real* cprev = zeros_.data();
            for (int s = 0; s < T; ++s) {
                const int t = d ? T - 1 - s : s;
                Real* Gt = gpre_.data() + (size_t)t * B * G4;
                kern::gemm_acc(hprev, wh, Gt, B, H, G4);
                Real* gs = gates_[ld].data() + (size_t)t * B * G4;
                Real* cs = cell_[ld].data() + (size_t)t * B * H;
                Real* hs = hid_[ld].data() + (size_t)t * B * H;
                for (int b = 0; b < B; ++b) {
                    Real* gr = gs + (size_t)b * G4;
                    Real* cr = cs + (size_t)b * H;
                    Real* hr = hs + (size_t)b * H;
                    if (mask[(size_t)t * B + b]) {
                        const Real* Gr = Gt + (size_t)b * G4;
                        for (int j = 0; j < H; ++j) {
                            const Real gi = sigmoid_r(Gr[j]);
                            const Real gf = sigmoid_r(Gr[H + j]);
                            const Real gg = std::tanh(Gr[2 * H + j]);
                            const Real go = sigmoid_r(Gr[3 * H + j]);
                            gr[j] = gi;
                            gr[H + j] = gf;
                            gr[2 * H + j] = gg;
                            gr[3 * H + j] = go;
                            cr[j] = gf * cprev[(size_t)b * H + j] + gi * gg;
                            hr[j] = go * std::tanh(cr[j]);
                        }
                    } else {
                        // gap or padding: state passes through unchanged
                        std::fill(gr, gr + G4, Real(0));
                        std::copy(cprev + (size_t)b * H, cprev + (size_t)b * H + H, cr);
                        std::copy(hprev + (size_t)b * H, hprev + (size_t)b * H + H, hr);
                    }
                    std::copy(hr, hr + H, y + ((size_t)t * B + b) * 2 * H + (size_t)d * H);
                }
                hprev = hs;
                cprev = cs;
            }
        }
        inp = y;
        in_dim = 2 * H;
    }

    // attention pool over time
    const Real* ylast = ybuf_[cfg_.layers - 1].data();
    const Real* wa = param_at(base + 0);
    const Real* va = param_at(base + 1);
    std::fill(proj_.begin(), proj_.begin() + TB * A, Real(0));
    kern::gemm_acc(ylast, wa, proj_.data(), (int64_t)TB, 2 * H, A);
    for (size_t i = 0; i < TB * A; ++i) proj_[i] = std::tanh(proj_[i]);
    for (size_t tb = 0; tb < TB; ++tb) {
        Real acc = 0;
        const Real* pr = proj_.data() + tb * A;
        for (int a = 0; a < A; ++a) acc += pr[a] * va[a];
        escore_[tb] = acc;
    }
    for (int b = 0; b < B; ++b) {
        Real mx = -std::numeric_limits<Real>::infinity();
        for (int t = 0; t < T; ++t)
            if (mask[(size_t)t * B + b]) mx = std::max(mx, escore_[(size_t)t * B + b]);
        Real denom = 0;
        for (int t = 0; t < T; ++t) {
            const size_t tb = (size_t)t * B + b;
            alpha_[tb] = mask[tb] ? std::exp(escore_[tb] - mx) : Real(0);
            denom += alpha_[tb];
        }
        for (int t = 0; t < T; ++t) alpha_[(size_t)t * B + b] /= denom;
    }
    std::fill(ctx_.begin(), ctx_.begin() + (size_t)B * 2 * H, Real(0));
    for (int t = 0; t < T; ++t)
        for (int b = 0; b < B; ++b) {
            const Real a = alpha_[(size_t)t * B + b];
            if (a == Real(0)) continue;
            const Real* yr = ylast + ((size_t)t * B + b) * 2 * H;
            Real* cr = ctx_.data() + (size_t)b * 2 * H;
            for (int j = 0; j < 2 * H; ++j) cr[j] += a * yr[j];
        }

    // dense head
    const int h1 = cfg_.head1, h2 = cfg_.head2;
    const Real* w1 = param_at(base + 2);
    const Real* b1 = param_at(base + 3);
    const Real* w2 = param_at(base + 4);
    const Real* b2 = param_at(base + 5);
    const Real* w3 = param_at(base + 6);
    const Real* b3 = param_at(base + 7);
    for (int b = 0; b < B; ++b)
        std::copy(b1, b1 + h1, z1_.data() + (size_t)b * h1);
    kern::gemm_acc(ctx_.data(), w1, z1_.data(), B, 2 * H, h1);
    for (size_t i = 0; i < (size_t)B * h1; ++i) z1_[i] = std::max(Real(0), z1_[i]);
    for (int b = 0; b < B; ++b)
        std::copy(b2, b2 + h2, z2_.data() + (size_t)b * h2);
    kern::gemm_acc(z1_.data(), w2, z2_.data(), B, h1, h2);
    for (size_t i = 0; i < (size_t)B * h2; ++i) z2_[i] = std::max(Real(0), z2_[i]);
    for (int b = 0; b < B; ++b)
        std::copy(b3, b3 + 2, probs_.data() + (size_t)b * 2);
    kern::gemm_acc(z2_.data(), w3, probs_.data(), B, h2, 2);
    for (int i = 0; i < 2 * B; ++i) probs_[i] = sigmoid_r(probs_[i]);
    if (probs != nullptr && probs != probs_.data())
        std::copy(probs_.begin(), probs_.begin() + 2 * B, probs);
}

template <typename Real>
double MidasNetT<Real>::loss_and_grad(const Real* x, const uint8_t* mask,
                                      const Real* onehot, int T, int B,
                                      std::vector<Real>& grad) {
    forward(x, mask, T, B, nullptr);
    const double loss = (double)bce_mean(probs_.data(), onehot, B);

    grad.assign(params_.size(), Real(0));
    const int H = cfg_.hidden, G4 = 4 * H, A = attn_dim_;
    const int h1 = cfg_.head1, h2 = cfg_.head2;
    const size_t TB = (size_t)T * B;
    const int base = cfg_.layers * 6;
    auto gp = [&](int e) { return grad.data() + layout_[e].offset; };

    // head backward
    for (int i = 0; i < 2 * B; ++i)
        dzp_[i] = (probs_[i] - onehot[i]) / (Real)(2 * B);
    kern::gemm_atb(z2_.data(), dzp_.data(), gp(base + 6), h2, B, 2);
    for (int b = 0; b < B; ++b)
        for (int k = 0; k < 2; ++k) gp(base + 7)[k] += dzp_[(size_t)b * 2 + k];
    kern::transpose(param_at(base + 6), wt_.data(), h2, 2);
    std::fill(dz2_.begin(), dz2_.begin() + (size_t)B * h2, Real(0));
    kern::gemm_acc(dzp_.data(), wt_.data(), dz2_.data(), B, 2, h2);
    for (size_t i = 0; i < (size_t)B * h2; ++i)
        if (z2_[i] <= Real(0)) dz2_[i] = Real(0);
    kern::gemm_atb(z1_.data(), dz2_.data(), gp(base + 4), h1, B, h2);
    for (int b = 0; b < B; ++b)
        for (int k = 0; k < h2; ++k) gp(base + 5)[k] += dz2_[(size_t)b * h2 + k];
    kern::transpose(param_at(base + 4), wt_.data(), h1, h2);
    std::fill(dz1_.begin(), dz1_.begin() + (size_t)B * h1, Real(0));
    kern::gemm_acc(dz2_.data(), wt_.data(), dz1_.data(), B, h2, h1);
    for (size_t i = 0; i < (size_t)B * h1; ++i)
        if (z1_[i] <= Real(0)) dz1_[i] = Real(0);
    kern::gemm_atb(ctx_.data(), dz1_.data(), gp(base + 2), 2 * H, B, h1);
    for (int b = 0; b < B; ++b)
        for (int k = 0; k < h1; ++k) gp(base + 3)[k] += dz1_[(size_t)b * h1 + k];
    kern::transpose(param_at(base + 2), wt_.data(), 2 * H, h1);
    std::fill(dctx_.begin(), dctx_.begin() + (size_t)B * 2 * H, Real(0));
    kern::gemm_acc(dz1_.data(), wt_.data(), dctx_.data(), B, h1, 2 * H);

    // attention backward
    const Real* ylast = ybuf_[cfg_.layers - 1].data();
    const Real* va = param_at(base + 1);
    std::fill(dy_.begin(), dy_.begin() + TB * 2 * H, Real(0));
    for (int t = 0; t < T; ++t)
        for (int b = 0; b < B; ++b) {
            const size_t tb = (size_t)t * B + b;
            const Real* yr = ylast + tb * 2 * H;
            const Real* dcr = dctx_.data() + (size_t)b * 2 * H;
            Real acc = 0;
            for (int j = 0; j < 2 * H; ++j) acc += dcr[j] * yr[j];
            dalpha_[tb] = acc;
            const Real a = alpha_[tb];
            if (a != Real(0)) {
                Real* dyr = dy_.data() + tb * 2 * H;
                for (int j = 0; j < 2 * H; ++j) dyr[j] += a * dcr[j];
            }
        }
    for (int b = 0; b < B; ++b) {
        Real s = 0;
        for (int t = 0; t < T; ++t) {
            const size_t tb = (size_t)t * B + b;
            s += alpha_[tb] * dalpha_[tb];
        }
        for (int t = 0; t < T; ++t) {
            const size_t tb = (size_t)t * B + b;
            dalpha_[tb] = mask[tb] ? alpha_[tb] * (dalpha_[tb] - s) : Real(0);
        }
    }
    // dalpha_ now holds the score gradients
    kern::gemm_atb(proj_.data(), dalpha_.data(), gp(base + 1), A, (int64_t)TB, 1);
    for (size_t tb = 0; tb < TB; ++tb) {
        const Real de = dalpha_[tb];
        const Real* pr = proj_.data() + tb * A;
        Real* dpr = dproj_.data() + tb * A;
        for (int a = 0; a < A; ++a)
            dpr[a] = de * va[a] * (Real(1) - pr[a] * pr[a]);
    }
    kern::gemm_atb(ylast, dproj_.data(), gp(base + 0), 2 * H, (int64_t)TB, A);
    kern::transpose(param_at(base + 0), wt_.data(), 2 * H, A);
    kern::gemm_acc(dproj_.data(), wt_.data(), dy_.data(), (int64_t)TB, A, 2 * H);

    // LSTM stack backward, top layer first
    for (int l = cfg_.layers - 1; l >= 0; --l) {
        const Real* inp = l == 0 ? x : ybuf_[l - 1].data();
        const int in_dim = l == 0 ? cfg_.input_channels : 2 * H;
        if (l > 0) std::fill(dy_below_.begin(), dy_below_.begin() + TB * in_dim, Real(0));
        for (int d = 0; d < 2; ++d) {
            const int ld = l * 2 + d;
            const Real* wh = param_at(wh_i(l, d));
            kern::transpose(wh, wt_.data(), H, G4);
            std::fill(dG_.begin(), dG_.begin() + TB * G4, Real(0));
            std::fill(dh_.begin(), dh_.begin() + (size_t)B * H, Real(0));
            std::fill(dc_.begin(), dc_.begin() + (size_t)B * H, Real(0));
            for (int s = T - 1; s >= 0; --s) {
                const int t = d ? T - 1 - s : s;
                const int tprev = d ? t + 1 : t - 1;
                const Real* gs = gates_[ld].data() + (size_t)t * B * G4;
                const Real* cs = cell_[ld].data() + (size_t)t * B * H;
                const Real* cprev = s == 0 ? zeros_.data()
                                           : cell_[ld].data() + (size_t)tprev * B * H;
                Real* dGt = dG_.data() + (size_t)t * B * G4;
                for (int b = 0; b < B; ++b) {
                    const Real* dyr = dy_.data() + ((size_t)t * B + b) * 2 * H + (size_t)d * H;
                    Real* dhr = dh_.data() + (size_t)b * H;
                    Real* dcr = dc_.data() + (size_t)b * H;
                    if (!mask[(size_t)t * B + b]) {
                        for (int j = 0; j < H; ++j) dhr[j] += dyr[j];
                        continue;
                    }
                    const Real* gr = gs + (size_t)b * G4;
                    const Real* cr = cs + (size_t)b * H;
                    const Real* cpr = cprev + (size_t)b * H;
                    Real* dGr = dGt + (size_t)b * G4;
                    for (int j = 0; j < H; ++j) {
                        const Real gi = gr[j];
                        const Real gf = gr[H + j];
                        const Real gg = gr[2 * H + j];
                        const Real go = gr[3 * H + j];
                        const Real tc = std::tanh(cr[j]);
                        const Real dht = dyr[j] + dhr[j];
                        const Real dov = dht * tc;
                        const Real dct = dcr[j] + dht * go * (Real(1) - tc * tc);
                        dGr[j] = dct * gg * gi * (Real(1) - gi);
                        dGr[H + j] = dct * cpr[j] * gf * (Real(1) - gf);
                        dGr[2 * H + j] = dct * gi * (Real(1) - gg * gg);
                        dGr[3 * H + j] = dov * go * (Real(1) - go);
                        dcr[j] = dct * gf;
                        dhr[j] = Real(0);
                    }
                }
                if (s > 0) {
                    const Real* hprev = hid_[ld].data() + (size_t)tprev * B * H;
                    kern::gemm_atb(hprev, dGt, gp(wh_i(l, d)), H, B, G4);
                }
                kern::gemm_acc(dGt, wt_.data(), dh_.data(), B, G4, H);
            }
            Real* gb = gp(b_i(l, d));
            for (size_t tb = 0; tb < TB; ++tb) {
                const Real* dGr = dG_.data() + tb * G4;
                for (int j = 0; j < G4; ++j) gb[j] += dGr[j];
            }
            kern::gemm_atb(inp, dG_.data(), gp(wx_i(l, d)), in_dim, (int64_t)TB, G4);
            if (l > 0) {
                kern::transpose(param_at(wx_i(l, d)), wt_.data(), in_dim, G4);
                kern::gemm_acc(dG_.data(), wt_.data(), dy_below_.data(), (int64_t)TB,
                               G4, in_dim);
            }
        }
        if (l > 0) std::swap(dy_, dy_below_);
    }
    return loss;
}

template class MidasNetT<float>;
template class MidasNetT<double>;
template class MidasNetT<long double>;

namespace {

// Copies selected trials into a time-major batch, truncated to L steps.
// A window left with no unmasked step gets its first step unmasked so the
// attention pool always has somewhere to put weight; the features there are
// zero, so the item is effectively featureless rather than undefined.
void gather_batch(const SeqData& s, const int* idx, int B, int L,
                  std::vector<float>& xb, std::vector<uint8_t>& mb) {
    const int C = s.C;
    xb.assign((size_t)L * B * C, 0.0f);
    mb.assign((size_t)L * B, 0);
    for (int b = 0; b < B; ++b) {
        const int n = idx[b];
        bool any = false;
        for (int t = 0; t < L; ++t) {
            const uint8_t m = s.mask[(size_t)n * s.T + t];
            mb[(size_t)t * B + b] = m;
            any = any || m;
            std::copy(s.x.begin() + ((size_t)n * s.T + t) * C,
                      s.x.begin() + ((size_t)n * s.T + t) * C + C,
                      xb.begin() + ((size_t)t * B + b) * C);
        }
        if (!any) mb[b] = 1;
    }
}

std::vector<int> predict_range(MidasNet& net, const SeqData& data,
                               const std::vector<int>& idx, int length) {
    const int B = net.config().batch_size;
    std::vector<int> out;
    out.reserve(idx.size());
    std::vector<float> xb, probs;
    std::vector<uint8_t> mb;
    for (size_t i = 0; i < idx.size(); i += B) {
        const int bn = (int)std::min((size_t)B, idx.size() - i);
        gather_batch(data, idx.data() + i, bn, length, xb, mb);
        probs.assign((size_t)bn * 2, 0.0f);
        net.forward(xb.data(), mb.data(), length, bn, probs.data());
        for (int b = 0; b < bn; ++b)
            out.push_back(probs[(size_t)b * 2 + 1] > probs[(size_t)b * 2] ? 1 : 0);
    }
    return out;
}

}  // namespace

FitResult fit_midas(const MidasConfig& cfg, const SeqData& data, uint64_t seed,
                    const EpochCallback& on_epoch) {
    cfg.validate();
    if (cfg.input_channels != data.C)
        throw ConfigError("input_channels does not match the data");
    if (cfg.trunc_max > data.T)
        throw ConfigError("truncation exceeds the window length");
    const int nv = std::max(1, (int)std::llround(data.n * cfg.val_fraction));
    if (nv >= data.n)
        throw ConfigError("training set too small for a validation slice");
    const int ntr = data.n - nv;

    FitResult res{MidasNet(cfg, derive_seed(seed, 0)), {}};
    MidasNet& net = res.net;
    TrainLog& log = res.log;
    Rng rng(derive_seed(seed, 1));

    std::vector<int> val_idx(nv);
    for (int i = 0; i < nv; ++i) val_idx[i] = i;
    std::vector<int> val_labels(nv);
    for (int i = 0; i < nv; ++i) val_labels[i] = data.labels[i];

    std::vector<float> xb, onehot;
    std::vector<uint8_t> mb;
    std::vector<float> grad;
    std::vector<float> adam_m(net.param_count(), 0.0f), adam_v(net.param_count(), 0.0f);
    int64_t adam_t = 0;
    std::vector<float> best_params;
    std::vector<int> bidx;

    for (int ep = 0; ep < cfg.epochs; ++ep) {
        const std::vector<int> order = rng.permutation(ntr);
        double loss_sum = 0.0;
        int nb = 0;
        for (int b0 = 0; b0 < ntr; b0 += cfg.batch_size) {
            const int bn = std::min(cfg.batch_size, ntr - b0);
            const int L = (int)rng.integers(cfg.trunc_min, cfg.trunc_max + 1);
            bidx.assign(bn, 0);
            for (int b = 0; b < bn; ++b) bidx[b] = nv + order[b0 + b];
            gather_batch(data, bidx.data(), bn, L, xb, mb);
            onehot.assign((size_t)bn * 2, 0.0f);
            for (int b = 0; b < bn; ++b)
                onehot[(size_t)b * 2 + data.labels[bidx[b]]] = 1.0f;
            const double loss = net.loss_and_grad(xb.data(), mb.data(), onehot.data(),
                                                  L, bn, grad);
            if (!std::isfinite(loss))
                throw NumericError("training diverged at epoch " + std::to_string(ep + 1));
            loss_sum += loss;
            ++nb;
            // global L2 clip, then Adam
            double sq = 0.0;
            for (float g : grad) sq += (double)g * g;
            const double norm = std::sqrt(sq);
            if (cfg.grad_clip > 0.0 && norm > cfg.grad_clip) {
                const float sc = (float)(cfg.grad_clip / norm);
                for (float& g : grad) g *= sc;
            }
            ++adam_t;
            const double bc1 = 1.0 - std::pow(cfg.beta1, (double)adam_t);
            const double bc2 = 1.0 - std::pow(cfg.beta2, (double)adam_t);
            std::vector<float>& p = net.params();
            for (size_t i = 0; i < p.size(); ++i) {
                const double g = grad[i];
                const double m = cfg.beta1 * adam_m[i] + (1.0 - cfg.beta1) * g;
                const double v = cfg.beta2 * adam_v[i] + (1.0 - cfg.beta2) * g * g;
                adam_m[i] = (float)m;
                adam_v[i] = (float)v;
                p[i] -= (float)(cfg.learning_rate * (m / bc1) /
                                (std::sqrt(v / bc2) + cfg.adam_eps));
            }
        }
        log.train_loss.push_back(nb ? loss_sum / nb : 0.0);
        const std::vector<int> vp = predict_range(net, data, val_idx, data.T);
        const double va = accuracy(vp, val_labels);
        log.val_acc.push_back(va);
        if (va >= log.best_val_acc || log.best_epoch < 0) {
            log.best_val_acc = va;
            log.best_epoch = ep;
            best_params = net.params();
        }
        if (on_epoch) on_epoch(ep, log.train_loss.back(), va);
    }
    net.params() = best_params;
    return res;
}

std::vector<int> predict_midas(MidasNet& net, const SeqData& data, int length) {
    if (length < 1 || length > data.T)
        throw ConfigError("prediction length out of range");
    std::vector<int> idx(data.n);
    for (int i = 0; i < data.n; ++i) idx[i] = i;
    return predict_range(net, data, idx, length);
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& labels) {
    if (pred.size() != labels.size() || pred.empty())
        throw ConfigError("accuracy: size mismatch");
    size_t hit = 0;
    for (size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == labels[i]) ++hit;
    return (double)hit / (double)pred.size();
}

// The probe runs in 80-bit extended precision. The difference quotient
// divides a loss change of order eps^2 by 2*eps, so its roundoff floor is
// ulp(loss) / (2*eps); at float64 that is ~5e-12, which near-zero gradients
// turn into apparent relative errors above the tolerance. Extended precision
// pushes the floor to ~3e-15 and keeps the oracle valid for every parameter.
GradcheckReport run_gradcheck(uint64_t seed, double eps, double tol) {
    using LD = long double;
    const auto t0 = std::chrono::steady_clock::now();
    MidasConfig cfg;
    cfg.input_channels = 2;
    cfg.hidden = 4;
    const int T = 10, B = 3;
    MidasNetT<LD> net(cfg, derive_seed(seed, 0));
    Rng rng(derive_seed(seed, 1));

    std::vector<LD> x((size_t)T * B * cfg.input_channels);
    for (LD& v : x) v = rng.normal(0.0, 1.0);
    std::vector<uint8_t> mask((size_t)T * B, 1);
    mask[(size_t)3 * B + 1] = 0;           // mid-window gap
    for (int t = 7; t < T; ++t) mask[(size_t)t * B + 2] = 0;  // tail padding
    for (int t = 0; t < T; ++t)
        for (int b = 0; b < B; ++b)
            if (!mask[(size_t)t * B + b])
                for (int c = 0; c < cfg.input_channels; ++c)
                    x[((size_t)t * B + b) * cfg.input_channels + c] = 0.0;
    std::vector<LD> onehot((size_t)B * 2, 0.0);
    const int labels[B] = {0, 1, 0};
    for (int b = 0; b < B; ++b) onehot[(size_t)b * 2 + labels[b]] = 1.0;

    std::vector<LD> grad;
    net.loss_and_grad(x.data(), mask.data(), onehot.data(), T, B, grad);

    GradcheckReport rep;
    rep.checked = net.param_count();
    std::vector<LD> probs((size_t)B * 2);
    std::vector<LD>& p = net.params();
    const LD heps = (LD)eps;
    for (size_t i = 0; i < p.size(); ++i) {
        const LD orig = p[i];
        p[i] = orig + heps;
        net.forward(x.data(), mask.data(), T, B, probs.data());
        const LD lp = bce_mean(probs.data(), onehot.data(), B);
        p[i] = orig - heps;
        net.forward(x.data(), mask.data(), T, B, probs.data());
        const LD lm = bce_mean(probs.data(), onehot.data(), B);
        p[i] = orig;
        const LD gn = (lp - lm) / (2 * heps);
        const LD ga = grad[i];
        const LD rel = std::fabs(ga - gn) /
                       std::max((LD)1e-8, std::max(std::fabs(ga), std::fabs(gn)));
        rep.max_rel_err = std::max(rep.max_rel_err, (double)rel);
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.pass = rep.max_rel_err < tol;
    return rep;
}

void save_checkpoint(const MidasNet& net, const TrainLog& log, uint64_t seed,
                     const std::string& path) {
    namespace fs = std::filesystem;
    fs::path mpath(path);
    fs::path bpath(mpath);
    bpath.replace_extension(".bin");

    std::string blob(net.param_count() * 8, '\0');
    {
        const std::vector<float>& p = net.params();
        for (size_t i = 0; i < p.size(); ++i) {
            const double d = (double)p[i];
            std::memcpy(blob.data() + i * 8, &d, 8);  // x86 stores little-endian
        }
    }
    std::ofstream bf(bpath, std::ios::binary);
    if (!bf) throw LoadError("cannot write " + bpath.string());
    bf.write(blob.data(), (std::streamsize)blob.size());
    bf.close();

    ordered_json j;
    j["schema_version"] = 1;
    j["kind"] = "midas_checkpoint";
    j["seed"] = seed;
    j["config"] = net.config().to_json();
    j["param_count"] = net.param_count();
    ordered_json lay = ordered_json::array();
    for (const auto& e : net.layout()) {
        ordered_json le;
        le["name"] = e.name;
        le["shape"] = e.shape;
        le["offset"] = e.offset;
        le["size"] = e.size;
        lay.push_back(le);
    }
    j["layout"] = lay;
    j["blob"] = bpath.filename().string();
    j["blob_format"] = "float64 little-endian, layout order";
    j["blob_hash"] = hash_hex(fnv1a(blob));
    j["best_epoch"] = log.best_epoch;
    j["best_val_acc"] = log.best_val_acc;
    j["train_loss"] = log.train_loss;
    j["val_acc"] = log.val_acc;
    std::ofstream mf(mpath);
    if (!mf) throw LoadError("cannot write " + mpath.string());
    mf << j.dump(2) << "\n";
}

MidasNet load_checkpoint(const std::string& path, TrainLog* log, uint64_t* seed) {
    namespace fs = std::filesystem;
    std::ifstream mf(path);
    if (!mf) throw LoadError("cannot open " + path);
    json j;
    try {
        mf >> j;
    } catch (const json::exception& e) {
        throw LoadError("bad checkpoint manifest: " + std::string(e.what()));
    }
    if (j.value("kind", "") != "midas_checkpoint")
        throw SchemaError("not a checkpoint manifest");
    if (j.value("schema_version", 0) != 1)
        throw SchemaError("unsupported checkpoint schema version");
    const MidasConfig cfg = MidasConfig::from_json(j.at("config"));
    MidasNet net(cfg, 0);
    const size_t count = j.at("param_count").get<size_t>();
    if (count != net.param_count())
        throw SchemaError("checkpoint parameter count does not match the config");

    fs::path bpath = fs::path(path).parent_path() / j.at("blob").get<std::string>();
    std::ifstream bf(bpath, std::ios::binary);
    if (!bf) throw LoadError("cannot open " + bpath.string());
    std::string blob((std::istreambuf_iterator<char>(bf)),
                     std::istreambuf_iterator<char>());
    if (blob.size() != count * 8)
        throw LoadError("checkpoint blob has the wrong size");
    if (j.contains("blob_hash") && j.at("blob_hash").get<std::string>() != hash_hex(fnv1a(blob)))
        throw LoadError("checkpoint blob hash mismatch");
    std::vector<float>& p = net.params();
    for (size_t i = 0; i < count; ++i) {
        double d;
        std::memcpy(&d, blob.data() + i * 8, 8);
        p[i] = (float)d;
    }
    if (log) {
        log->best_epoch = j.value("best_epoch", -1);
        log->best_val_acc = j.value("best_val_acc", 0.0);
        log->train_loss = j.value("train_loss", std::vector<double>{});
        log->val_acc = j.value("val_acc", std::vector<double>{});
    }
    if (seed) *seed = j.value("seed", (uint64_t)0);
    return net;
}

}  // namespace midas
