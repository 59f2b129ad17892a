#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "midas/types.hpp"

namespace midas {

// Recurrent attention classifier: two stacked bidirectional LSTM layers, an
// additive attention pool over time, and a small dense head with sigmoid
// outputs, trained with Adam on mean binary cross-entropy against one-hot
// targets. Forward and backward passes are written out by hand on top of the
// kernels in kernels.hpp.
struct MidasConfig {
    int input_channels = 2;
    int hidden = 32;       // per direction, per layer
    int layers = 2;
    int attn_dim = 0;      // 0 resolves to 2*hidden
    int head1 = 32;
    int head2 = 16;
    double learning_rate = 2.5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip = 5.0;  // global L2 norm; 0 disables
    int epochs = 30;
    int batch_size = 12;
    int trunc_min = 72;  // per-batch window truncation, sampled uniformly
    int trunc_max = 400;
    double val_fraction = 1.0 / 7.0;  // leading slice held out for best-epoch pick

    void validate() const;
    nlohmann::ordered_json to_json() const;
    static MidasConfig from_json(const nlohmann::json& j);
};

// Fixed-length sequence tensors for a set of trials: x is [n][T][C] row-major,
// mask is [n][T] with 1 = real sample. Values are expected to be normalized
// already and zero wherever mask is 0.
struct SeqData {
    int n = 0;
    int T = 0;
    int C = 0;
    std::vector<float> x;
    std::vector<uint8_t> mask;
    std::vector<int> labels;

    float* trial(int i) { return x.data() + (size_t)i * T * C; }
    const float* trial(int i) const { return x.data() + (size_t)i * T * C; }
};

template <typename Real>
class MidasNetT {
public:
    struct LayoutEntry {
        std::string name;
        std::vector<int> shape;
        size_t offset = 0;
        size_t size = 0;
    };

    MidasNetT(const MidasConfig& cfg, uint64_t init_seed);

    const MidasConfig& config() const { return cfg_; }
    std::vector<Real>& params() { return params_; }
    const std::vector<Real>& params() const { return params_; }
    size_t param_count() const { return params_.size(); }
    const std::vector<LayoutEntry>& layout() const { return layout_; }

    // x: [T][B][C] time-major, mask: [T][B]; writes probs [B][2].
    // Each batch item needs at least one unmasked step.
    void forward(const Real* x, const uint8_t* mask, int T, int B, Real* probs);

    // Forward plus backward; grad is resized to param_count() and overwritten.
    // onehot is [B][2]. Returns the batch loss.
    double loss_and_grad(const Real* x, const uint8_t* mask, const Real* onehot,
                         int T, int B, std::vector<Real>& grad);

    // Attention weights [T][B] from the most recent forward call.
    const std::vector<Real>& last_attention() const { return alpha_; }

private:
    void build_layout();
    void init_params(uint64_t seed);
    void ensure_workspace(int T, int B);
    Real* param_at(size_t idx) { return params_.data() + layout_[idx].offset; }
    const Real* param_at(size_t idx) const { return params_.data() + layout_[idx].offset; }

    MidasConfig cfg_;
    int attn_dim_ = 0;
    std::vector<Real> params_;
    std::vector<LayoutEntry> layout_;
    // y[l] holds the concatenated [fwd|bwd] hidden state per step; per
    // (layer, direction) the post-activation gates, cell, and hidden states
    // are kept for the backward pass.
    int ws_T_ = 0, ws_B_ = 0;
    std::vector<std::vector<Real>> gates_, cell_, hid_;  // indexed l*2+d
    std::vector<std::vector<Real>> ybuf_;                // per layer
    std::vector<Real> proj_, escore_, alpha_, ctx_, z1_, z2_, probs_;
    std::vector<Real> gpre_, zeros_, wt_, dG_, dh_, dc_;
    std::vector<Real> dy_, dy_below_, dctx_, dz1_, dz2_, dzp_, dalpha_, dproj_;
};

using MidasNet = MidasNetT<float>;

struct TrainLog {
    std::vector<double> train_loss;  // per epoch, mean over batches
    std::vector<double> val_acc;     // per epoch, on the held-out slice
    int best_epoch = -1;             // 0-based epoch restored into the net
    double best_val_acc = 0.0;
};

struct FitResult {
    MidasNet net;
    TrainLog log;
};

using EpochCallback = std::function<void(int epoch, double loss, double val_acc)>;

// Trains on `data` with the leading val_fraction slice held out for model
// selection, restores the best-epoch parameters (ties resolved toward the
// later epoch), and returns the net plus the log. Throws NumericError if the
// loss stops being finite.
FitResult fit_midas(const MidasConfig& cfg, const SeqData& data, uint64_t seed,
                    const EpochCallback& on_epoch = {});

// Hard 0/1 predictions with windows truncated to `length` samples
// (length <= data.T; ties go to class 0).
std::vector<int> predict_midas(MidasNet& net, const SeqData& data, int length);

double accuracy(const std::vector<int>& pred, const std::vector<int>& labels);

struct GradcheckReport {
    size_t checked = 0;
    double max_rel_err = 0.0;
    double seconds = 0.0;
    bool pass = false;
};

// Compares analytic gradients against central differences on a small net
// (2 channels, hidden 4, T=10, batch 3) covering every parameter, with masked
// steps in the batch. Runs in extended precision so the finite-difference
// noise floor sits well below the reported relative errors.
GradcheckReport run_gradcheck(uint64_t seed, double eps = 1e-5,
                              double tol = 1e-4);

// Checkpoint: a JSON manifest at `path` plus a raw little-endian float64
// parameter blob next to it (same name, .bin extension). The manifest lists
// the parameter layout table; blob order matches it.
void save_checkpoint(const MidasNet& net, const TrainLog& log, uint64_t seed,
                     const std::string& path);
MidasNet load_checkpoint(const std::string& path, TrainLog* log = nullptr,
                         uint64_t* seed = nullptr);

extern template class MidasNetT<float>;
extern template class MidasNetT<double>;
extern template class MidasNetT<long double>;

}  // namespace midas
