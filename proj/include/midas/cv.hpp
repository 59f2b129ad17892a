#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "midas/features.hpp"
#include "midas/gbt.hpp"
#include "midas/nn.hpp"
#include "midas/types.hpp"

namespace midas {

enum class ModelKind { midas, gbt, svm, logreg, handedness, gmm };

const char* model_kind_name(ModelKind m);
ModelKind model_kind_from_name(const std::string& name);

enum class CvScheme { kfold5, loso };

const char* scheme_name(CvScheme s);
CvScheme scheme_from_name(const std::string& name);

// Model/feature pairs the pipeline cannot run: sequence models need
// sequences, and the handedness threshold and GMM intent models need the
// target box geometry carried only by the raw+target set.
struct InfeasibleCombination : ConfigError {
    using ConfigError::ConfigError;
};

bool combination_feasible(ModelKind model, FeatureSet set);

struct SplitPlan {
    CvScheme scheme = CvScheme::kfold5;
    uint64_t seed = 0;
    int n_folds = 0;
    std::vector<int> fold_of;              // parallel to FeatureFile records
    std::vector<std::string> fold_names;   // "fold0".. or subject ids
};

SplitPlan make_split(const FeatureFile& ff, CvScheme scheme, uint64_t seed, int k = 5);

struct CvOptions {
    MidasConfig midas;       // input_channels is set from the feature file
    GbtConfig gbt;
    double logreg_l2 = 1e-4;
    int logreg_epochs = 200;
    double svm_c = 1.0;
    int svm_epochs = 200;
    int gmm_k_min = 1;
    int gmm_k_max = 8;
    int gmm_seeds_per_k = 5;
    int gmm_train_cap = 8000;  // per-intent cap on pooled training points
    // when set and the model is the recurrent one, each fold's model is saved
    // to "<prefix>_<fold>.json" (+ .bin parameter blob)
    std::string checkpoint_prefix;
    std::function<void(const std::string&)> log;  // progress lines, optional
};

struct CellResult {
    ModelKind model = ModelKind::logreg;
    FeatureSet features = FeatureSet::raw;
    CvScheme scheme = CvScheme::kfold5;
    uint64_t seed = 0;
    int n_folds = 0;
    std::vector<double> fold_acc;      // evaluated folds, split order
    std::vector<int> skipped_folds;    // single-class or empty folds
    double mean = 0.0;
    double stddev = 0.0;               // population std across folds
    bool chance_level = false;         // mean within 2 std of 0.5
};

CellResult run_cv(const FeatureFile& ff, ModelKind model, const SplitPlan& split,
                  uint64_t seed, const CvOptions& opt = {});

struct CurvePoint {
    int length = 0;
    double acc = 0.0;
};

struct CurveResult {
    ModelKind model = ModelKind::midas;
    FeatureSet features = FeatureSet::raw;
    CvScheme scheme = CvScheme::kfold5;
    uint64_t seed = 0;
    std::vector<CurvePoint> points;    // fold-mean accuracy per length
};

extern const std::vector<int> kCurveLengths;  // {72, 144, 216, 288, 360, 400}

// One recurrent model per fold evaluated at every length; classical models
// are refit per length on the truncated windows.
CurveResult accuracy_over_time(const FeatureFile& ff, ModelKind model,
                               const SplitPlan& split,
                               const std::vector<int>& lengths, uint64_t seed,
                               const CvOptions& opt = {});

struct EvalReport {
    std::vector<CellResult> cells;
    std::vector<CurveResult> curves;

    // replaces an entry with the same (model, features, scheme), else inserts;
    // entries stay ordered by (features, model, scheme)
    void upsert(const CellResult& cell);
    void upsert(const CurveResult& curve);
};

nlohmann::ordered_json report_to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);
void save_report(const EvalReport& r, const std::string& path);
EvalReport load_report(const std::string& path);

// Grid of feature-set rows by model columns, cells "mean ± std" or "N/A",
// chance-level cells tagged; one grid per scheme present, 5-fold first.
// With no cells the output is just the header.
std::string render_report(const EvalReport& r, const std::string& format);

// Curve points as a two-column CSV ("length,accuracy")
std::string render_curve_csv(const CurveResult& c);

}  // namespace midas
