#include "midas/cv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "midas/gmm.hpp"
#include "midas/linear_models.hpp"
#include "midas/rng.hpp"
#include "midas/stats.hpp"

namespace midas {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<int> kCurveLengths = {72, 144, 216, 288, 360, 400};

const char* model_kind_name(ModelKind m) {
    switch (m) {
        case ModelKind::midas: return "midas";
        case ModelKind::gbt: return "gbt";
        case ModelKind::svm: return "svm";
        case ModelKind::logreg: return "logreg";
        case ModelKind::handedness: return "handedness";
        case ModelKind::gmm: return "gmm";
    }
    return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
    for (ModelKind m : {ModelKind::midas, ModelKind::gbt, ModelKind::svm,
                        ModelKind::logreg, ModelKind::handedness, ModelKind::gmm})
        if (name == model_kind_name(m)) return m;
    throw ConfigError("unknown model: " + name);
}

const char* scheme_name(CvScheme s) {
    return s == CvScheme::kfold5 ? "kfold5" : "loso";
}

CvScheme scheme_from_name(const std::string& name) {
    if (name == "kfold5") return CvScheme::kfold5;
    if (name == "loso") return CvScheme::loso;
    throw ConfigError("unknown cv scheme: " + name);
}

bool combination_feasible(ModelKind model, FeatureSet set) {
    if (model == ModelKind::midas) return !feature_set_is_hist(set);
    if (model == ModelKind::handedness || model == ModelKind::gmm)
        return set == FeatureSet::raw_target;
    return true;
}

SplitPlan make_split(const FeatureFile& ff, CvScheme scheme, uint64_t seed, int k) {
    const int n = (int)ff.records.size();
    if (n == 0) throw ConfigError("cannot split an empty feature file");
    SplitPlan plan;
    plan.scheme = scheme;
    plan.seed = seed;
    plan.fold_of.assign(n, 0);
    if (scheme == CvScheme::kfold5) {
        if (k < 2) throw ConfigError("kfold needs at least 2 folds");
        if (k > n) throw ConfigError("more folds than trials");
        plan.n_folds = k;
        Rng rng(derive_seed(seed, 0x5f1d));
        const std::vector<int> perm = rng.permutation(n);
        for (int i = 0; i < n; ++i) plan.fold_of[perm[i]] = i % k;
        for (int f = 0; f < k; ++f) plan.fold_names.push_back("fold" + std::to_string(f));
    } else {
        std::map<std::string, int> subj;
        for (size_t i = 0; i < ff.subjects.size(); ++i)
            subj[ff.subjects[i]] = (int)i;
        if (subj.empty()) throw ConfigError("feature file lists no subjects");
        plan.n_folds = (int)subj.size();
        plan.fold_names.assign(ff.subjects.begin(), ff.subjects.end());
        for (int i = 0; i < n; ++i) {
            auto it = subj.find(ff.records[i].subject_id);
            if (it == subj.end())
                throw ConfigError("trial subject not in the subject list: " +
                                  ff.records[i].subject_id);
            plan.fold_of[i] = it->second;
        }
    }
    return plan;
}

namespace {

int label_of(const FeatureRecord& r) {
    return r.intent == Intent::manipulation ? 1 : 0;
}

void fold_indices(const SplitPlan& split, int fold, std::vector<int>& train,
                  std::vector<int>& test) {
    train.clear();
    test.clear();
    for (int i = 0; i < (int)split.fold_of.size(); ++i)
        (split.fold_of[i] == fold ? test : train).push_back(i);
}

bool single_class(const FeatureFile& ff, const std::vector<int>& idx) {
    bool saw0 = false, saw1 = false;
    for (int i : idx) (label_of(ff.records[i]) ? saw1 : saw0) = true;
    return !(saw0 && saw1);
}

// flattened vectors for the fixed-size models; sequential sets may be
// truncated to the first L steps (L = 0 keeps the full window)
FlatData flatten(const FeatureFile& ff, const std::vector<int>& idx, int L) {
    FlatData out;
    out.n = (int)idx.size();
    if (ff.is_hist) {
        out.d = ff.hist_bins;
        out.x.reserve((size_t)out.n * out.d);
        for (int i : idx) {
            const auto& h = ff.records[i].hist;
            out.x.insert(out.x.end(), h.counts.begin(), h.counts.end());
            out.y.push_back(label_of(ff.records[i]));
        }
        return out;
    }
    const int T = L > 0 ? L : ff.crop_length;
    const int C = (int)ff.channels.size();
    out.d = T * C;
    out.x.reserve((size_t)out.n * out.d);
    for (int i : idx) {
        const FeatureSeries& s = ff.records[i].series;
        out.x.insert(out.x.end(), s.values.begin(),
                     s.values.begin() + (size_t)T * C);
        out.y.push_back(label_of(ff.records[i]));
    }
    return out;
}

// normalized gaze positions inside the target box, from the raw+target
// channel layout (x, y, cx, cy, w, h), truncated to the first L steps
void series_uv(const FeatureSeries& s, int L, std::vector<double>& us,
               std::vector<double>& vs) {
    us.clear();
    vs.clear();
    const int T = L > 0 ? std::min(L, s.T) : s.T;
    for (int t = 0; t < T; ++t) {
        if (!s.mask[t]) continue;
        const double w = s.at(t, 4), h = s.at(t, 5);
        if (!(w > 0.0) || !(h > 0.0)) continue;
        const double u = (s.at(t, 0) - (s.at(t, 2) - w / 2.0)) / w;
        const double v = (s.at(t, 1) - (s.at(t, 3) - h / 2.0)) / h;
        if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) continue;
        us.push_back(u);
        vs.push_back(v);
    }
}

double series_mean_u(const FeatureSeries& s, int L, bool& has) {
    std::vector<double> us, vs;
    series_uv(s, L, us, vs);
    has = !us.empty();
    return has ? mean(us) : 0.0;
}

// centered copy of the whole file: per-window unmasked gaze mean removed
// from the gaze channels and from the box-center channels, masked rows zero
struct Centered {
    int T = 0, C = 0;
    std::vector<double> x;       // [n][T][C]
    std::vector<uint8_t> mask;   // [n][T]
    std::vector<int> labels;
};

Centered center_features(const FeatureFile& ff, FeatureSet set) {
    Centered c;
    c.T = ff.crop_length;
    c.C = (int)ff.channels.size();
    const int n = (int)ff.records.size();
    c.x.assign((size_t)n * c.T * c.C, 0.0);
    c.mask.assign((size_t)n * c.T, 0);
    c.labels.resize(n);
    const bool gaze_channels = set == FeatureSet::raw ||
                               set == FeatureSet::raw_target ||
                               set == FeatureSet::all;
    for (int i = 0; i < n; ++i) {
        const FeatureSeries& s = ff.records[i].series;
        c.labels[i] = label_of(ff.records[i]);
        double gx = 0.0, gy = 0.0;
        int cnt = 0;
        if (gaze_channels) {
            for (int t = 0; t < c.T; ++t)
                if (s.mask[t]) {
                    gx += s.at(t, 0);
                    gy += s.at(t, 1);
                    ++cnt;
                }
            if (cnt > 0) {
                gx /= cnt;
                gy /= cnt;
            }
        }
        for (int t = 0; t < c.T; ++t) {
            c.mask[(size_t)i * c.T + t] = s.mask[t];
            if (!s.mask[t]) continue;
            double* row = c.x.data() + ((size_t)i * c.T + t) * c.C;
            for (int ch = 0; ch < c.C; ++ch) row[ch] = s.at(t, ch);
            if (gaze_channels && cnt > 0) {
                row[0] -= gx;
                row[1] -= gy;
                if (c.C > 2) {
                    row[2] -= gx;
                    row[3] -= gy;
                }
            }
        }
    }
    return c;
}

void channel_stats(const Centered& c, const std::vector<int>& idx,
                   std::vector<double>& mu, std::vector<double>& sd) {
    mu.assign(c.C, 0.0);
    sd.assign(c.C, 1.0);
    for (int ch = 0; ch < c.C; ++ch) {
        double s1 = 0.0, s2 = 0.0;
        int64_t cnt = 0;
        for (int i : idx)
            for (int t = 0; t < c.T; ++t) {
                if (!c.mask[(size_t)i * c.T + t]) continue;
                const double v = c.x[((size_t)i * c.T + t) * c.C + ch];
                s1 += v;
                s2 += v * v;
                ++cnt;
            }
        if (cnt == 0) continue;
        const double m = s1 / cnt;
        const double var = std::max(0.0, s2 / cnt - m * m);
        mu[ch] = m;
        sd[ch] = std::sqrt(var) + 1e-8;
    }
}

SeqData normalize_subset(const Centered& c, const std::vector<int>& idx,
                         const std::vector<double>& mu, const std::vector<double>& sd) {
    SeqData out;
    out.n = (int)idx.size();
    out.T = c.T;
    out.C = c.C;
    out.x.assign((size_t)out.n * c.T * c.C, 0.0f);
    out.mask.assign((size_t)out.n * c.T, 0);
    out.labels.resize(out.n);
    for (int k = 0; k < out.n; ++k) {
        const int i = idx[k];
        out.labels[k] = c.labels[i];
        for (int t = 0; t < c.T; ++t) {
            const uint8_t m = c.mask[(size_t)i * c.T + t];
            out.mask[(size_t)k * c.T + t] = m;
            if (!m) continue;
            for (int ch = 0; ch < c.C; ++ch)
                out.x[((size_t)k * c.T + t) * c.C + ch] =
                    (float)((c.x[((size_t)i * c.T + t) * c.C + ch] - mu[ch]) / sd[ch]);
        }
    }
    return out;
}

// even deterministic subsample of at most cap points, order preserved
void cap_points(std::vector<Point2>& pts, int cap) {
    const int n = (int)pts.size();
    if (cap <= 0 || n <= cap) return;
    std::vector<Point2> kept(cap);
    for (int i = 0; i < cap; ++i)
        kept[i] = pts[(size_t)((int64_t)i * n / cap)];
    pts.swap(kept);
}

double classical_fold_acc(const FeatureFile& ff, ModelKind model,
                          const std::vector<int>& train, const std::vector<int>& test,
                          int L, uint64_t fold_seed, const CvOptions& opt) {
    switch (model) {
        case ModelKind::gbt:
        case ModelKind::svm:
        case ModelKind::logreg: {
            const FlatData tr = flatten(ff, train, L);
            const FlatData te = flatten(ff, test, L);
            std::vector<int> pred(te.n);
            if (model == ModelKind::gbt) {
                const GbtModel m = gbt_fit(tr, opt.gbt);
                for (int i = 0; i < te.n; ++i) pred[i] = m.predict(te.row(i));
            } else if (model == ModelKind::svm) {
                const LinearModel m = svm_fit(tr, opt.svm_c, opt.svm_epochs);
                for (int i = 0; i < te.n; ++i) pred[i] = svm_predict(m, te.row(i), te.d);
            } else {
                const LinearModel m = logreg_fit(tr, opt.logreg_l2, opt.logreg_epochs);
                for (int i = 0; i < te.n; ++i) pred[i] = logreg_predict(m, te.row(i), te.d);
            }
            return accuracy(pred, te.y);
        }
        case ModelKind::handedness: {
            std::vector<double> u_tr(train.size());
            std::vector<uint8_t> has_tr(train.size());
            std::vector<int> y_tr(train.size());
            for (size_t i = 0; i < train.size(); ++i) {
                bool has = false;
                u_tr[i] = series_mean_u(ff.records[train[i]].series, L, has);
                has_tr[i] = has;
                y_tr[i] = label_of(ff.records[train[i]]);
            }
            const HandednessModel m = handedness_fit(u_tr, has_tr, y_tr);
            std::vector<int> pred(test.size()), y_te(test.size());
            for (size_t i = 0; i < test.size(); ++i) {
                bool has = false;
                const double u = series_mean_u(ff.records[test[i]].series, L, has);
                pred[i] = handedness_predict(m, u, has);
                y_te[i] = label_of(ff.records[test[i]]);
            }
            return accuracy(pred, y_te);
        }
        case ModelKind::gmm: {
            std::vector<Point2> insp, manip;
            std::vector<double> us, vs;
            for (int i : train) {
                series_uv(ff.records[i].series, L, us, vs);
                std::vector<Point2>& dst =
                    label_of(ff.records[i]) ? manip : insp;
                for (size_t p = 0; p < us.size(); ++p)
                    dst.push_back({us[p], vs[p]});
            }
            cap_points(insp, opt.gmm_train_cap);
            cap_points(manip, opt.gmm_train_cap);
            const SelectKResult mi =
                select_k(insp, opt.gmm_k_min, opt.gmm_k_max, opt.gmm_seeds_per_k,
                         derive_seed(fold_seed, 7));
            const SelectKResult mm =
                select_k(manip, opt.gmm_k_min, opt.gmm_k_max, opt.gmm_seeds_per_k,
                         derive_seed(fold_seed, 8));
            std::vector<int> pred(test.size()), y_te(test.size());
            for (size_t i = 0; i < test.size(); ++i) {
                series_uv(ff.records[test[i]].series, L, us, vs);
                std::vector<Point2> pts(us.size());
                for (size_t p = 0; p < us.size(); ++p) pts[p] = {us[p], vs[p]};
                Intent out = Intent::inspection;  // no evidence defaults here
                if (!pts.empty()) out = gmm_classify(pts, mi.model, mm.model);
                pred[i] = out == Intent::manipulation ? 1 : 0;
                y_te[i] = label_of(ff.records[test[i]]);
            }
            return accuracy(pred, y_te);
        }
        default:
            throw ConfigError("classical_fold_acc: not a classical model");
    }
}

void finalize_cell(CellResult& cell) {
    if (!cell.fold_acc.empty()) {
        cell.mean = mean(cell.fold_acc);
        cell.stddev = stddev_pop(cell.fold_acc);
        cell.chance_level = std::fabs(cell.mean - 0.5) <= 2.0 * cell.stddev;
    }
}

void require_runnable(const FeatureFile& ff, ModelKind model, const SplitPlan& split) {
    const FeatureSet set = feature_set_from_name(ff.feature_set);
    if (!combination_feasible(model, set))
        throw InfeasibleCombination(std::string(model_kind_name(model)) + " cannot run on " +
                                    ff.feature_set + " features");
    if (split.fold_of.size() != ff.records.size())
        throw ConfigError("split does not match the feature file");
}

}  // namespace

CellResult run_cv(const FeatureFile& ff, ModelKind model, const SplitPlan& split,
                  uint64_t seed, const CvOptions& opt) {
    require_runnable(ff, model, split);
    CellResult cell;
    cell.model = model;
    cell.features = feature_set_from_name(ff.feature_set);
    cell.scheme = split.scheme;
    cell.seed = seed;
    cell.n_folds = split.n_folds;

    Centered centered;
    if (model == ModelKind::midas)
        centered = center_features(ff, cell.features);

    std::vector<int> train, test;
    for (int f = 0; f < split.n_folds; ++f) {
        fold_indices(split, f, train, test);
        if (test.empty() || train.empty() || single_class(ff, train)) {
            cell.skipped_folds.push_back(f);
            if (opt.log)
                opt.log("skipping " + split.fold_names[f] +
                        (test.empty() || train.empty() ? ": empty side"
                                                       : ": single-class training set"));
            continue;
        }
        const uint64_t fold_seed = derive_seed(seed, 1000 + (uint64_t)f);
        double acc = 0.0;
        if (model == ModelKind::midas) {
            std::vector<double> mu, sd;
            channel_stats(centered, train, mu, sd);
            const SeqData tr = normalize_subset(centered, train, mu, sd);
            const SeqData te = normalize_subset(centered, test, mu, sd);
            MidasConfig mc = opt.midas;
            mc.input_channels = tr.C;
            EpochCallback on_epoch;
            if (opt.log)
                on_epoch = [&](int ep, double loss, double va) {
                    char buf[96];
                    std::snprintf(buf, sizeof buf, "%s epoch %d loss %.4f val %.3f",
                                  split.fold_names[f].c_str(), ep + 1, loss, va);
                    opt.log(buf);
                };
            FitResult fit = fit_midas(mc, tr, fold_seed, on_epoch);
            acc = accuracy(predict_midas(fit.net, te, te.T), te.labels);
            if (!opt.checkpoint_prefix.empty())
                save_checkpoint(fit.net, fit.log, fold_seed,
                                opt.checkpoint_prefix + "_" + split.fold_names[f] + ".json");
        } else {
            acc = classical_fold_acc(ff, model, train, test, 0, fold_seed, opt);
        }
        cell.fold_acc.push_back(acc);
        if (opt.log) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s accuracy %.4f", split.fold_names[f].c_str(), acc);
            opt.log(buf);
        }
    }
    finalize_cell(cell);
    return cell;
}

CurveResult accuracy_over_time(const FeatureFile& ff, ModelKind model,
                               const SplitPlan& split,
                               const std::vector<int>& lengths, uint64_t seed,
                               const CvOptions& opt) {
    require_runnable(ff, model, split);
    if (ff.is_hist)
        throw InfeasibleCombination("histogram features cannot be truncated over time");
    if (lengths.empty()) throw ConfigError("no lengths given");
    for (int L : lengths)
        if (L < 1 || L > ff.crop_length)
            throw ConfigError("curve length out of range: " + std::to_string(L));

    CurveResult curve;
    curve.model = model;
    curve.features = feature_set_from_name(ff.feature_set);
    curve.scheme = split.scheme;
    curve.seed = seed;

    std::vector<double> sums(lengths.size(), 0.0);
    int used_folds = 0;
    Centered centered;
    if (model == ModelKind::midas)
        centered = center_features(ff, curve.features);

    std::vector<int> train, test;
    for (int f = 0; f < split.n_folds; ++f) {
        fold_indices(split, f, train, test);
        if (test.empty() || train.empty() || single_class(ff, train)) continue;
        const uint64_t fold_seed = derive_seed(seed, 1000 + (uint64_t)f);
        if (model == ModelKind::midas) {
            std::vector<double> mu, sd;
            channel_stats(centered, train, mu, sd);
            const SeqData tr = normalize_subset(centered, train, mu, sd);
            const SeqData te = normalize_subset(centered, test, mu, sd);
            MidasConfig mc = opt.midas;
            mc.input_channels = tr.C;
            FitResult fit = fit_midas(mc, tr, fold_seed);
            for (size_t li = 0; li < lengths.size(); ++li)
                sums[li] += accuracy(predict_midas(fit.net, te, lengths[li]), te.labels);
        } else {
            for (size_t li = 0; li < lengths.size(); ++li)
                sums[li] += classical_fold_acc(ff, model, train, test, lengths[li],
                                               fold_seed, opt);
        }
        ++used_folds;
        if (opt.log) opt.log(split.fold_names[f] + " curve done");
    }
    if (used_folds == 0) throw ConfigError("no usable folds for the curve");
    for (size_t li = 0; li < lengths.size(); ++li)
        curve.points.push_back({lengths[li], sums[li] / used_folds});
    return curve;
}

namespace {

int set_order(FeatureSet s) { return (int)s; }

bool cell_key_less(const CellResult& a, const CellResult& b) {
    if (a.features != b.features) return set_order(a.features) < set_order(b.features);
    if (a.model != b.model) return (int)a.model < (int)b.model;
    return (int)a.scheme < (int)b.scheme;
}

bool curve_key_less(const CurveResult& a, const CurveResult& b) {
    if (a.features != b.features) return set_order(a.features) < set_order(b.features);
    if (a.model != b.model) return (int)a.model < (int)b.model;
    return (int)a.scheme < (int)b.scheme;
}

std::string fmt_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

const char* set_display(FeatureSet s) {
    switch (s) {
        case FeatureSet::raw: return "raw gaze";
        case FeatureSet::raw_target: return "raw gaze + target";
        case FeatureSet::distance: return "gaze-target distances";
        case FeatureSet::speed: return "gaze speeds";
        case FeatureSet::all: return "all time series";
        case FeatureSet::hist_dist: return "histogrammed distances";
        case FeatureSet::hist_speed: return "histogrammed speeds";
    }
    return "?";
}

const char* model_display(ModelKind m) {
    switch (m) {
        case ModelKind::midas: return "MIDAS";
        case ModelKind::gbt: return "GBT";
        case ModelKind::svm: return "SVM";
        case ModelKind::logreg: return "LogReg";
        case ModelKind::handedness: return "Handedness";
        case ModelKind::gmm: return "GMM";
    }
    return "?";
}

}  // namespace

void EvalReport::upsert(const CellResult& cell) {
    for (CellResult& c : cells)
        if (c.model == cell.model && c.features == cell.features && c.scheme == cell.scheme) {
            c = cell;
            return;
        }
    cells.push_back(cell);
    std::stable_sort(cells.begin(), cells.end(), cell_key_less);
}

void EvalReport::upsert(const CurveResult& curve) {
    for (CurveResult& c : curves)
        if (c.model == curve.model && c.features == curve.features && c.scheme == curve.scheme) {
            c = curve;
            return;
        }
    curves.push_back(curve);
    std::stable_sort(curves.begin(), curves.end(), curve_key_less);
}

nlohmann::ordered_json report_to_json(const EvalReport& r) {
    ordered_json j;
    j["schema_version"] = 1;
    j["kind"] = "eval_report";
    ordered_json cells = ordered_json::array();
    for (const CellResult& c : r.cells) {
        ordered_json jc;
        jc["model"] = model_kind_name(c.model);
        jc["features"] = feature_set_name(c.features);
        jc["scheme"] = scheme_name(c.scheme);
        jc["seed"] = c.seed;
        jc["n_folds"] = c.n_folds;
        jc["fold_acc"] = c.fold_acc;
        jc["skipped_folds"] = c.skipped_folds;
        jc["mean"] = c.mean;
        jc["stddev"] = c.stddev;
        jc["chance_level"] = c.chance_level;
        cells.push_back(jc);
    }
    j["cells"] = cells;
    ordered_json curves = ordered_json::array();
    for (const CurveResult& c : r.curves) {
        ordered_json jc;
        jc["model"] = model_kind_name(c.model);
        jc["features"] = feature_set_name(c.features);
        jc["scheme"] = scheme_name(c.scheme);
        jc["seed"] = c.seed;
        ordered_json pts = ordered_json::array();
        for (const CurvePoint& p : c.points) {
            ordered_json jp;
            jp["length"] = p.length;
            jp["acc"] = p.acc;
            pts.push_back(jp);
        }
        jc["points"] = pts;
        curves.push_back(jc);
    }
    j["curves"] = curves;
    return j;
}

EvalReport report_from_json(const json& j) {
    if (j.value("kind", "") != "eval_report")
        throw SchemaError("not an eval report");
    if (j.value("schema_version", 0) != 1)
        throw SchemaError("unsupported report schema version");
    EvalReport r;
    for (const json& jc : j.at("cells")) {
        CellResult c;
        c.model = model_kind_from_name(jc.at("model").get<std::string>());
        c.features = feature_set_from_name(jc.at("features").get<std::string>());
        c.scheme = scheme_from_name(jc.at("scheme").get<std::string>());
        c.seed = jc.value("seed", (uint64_t)0);
        c.n_folds = jc.value("n_folds", 0);
        c.fold_acc = jc.value("fold_acc", std::vector<double>{});
        c.skipped_folds = jc.value("skipped_folds", std::vector<int>{});
        c.mean = jc.value("mean", 0.0);
        c.stddev = jc.value("stddev", 0.0);
        c.chance_level = jc.value("chance_level", false);
        r.cells.push_back(c);
    }
    for (const json& jc : j.at("curves")) {
        CurveResult c;
        c.model = model_kind_from_name(jc.at("model").get<std::string>());
        c.features = feature_set_from_name(jc.at("features").get<std::string>());
        c.scheme = scheme_from_name(jc.at("scheme").get<std::string>());
        c.seed = jc.value("seed", (uint64_t)0);
        for (const json& jp : jc.at("points"))
            c.points.push_back({jp.at("length").get<int>(), jp.at("acc").get<double>()});
        r.curves.push_back(c);
    }
    std::stable_sort(r.cells.begin(), r.cells.end(), cell_key_less);
    std::stable_sort(r.curves.begin(), r.curves.end(), curve_key_less);
    return r;
}

void save_report(const EvalReport& r, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw LoadError("cannot write " + path);
    f << report_to_json(r).dump(2) << "\n";
}

EvalReport load_report(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw LoadError("cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw LoadError("bad report file: " + std::string(e.what()));
    }
    return report_from_json(j);
}

namespace {

const FeatureSet kReportSets[] = {
    FeatureSet::raw,      FeatureSet::raw_target, FeatureSet::distance,
    FeatureSet::speed,    FeatureSet::all,        FeatureSet::hist_dist,
    FeatureSet::hist_speed};
const ModelKind kReportModels[] = {ModelKind::midas, ModelKind::gbt, ModelKind::svm,
                                   ModelKind::logreg, ModelKind::handedness};

std::string cell_text(const EvalReport& r, FeatureSet set, ModelKind model,
                      CvScheme scheme) {
    if (!combination_feasible(model, set)) return "N/A";
    for (const CellResult& c : r.cells)
        if (c.model == model && c.features == set && c.scheme == scheme) {
            std::string s = fmt_g9(c.mean) + " ± " + fmt_g9(c.stddev);
            if (c.chance_level) s += " (chance)";
            return s;
        }
    return "";
}

bool scheme_has_cells(const EvalReport& r, CvScheme scheme) {
    for (const CellResult& c : r.cells)
        if (c.scheme == scheme) return true;
    return false;
}

void render_grid_csv(const EvalReport& r, CvScheme scheme, bool rows, std::string& out) {
    out += "feature";
    for (ModelKind m : kReportModels) {
        out += ",";
        out += model_display(m);
    }
    out += "\n";
    if (!rows) return;
    for (FeatureSet s : kReportSets) {
        out += set_display(s);
        for (ModelKind m : kReportModels) out += "," + cell_text(r, s, m, scheme);
        out += "\n";
    }
}

void render_grid_md(const EvalReport& r, CvScheme scheme, bool rows, std::string& out) {
    out += "| Feature set |";
    for (ModelKind m : kReportModels) {
        out += " ";
        out += model_display(m);
        out += " |";
    }
    out += "\n|---|";
    for (ModelKind m : kReportModels) {
        (void)m;
        out += "---|";
    }
    out += "\n";
    if (!rows) return;
    for (FeatureSet s : kReportSets) {
        out += "| ";
        out += set_display(s);
        out += " |";
        for (ModelKind m : kReportModels) {
            const std::string t = cell_text(r, s, m, scheme);
            out += " " + (t.empty() ? std::string(" ") : t) + " |";
        }
        out += "\n";
    }
}

}  // namespace

std::string render_report(const EvalReport& r, const std::string& format) {
    const bool csv = format == "csv";
    if (!csv && format != "md")
        throw ConfigError("unknown report format: " + format);
    std::string out;
    const bool have_kfold = scheme_has_cells(r, CvScheme::kfold5);
    const bool have_loso = scheme_has_cells(r, CvScheme::loso);
    if (csv) {
        render_grid_csv(r, CvScheme::kfold5, have_kfold, out);
        if (have_loso) {
            out += "\n# leave-one-subject-out\n";
            render_grid_csv(r, CvScheme::loso, true, out);
        }
    } else {
        out += "## 5-fold cross validation\n\n";
        render_grid_md(r, CvScheme::kfold5, have_kfold, out);
        if (have_loso) {
            out += "\n## Leave-one-subject-out\n\n";
            render_grid_md(r, CvScheme::loso, true, out);
        }
    }
    return out;
}

std::string render_curve_csv(const CurveResult& c) {
    std::string out = "length,accuracy\n";
    for (const CurvePoint& p : c.points)
        out += std::to_string(p.length) + "," + fmt_g9(p.acc) + "\n";
    return out;
}

}  // namespace midas
