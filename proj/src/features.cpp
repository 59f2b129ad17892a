#include "midas/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "midas/parallel.hpp"
#include "midas/stats.hpp"

using ordered_json = nlohmann::ordered_json;

namespace midas {

InterpTrack interpolate_track(const Track& track, const std::vector<GazeSample>& gaze_clock) {
    size_t n = gaze_clock.size();
    InterpTrack out;
    out.bbox.assign(n, {0.0, 0.0, 0.0, 0.0});
    out.ok.assign(n, 0);
    if (n == 0) return out;

    for (const auto& det : track.dets) {
        auto it = std::lower_bound(gaze_clock.begin(), gaze_clock.end(), det.t,
                                   [](const GazeSample& g, double t) { return g.t < t; });
        size_t gi = static_cast<size_t>(it - gaze_clock.begin());
        if (gi < n) {
            out.bbox[gi] = det.bbox;
            out.ok[gi] = 1;
        }
    }

    size_t prev = n;
    for (size_t i = 0; i < n; ++i) {
        if (!out.ok[i]) continue;
        if (prev != n) {
            size_t gap = i - prev - 1;
            if (gap > 0 && gap < 100) {
                for (size_t j = prev + 1; j < i; ++j) {
                    double w = static_cast<double>(j - prev) / static_cast<double>(i - prev);
                    for (int c = 0; c < 4; ++c)
                        out.bbox[j][c] = out.bbox[prev][c] + w * (out.bbox[i][c] - out.bbox[prev][c]);
                    out.ok[j] = 1;
                }
            }
        }
        prev = i;
    }
    return out;
}

Window crop_trial(const Trial& trial, int length) {
    auto it = std::lower_bound(trial.gaze.begin(), trial.gaze.end(), trial.instruction_end_t,
                               [](const GazeSample& g, double t) { return g.t < t; });
    int i0 = static_cast<int>(it - trial.gaze.begin());
    int n = static_cast<int>(trial.gaze.size());
    if (i0 >= n) throw EmptyWindow("trial '" + trial.trial_id + "' has no post-instruction samples");

    Window w;
    w.start = i0;
    w.n_real = std::min(length, n - i0);
    w.t.resize(length);
    w.x.assign(length, 0.0);
    w.y.assign(length, 0.0);
    w.valid.assign(length, 0);
    double dt = 1.0 / 120.0;
    for (int i = 0; i < length; ++i) {
        if (i < w.n_real) {
            const auto& g = trial.gaze[i0 + i];
            w.t[i] = g.t;
            w.x[i] = g.x;
            w.y[i] = g.y;
            w.valid[i] = g.valid ? 1 : 0;
        } else {
            w.t[i] = w.t[i - 1] + dt;
        }
    }
    return w;
}

std::vector<double> speed_series(const Window& w, double rate, std::vector<uint8_t>& mask_out) {
    int T = static_cast<int>(w.x.size());
    std::vector<double> s(T, 0.0);
    mask_out.assign(T, 0);
    for (int i = 0; i + 1 < T; ++i) {
        if (w.valid[i] && w.valid[i + 1]) {
            s[i] = std::hypot(w.x[i + 1] - w.x[i], w.y[i + 1] - w.y[i]) * rate;
            mask_out[i] = 1;
        }
    }
    return s;
}

std::vector<double> distance_series(const Window& w, const InterpTrack& track, int offset,
                                    std::vector<uint8_t>& mask_out) {
    int T = static_cast<int>(w.x.size());
    std::vector<double> d(T, 0.0);
    mask_out.assign(T, 0);
    for (int i = 0; i < T; ++i) {
        int gi = offset + i;
        if (!w.valid[i] || gi >= static_cast<int>(track.ok.size()) || !track.ok[gi]) continue;
        const auto& bb = track.bbox[gi];
        double cx = (bb[0] + bb[2]) / 2.0, cy = (bb[1] + bb[3]) / 2.0;
        d[i] = std::hypot(w.x[i] - cx, w.y[i] - cy);
        mask_out[i] = 1;
    }
    return d;
}

UV normalize_to_bbox(double x, double y, const std::array<double, 4>& bbox) {
    UV r;
    double dx = bbox[2] - bbox[0], dy = bbox[3] - bbox[1];
    r.u = (x - bbox[0]) / std::max(dx, 1e-9);
    r.v = (y - bbox[1]) / std::max(dy, 1e-9);
    r.off_target = r.u < 0.0 || r.u > 1.0 || r.v < 0.0 || r.v > 1.0;
    return r;
}

HistogramFeature histogram(const std::vector<double>& values, const std::vector<uint8_t>& mask,
                           int bins, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("histogram: range lo must be < hi");
    if (bins <= 0) throw std::invalid_argument("histogram: bins must be positive");
    HistogramFeature h;
    h.bins = bins;
    h.lo = lo;
    h.hi = hi;
    h.counts.assign(bins, 0.0);
    double total = 0.0;
    for (size_t i = 0; i < values.size(); ++i) {
        if (i < mask.size() && !mask[i]) continue;
        int b = static_cast<int>(std::floor((values[i] - lo) / (hi - lo) * bins));
        b = std::clamp(b, 0, bins - 1);
        h.counts[b] += 1.0;
        total += 1.0;
    }
    if (total == 0.0) {
        h.empty = true;
        return h;
    }
    for (double& c : h.counts) c /= total;
    return h;
}

void on_target_uv(const Trial& trial, int length, std::vector<double>& us,
                  std::vector<double>& vs) {
    Window w = crop_trial(trial, length);
    const Track* target = trial.find_track(trial.target_label);
    if (target == nullptr) return;
    InterpTrack it = interpolate_track(*target, trial.gaze);
    for (int i = 0; i < length; ++i) {
        int gi = w.start + i;
        if (!w.valid[i] || gi >= static_cast<int>(it.ok.size()) || !it.ok[gi]) continue;
        UV uv = normalize_to_bbox(w.x[i], w.y[i], it.bbox[gi]);
        if (!uv.off_target) {
            us.push_back(uv.u);
            vs.push_back(uv.v);
        }
    }
}

std::vector<double> trial_speeds(const Trial& trial, int length) {
    Window w = crop_trial(trial, length);
    std::vector<uint8_t> m;
    std::vector<double> s = speed_series(w, 120.0, m);
    std::vector<double> out;
    for (size_t i = 0; i < s.size(); ++i)
        if (m[i]) out.push_back(s[i]);
    return out;
}

double path_length(const Trial& trial, int length) {
    Window w = crop_trial(trial, length);
    double total = 0.0;
    for (int i = 0; i + 1 < static_cast<int>(w.x.size()); ++i)
        if (w.valid[i] && w.valid[i + 1])
            total += std::hypot(w.x[i + 1] - w.x[i], w.y[i + 1] - w.y[i]);
    return total;
}

const char* feature_set_name(FeatureSet s) {
    switch (s) {
        case FeatureSet::raw: return "raw";
        case FeatureSet::raw_target: return "raw+target";
        case FeatureSet::distance: return "distance";
        case FeatureSet::speed: return "speed";
        case FeatureSet::all: return "all";
        case FeatureSet::hist_dist: return "hist-dist";
        case FeatureSet::hist_speed: return "hist-speed";
    }
    return "?";
}

FeatureSet feature_set_from_name(const std::string& name) {
    for (FeatureSet s : {FeatureSet::raw, FeatureSet::raw_target, FeatureSet::distance,
                         FeatureSet::speed, FeatureSet::all, FeatureSet::hist_dist,
                         FeatureSet::hist_speed})
        if (name == feature_set_name(s)) return s;
    throw ConfigError("unknown feature set '" + name + "'");
}

bool feature_set_is_hist(FeatureSet s) {
    return s == FeatureSet::hist_dist || s == FeatureSet::hist_speed;
}

bool feature_set_is_sequential(FeatureSet s) { return !feature_set_is_hist(s); }

static std::vector<std::string> channels_for(FeatureSet set) {
    switch (set) {
        case FeatureSet::raw: return {"gaze_x", "gaze_y"};
        case FeatureSet::raw_target:
            return {"gaze_x", "gaze_y", "target_x", "target_y", "target_w", "target_h"};
        case FeatureSet::distance: return {"distance"};
        case FeatureSet::speed: return {"speed"};
        case FeatureSet::all:
            return {"gaze_x", "gaze_y", "target_x", "target_y", "target_w", "target_h",
                    "distance", "speed"};
        default: return {};
    }
}

FeatureSeries build_series(const Trial& trial, FeatureSet set, int length) {
    if (feature_set_is_hist(set))
        throw ConfigError("build_series: histogram sets have no per-sample series");

    Window w = crop_trial(trial, length);
    FeatureSeries fs;
    fs.channels = channels_for(set);
    fs.T = length;
    fs.C = static_cast<int>(fs.channels.size());
    fs.crop_length = length;
    fs.sample_rate = 120.0;
    fs.values.assign(static_cast<size_t>(length) * fs.C, 0.0);

    bool needs_track = set == FeatureSet::raw_target || set == FeatureSet::distance ||
                       set == FeatureSet::all;
    InterpTrack track;
    if (needs_track) {
        const Track* target = trial.find_track(trial.target_label);
        if (target != nullptr) track = interpolate_track(*target, trial.gaze);
    }
    auto track_ok = [&](int i) {
        int gi = w.start + i;
        return gi < static_cast<int>(track.ok.size()) && track.ok[gi] != 0;
    };

    std::vector<uint8_t> speed_mask, dist_mask;
    std::vector<double> speed, dist;
    if (set == FeatureSet::speed || set == FeatureSet::all)
        speed = speed_series(w, fs.sample_rate, speed_mask);
    if (set == FeatureSet::distance || set == FeatureSet::all)
        dist = distance_series(w, track, w.start, dist_mask);

    // The single mask records gaze validity for multichannel sets; channels
    // with extra validity constraints (track presence, speed pairing) zero
    // their own entries. Single-channel sets carry that channel's mask.
    switch (set) {
        case FeatureSet::distance: fs.mask = dist_mask; break;
        case FeatureSet::speed: fs.mask = speed_mask; break;
        default: fs.mask = w.valid; break;
    }

    for (int i = 0; i < length; ++i) {
        if (set == FeatureSet::distance) {
            fs.at(i, 0) = dist[i];
            continue;
        }
        if (set == FeatureSet::speed) {
            fs.at(i, 0) = speed[i];
            continue;
        }
        if (!w.valid[i]) continue;
        fs.at(i, 0) = w.x[i];
        fs.at(i, 1) = w.y[i];
        if (set == FeatureSet::raw) continue;
        if (track_ok(i)) {
            const auto& bb = track.bbox[w.start + i];
            fs.at(i, 2) = (bb[0] + bb[2]) / 2.0;
            fs.at(i, 3) = (bb[1] + bb[3]) / 2.0;
            fs.at(i, 4) = bb[2] - bb[0];
            fs.at(i, 5) = bb[3] - bb[1];
        }
        if (set == FeatureSet::all) {
            fs.at(i, 6) = dist_mask[i] ? dist[i] : 0.0;
            fs.at(i, 7) = speed_mask[i] ? speed[i] : 0.0;
        }
    }
    return fs;
}

FeatureFile build_features(const Dataset& ds, FeatureSet set, int length) {
    FeatureFile ff;
    ff.feature_set = feature_set_name(set);
    ff.is_hist = feature_set_is_hist(set);
    ff.channels = channels_for(set);
    ff.crop_length = length;
    ff.subjects = ds.subjects;

    if (ff.is_hist) {
        if (set == FeatureSet::hist_dist) {
            double w = ds.trials.empty() ? 1920.0 : ds.trials[0].frame_size[0];
            double h = ds.trials.empty() ? 1080.0 : ds.trials[0].frame_size[1];
            ff.hist_lo = 0.0;
            ff.hist_hi = std::hypot(w, h);
        } else {
            std::vector<double> pool;
            for (const auto& t : ds.trials) {
                auto s = trial_speeds(t, length);
                pool.insert(pool.end(), s.begin(), s.end());
            }
            ff.hist_lo = 0.0;
            ff.hist_hi = pool.empty() ? 1.0 : std::max(percentile(pool, 99.5), 1e-9);
        }
    }

    ff.records.resize(ds.trials.size());
    const Trial* trials = ds.trials.data();
    FeatureRecord* recs = ff.records.data();
    const FeatureFile& cff = ff;
    parallel_for(static_cast<int64_t>(ds.trials.size()), [&, trials, recs](int64_t i) {
        const Trial& t = trials[i];
        FeatureRecord r;
        r.trial_id = t.trial_id;
        r.subject_id = t.subject_id;
        r.intent = t.intent;
        if (cff.is_hist) {
            Window w = crop_trial(t, length);
            std::vector<uint8_t> mask;
            std::vector<double> vals;
            if (set == FeatureSet::hist_dist) {
                const Track* target = t.find_track(t.target_label);
                InterpTrack track;
                if (target != nullptr) track = interpolate_track(*target, t.gaze);
                vals = distance_series(w, track, w.start, mask);
            } else {
                vals = speed_series(w, 120.0, mask);
            }
            r.hist = histogram(vals, mask, cff.hist_bins, cff.hist_lo, cff.hist_hi);
        } else {
            r.series = build_series(t, set, length);
        }
        recs[i] = std::move(r);
    });
    return ff;
}

void save_features(const FeatureFile& ff, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot open for writing: " + path);

    ordered_json manifest;
    manifest["schema_version"] = 1;
    manifest["kind"] = "features";
    manifest["feature_set"] = ff.feature_set;
    manifest["is_hist"] = ff.is_hist;
    manifest["channels"] = ff.channels;
    manifest["crop_length"] = ff.crop_length;
    manifest["sample_rate"] = ff.sample_rate;
    if (ff.is_hist) {
        manifest["hist_bins"] = ff.hist_bins;
        manifest["hist_range"] = {quantize9(ff.hist_lo), quantize9(ff.hist_hi)};
    }
    manifest["subjects"] = ff.subjects;
    manifest["n_records"] = ff.records.size();
    out << manifest.dump() << "\n";

    for (const auto& r : ff.records) {
        ordered_json j;
        j["trial_id"] = r.trial_id;
        j["subject_id"] = r.subject_id;
        j["intent"] = intent_name(r.intent);
        if (ff.is_hist) {
            std::vector<double> counts;
            for (double c : r.hist.counts) counts.push_back(quantize9(c));
            j["counts"] = counts;
            j["empty"] = r.hist.empty;
        } else {
            std::vector<double> vals;
            vals.reserve(r.series.values.size());
            for (double v : r.series.values) vals.push_back(quantize9(v));
            j["values"] = vals;
            std::vector<int> mask(r.series.mask.begin(), r.series.mask.end());
            j["mask"] = mask;
        }
        out << j.dump() << "\n";
    }
    if (!out) throw LoadError("write failed: " + path);
}

FeatureFile load_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw LoadError("empty file: " + path);

    ordered_json manifest;
    try {
        manifest = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(path + " line 1: " + e.what());
    }
    if (!manifest.contains("schema_version") || manifest["schema_version"].get<int>() != 1)
        throw SchemaError("unsupported schema version in " + path);
    if (manifest.value("kind", std::string()) != "features")
        throw SchemaError("not a feature file: " + path);

    FeatureFile ff;
    ff.feature_set = manifest["feature_set"].get<std::string>();
    ff.is_hist = manifest["is_hist"].get<bool>();
    ff.channels = manifest["channels"].get<std::vector<std::string>>();
    ff.crop_length = manifest["crop_length"].get<int>();
    ff.sample_rate = manifest["sample_rate"].get<double>();
    if (ff.is_hist) {
        ff.hist_bins = manifest["hist_bins"].get<int>();
        ff.hist_lo = manifest["hist_range"][0].get<double>();
        ff.hist_hi = manifest["hist_range"][1].get<double>();
    }
    ff.subjects = manifest["subjects"].get<std::vector<std::string>>();

    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw LoadError(path + " line " + std::to_string(lineno) + ": " + e.what());
        }
        FeatureRecord r;
        r.trial_id = j["trial_id"].get<std::string>();
        r.subject_id = j["subject_id"].get<std::string>();
        r.intent = j["intent"].get<std::string>() == "inspection" ? Intent::inspection
                                                                  : Intent::manipulation;
        if (ff.is_hist) {
            r.hist.counts = j["counts"].get<std::vector<double>>();
            r.hist.bins = ff.hist_bins;
            r.hist.lo = ff.hist_lo;
            r.hist.hi = ff.hist_hi;
            r.hist.empty = j["empty"].get<bool>();
        } else {
            r.series.channels = ff.channels;
            r.series.T = ff.crop_length;
            r.series.C = static_cast<int>(ff.channels.size());
            r.series.crop_length = ff.crop_length;
            r.series.sample_rate = ff.sample_rate;
            r.series.values = j["values"].get<std::vector<double>>();
            auto m = j["mask"].get<std::vector<int>>();
            r.series.mask.assign(m.begin(), m.end());
            if (r.series.values.size() !=
                static_cast<size_t>(r.series.T) * static_cast<size_t>(r.series.C))
                throw LoadError(path + " line " + std::to_string(lineno) + ": bad values length");
        }
        ff.records.push_back(std::move(r));
    }
    return ff;
}

}  // namespace midas
