#pragma once

#include <array>
#include <string>
#include <vector>

#include "midas/types.hpp"

namespace midas {

struct EmptyWindow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Track resampled onto the gaze clock over the whole trial; interior gaps
// strictly shorter than 100 gaze samples are filled linearly, longer gaps and
// the leading/trailing ends stay masked.
struct InterpTrack {
    std::vector<std::array<double, 4>> bbox;  // zeros where not ok
    std::vector<uint8_t> ok;
};

InterpTrack interpolate_track(const Track& track, const std::vector<GazeSample>& gaze_clock);

struct Window {
    int start = 0;  // gaze index of the first sample at/after instruction end
    int n_real = 0; // samples before the padded tail
    std::vector<double> t, x, y;
    std::vector<uint8_t> valid;
};

Window crop_trial(const Trial& trial, int length = 400);

// speed[i] = |g[i+1]-g[i]| * rate, masked unless both samples are valid; the
// final slot is a masked zero so the channel keeps length T
std::vector<double> speed_series(const Window& w, double rate, std::vector<uint8_t>& mask_out);

std::vector<double> distance_series(const Window& w, const InterpTrack& track, int offset,
                                    std::vector<uint8_t>& mask_out);

struct UV {
    double u = 0.0;
    double v = 0.0;
    bool off_target = false;
};

UV normalize_to_bbox(double x, double y, const std::array<double, 4>& bbox);

HistogramFeature histogram(const std::vector<double>& values, const std::vector<uint8_t>& mask,
                           int bins, double lo, double hi);

// Normalized gaze positions that fall inside the (interpolated) target bbox
void on_target_uv(const Trial& trial, int length, std::vector<double>& us, std::vector<double>& vs);

// Speeds over valid sample pairs of the cropped window
std::vector<double> trial_speeds(const Trial& trial, int length = 400);

double path_length(const Trial& trial, int length = 400);

enum class FeatureSet { raw, raw_target, distance, speed, all, hist_dist, hist_speed };

const char* feature_set_name(FeatureSet s);
FeatureSet feature_set_from_name(const std::string& name);
bool feature_set_is_hist(FeatureSet s);
bool feature_set_is_sequential(FeatureSet s);

FeatureSeries build_series(const Trial& trial, FeatureSet set, int length = 400);

struct FeatureRecord {
    std::string trial_id;
    std::string subject_id;
    Intent intent = Intent::inspection;
    FeatureSeries series;
    HistogramFeature hist;
};

struct FeatureFile {
    std::string feature_set;
    bool is_hist = false;
    std::vector<std::string> channels;
    int crop_length = 400;
    double sample_rate = 120.0;
    int hist_bins = 32;
    double hist_lo = 0.0, hist_hi = 0.0;
    std::vector<std::string> subjects;
    std::vector<FeatureRecord> records;
};

// Histogram bin edges are frozen from the pool this call sees: distance uses
// [0, frame diagonal], speed uses [0, 99.5th percentile of pooled speeds].
FeatureFile build_features(const Dataset& ds, FeatureSet set, int length = 400);

void save_features(const FeatureFile& ff, const std::string& path);
FeatureFile load_features(const std::string& path);

}  // namespace midas
