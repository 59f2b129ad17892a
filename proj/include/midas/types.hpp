#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace midas {

enum class Intent { inspection, manipulation };

enum class ManipulationKind { none, physical, imaginary };

inline const char* intent_name(Intent i) {
    return i == Intent::inspection ? "inspection" : "manipulation";
}

struct GazeSample {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    bool valid = true;
};

// bbox is (x_min, y_min, x_max, y_max) in pixels
struct ObjectDetection {
    double t = 0.0;
    std::array<double, 4> bbox{};
};

struct Track {
    std::string label;
    std::vector<ObjectDetection> dets;
};

struct Trial {
    std::string trial_id;
    std::string subject_id;
    Intent intent = Intent::inspection;
    ManipulationKind kind = ManipulationKind::none;
    std::string target_label;
    double instruction_end_t = 0.0;
    std::vector<GazeSample> gaze;
    std::vector<Track> tracks;
    std::array<int, 2> frame_size{1920, 1080};

    const Track* find_track(const std::string& label) const {
        for (const auto& tr : tracks)
            if (tr.label == label) return &tr;
        return nullptr;
    }
};

struct Provenance {
    std::string source = "synthetic";
    uint64_t seed = 0;
    std::string config_hash;
};

struct Dataset {
    std::vector<Trial> trials;
    std::vector<std::string> subjects;
    Provenance provenance;
};

struct FeatureSeries {
    std::vector<std::string> channels;
    int T = 0;
    int C = 0;
    std::vector<double> values;  // T x C row-major, zeros where masked
    std::vector<uint8_t> mask;   // length T
    double sample_rate = 120.0;
    int crop_length = 0;

    double at(int t, int c) const { return values[static_cast<size_t>(t) * C + c]; }
    double& at(int t, int c) { return values[static_cast<size_t>(t) * C + c]; }
};

struct HistogramFeature {
    int bins = 0;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> counts;  // normalized frequencies
    bool empty = false;          // fully-masked input; counts are all zero
};

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LoadError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Round to 9 significant digits by a formatting round trip. Generated data is
// quantized like this at construction so that dataset files re-print
// identically after any save/load cycle.
double quantize9(double v);

}  // namespace midas
