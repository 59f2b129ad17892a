#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "midas/types.hpp"

namespace midas {

constexpr double kGazeHz = 120.0;
constexpr double kDetHz = 30.0;

extern const std::array<const char*, 6> kObjectLabels;

using Layout = std::vector<std::pair<std::string, std::array<double, 4>>>;

Layout default_layout();

// Every knob of the generative model lives here so calibration targets stay
// explicit and overridable from JSON.
struct GeneratorConfig {
    int n_subjects = 8;
    int trials_per_subject = 250;
    std::array<int, 2> frame_size{1920, 1080};
    Layout layout;  // empty -> default_layout()
    uint64_t rng_seed = 12;

    double manipulation_offset_x = 120.0;
    double inspection_distance_premium = 0.08;  // declared calibration target, checked by tests
    double physical_frac = 0.534;

    // subject population
    double centroid_sd_x = 150.0, centroid_sd_y = 80.0;
    double idle_spread_x = 170.0, idle_spread_y = 120.0;
    double idle_center_y = 702.0;
    double distance_bias_sigma = 0.22;
    double tremor_subj_sigma = 0.08;

    // per-trial scene variation
    double scene_sd_x = 600.0, scene_sd_y = 120.0;
    double drift_step_sd = 0.30;

    // fixation machinery
    double fix_dur_median = 0.50, fix_dur_sigma = 0.28;
    double tremor_shape = 1.8, tremor_scale = 340.0;
    double tremor_pull = 0.06;
    double reanchor_p = 0.60;
    double onobj_mu_u = 0.50, onobj_mu_v = 0.45;
    double onobj_sd_u = 0.18, onobj_sd_v = 0.16;
    double reaction_lo = 0.15, reaction_hi = 0.30;

    // saccade timing
    double sacc_dur_base = 0.075;
    double sacc_dur_per_px = 1.0 / 2000.0;
    double sacc_peak_cap = 6000.0;
    double sacc_dur_jitter = 0.15;

    // inspection behavior
    double p_three_objects = 0.15;
    double bout_continue_p = 0.40;

    // manipulation behavior
    double glance_p = 0.015;
    double p_anticipate = 0.70;

    // phase timing
    double instr_insp_lo = 2.6, instr_insp_hi = 4.2;
    double instr_manip_lo = 1.6, instr_manip_hi = 2.6;
    double exec_base = 3.45, exec_exp_mean = 0.9, exec_cap = 7.0;

    // detector simulation
    double det_noise_sd = 1.5;
    double short_gap_rate = 0.40;
    int short_gap_len_lo = 1, short_gap_len_hi = 15;
    double long_gap_rate = 0.05;
    int long_gap_len_lo = 30, long_gap_len_hi = 80;

    // gaze validity
    double blink_rate = 0.08;
    int blink_len_lo = 6, blink_len_hi = 30;

    void validate() const;  // throws ConfigError
    Layout effective_layout() const;
    std::string to_json() const;
    static GeneratorConfig from_json(const std::string& text);  // partial override of defaults
    std::string config_hash() const;
};

struct SubjectProfile {
    std::string subject_id;
    double centroid_x = 0.0, centroid_y = 0.0;
    double spread_x = 0.0, spread_y = 0.0;
    double speed_shape = 0.0, speed_scale = 0.0;  // fixational speed gamma, per subject
    double distance_bias = 1.0;
    double glance_mult = 1.0;
    double dur_mult = 1.0;
};

SubjectProfile make_profile(const GeneratorConfig& cfg, uint64_t seed);

Trial generate_trial(const GeneratorConfig& cfg, const SubjectProfile& prof, Intent intent,
                     uint64_t seed);

Dataset generate_dataset(const GeneratorConfig& cfg);

}  // namespace midas
