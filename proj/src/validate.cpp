#include "midas/validate.hpp"

#include <cmath>

#include "midas/types.hpp"

namespace midas {

static void check_bbox(const ObjectDetection& d, const std::string& label, size_t i,
                       std::vector<std::string>& out) {
    if (!(d.bbox[0] < d.bbox[2]) || !(d.bbox[1] < d.bbox[3]))
        out.push_back("DegenerateBBox: track '" + label + "' detection " + std::to_string(i));
    for (double v : d.bbox)
        if (!std::isfinite(v)) {
            out.push_back("NonFiniteBBox: track '" + label + "' detection " + std::to_string(i));
            break;
        }
}

std::vector<std::string> validate_trial(const Trial& trial) {
    std::vector<std::string> out;

    if (trial.gaze.empty()) out.push_back("MissingGaze: trial has zero gaze samples");

    double prev_t = -1.0;
    for (size_t i = 0; i < trial.gaze.size(); ++i) {
        const auto& g = trial.gaze[i];
        if (g.t < 0.0) out.push_back("NegativeTime: gaze sample " + std::to_string(i));
        if (g.t <= prev_t)
            out.push_back("NonMonotoneTime: gaze sample " + std::to_string(i));
        prev_t = g.t;
        if (!g.valid && (g.x != 0.0 || g.y != 0.0))
            out.push_back("InvalidSampleNonzero: gaze sample " + std::to_string(i));
        if (!std::isfinite(g.x) || !std::isfinite(g.y) || !std::isfinite(g.t))
            out.push_back("NonFiniteGaze: gaze sample " + std::to_string(i));
    }

    if (!trial.gaze.empty()) {
        double last_t = trial.gaze.back().t;
        if (trial.instruction_end_t < 0.0 || trial.instruction_end_t > last_t)
            out.push_back("InstructionEndOutOfRange: instruction_end_t=" +
                          std::to_string(trial.instruction_end_t));
    }

    for (const auto& tr : trial.tracks) {
        double pt = -1.0;
        for (size_t i = 0; i < tr.dets.size(); ++i) {
            check_bbox(tr.dets[i], tr.label, i, out);
            if (tr.dets[i].t <= pt)
                out.push_back("NonMonotoneTime: track '" + tr.label + "' detection " +
                              std::to_string(i));
            pt = tr.dets[i].t;
        }
    }

    const Track* target = trial.find_track(trial.target_label);
    if (target == nullptr || target->dets.empty())
        out.push_back("MissingTargetTrack: no detections for target '" + trial.target_label + "'");

    if (trial.frame_size[0] <= 0 || trial.frame_size[1] <= 0)
        out.push_back("BadFrameSize: " + std::to_string(trial.frame_size[0]) + "x" +
                      std::to_string(trial.frame_size[1]));

    if (trial.intent == Intent::manipulation && trial.kind == ManipulationKind::none)
        out.push_back("MissingManipulationKind: manipulation trial without physical/imaginary");

    return out;
}

}  // namespace midas
