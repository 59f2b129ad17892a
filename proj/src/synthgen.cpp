#include "midas/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "midas/dataset_io.hpp"
#include "midas/parallel.hpp"
#include "midas/rng.hpp"

using ordered_json = nlohmann::ordered_json;

namespace midas {

const std::array<const char*, 6> kObjectLabels = {"banana", "bottle", "bowl",
                                                  "cup",    "doughnut", "orange"};

Layout default_layout() {
    // six objects in two table rows, distinct sizes
    const double cs[6][2] = {{640, 615}, {960, 625}, {1280, 615},
                             {640, 790}, {960, 780}, {1280, 790}};
    const double sz[6][2] = {{85, 52}, {52, 110}, {78, 60}, {64, 72}, {72, 68}, {68, 64}};
    Layout lay;
    for (int i = 0; i < 6; ++i) {
        double x = cs[i][0], y = cs[i][1], w = sz[i][0], h = sz[i][1];
        lay.emplace_back(kObjectLabels[i],
                         std::array<double, 4>{x - w / 2, y - h / 2, x + w / 2, y + h / 2});
    }
    return lay;
}

Layout GeneratorConfig::effective_layout() const {
    return layout.empty() ? default_layout() : layout;
}

void GeneratorConfig::validate() const {
    auto pos = [](double v, const char* name) {
        if (!(v > 0.0)) throw ConfigError(std::string("config: ") + name + " must be positive");
    };
    auto prob = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0))
            throw ConfigError(std::string("config: ") + name + " must be in [0,1]");
    };
    if (n_subjects <= 0) throw ConfigError("config: n_subjects must be positive");
    if (trials_per_subject <= 0) throw ConfigError("config: trials_per_subject must be positive");
    if (frame_size[0] <= 0 || frame_size[1] <= 0) throw ConfigError("config: bad frame_size");
    pos(centroid_sd_x, "centroid_sd_x");
    pos(centroid_sd_y, "centroid_sd_y");
    pos(idle_spread_x, "idle_spread_x");
    pos(idle_spread_y, "idle_spread_y");
    pos(tremor_shape, "tremor_shape");
    pos(tremor_scale, "tremor_scale");
    pos(fix_dur_median, "fix_dur_median");
    pos(fix_dur_sigma, "fix_dur_sigma");
    pos(exec_base, "exec_base");
    pos(sacc_peak_cap, "sacc_peak_cap");
    prob(reanchor_p, "reanchor_p");
    prob(p_three_objects, "p_three_objects");
    prob(bout_continue_p, "bout_continue_p");
    prob(glance_p, "glance_p");
    prob(p_anticipate, "p_anticipate");
    prob(physical_frac, "physical_frac");
    if (!(reaction_lo <= reaction_hi)) throw ConfigError("config: reaction range inverted");
    if (!(instr_insp_lo <= instr_insp_hi)) throw ConfigError("config: instr_insp range inverted");
    if (!(instr_manip_lo <= instr_manip_hi)) throw ConfigError("config: instr_manip range inverted");
    if (short_gap_len_lo < 1 || short_gap_len_hi < short_gap_len_lo)
        throw ConfigError("config: short_gap_len range invalid");
    if (long_gap_len_lo < 1 || long_gap_len_hi < long_gap_len_lo)
        throw ConfigError("config: long_gap_len range invalid");
    if (blink_len_lo < 1 || blink_len_hi < blink_len_lo)
        throw ConfigError("config: blink_len range invalid");
    for (const auto& [name, bb] : effective_layout())
        if (!(bb[0] < bb[2] && bb[1] < bb[3]))
            throw ConfigError("config: degenerate layout bbox for '" + name + "'");
}

std::string GeneratorConfig::to_json() const {
    ordered_json j;
    j["n_subjects"] = n_subjects;
    j["trials_per_subject"] = trials_per_subject;
    j["frame_size"] = {frame_size[0], frame_size[1]};
    ordered_json lay = ordered_json::object();
    for (const auto& [name, bb] : effective_layout()) lay[name] = {bb[0], bb[1], bb[2], bb[3]};
    j["layout"] = std::move(lay);
    j["rng_seed"] = rng_seed;
    j["manipulation_offset_x"] = manipulation_offset_x;
    j["inspection_distance_premium"] = inspection_distance_premium;
    j["physical_frac"] = physical_frac;
    j["centroid_sd"] = {centroid_sd_x, centroid_sd_y};
    j["idle_spread"] = {idle_spread_x, idle_spread_y};
    j["idle_center_y"] = idle_center_y;
    j["distance_bias_sigma"] = distance_bias_sigma;
    j["tremor_subj_sigma"] = tremor_subj_sigma;
    j["scene_sd"] = {scene_sd_x, scene_sd_y};
    j["drift_step_sd"] = drift_step_sd;
    j["fix_dur_median"] = fix_dur_median;
    j["fix_dur_sigma"] = fix_dur_sigma;
    j["tremor_shape"] = tremor_shape;
    j["tremor_scale"] = tremor_scale;
    j["tremor_pull"] = tremor_pull;
    j["reanchor_p"] = reanchor_p;
    j["onobj_mu"] = {onobj_mu_u, onobj_mu_v};
    j["onobj_sd"] = {onobj_sd_u, onobj_sd_v};
    j["reaction"] = {reaction_lo, reaction_hi};
    j["sacc_dur_base"] = sacc_dur_base;
    j["sacc_dur_per_px"] = sacc_dur_per_px;
    j["sacc_peak_cap"] = sacc_peak_cap;
    j["sacc_dur_jitter"] = sacc_dur_jitter;
    j["p_three_objects"] = p_three_objects;
    j["bout_continue_p"] = bout_continue_p;
    j["glance_p"] = glance_p;
    j["p_anticipate"] = p_anticipate;
    j["instr_insp"] = {instr_insp_lo, instr_insp_hi};
    j["instr_manip"] = {instr_manip_lo, instr_manip_hi};
    j["exec_base"] = exec_base;
    j["exec_exp_mean"] = exec_exp_mean;
    j["exec_cap"] = exec_cap;
    j["det_noise_sd"] = det_noise_sd;
    j["short_gap_rate"] = short_gap_rate;
    j["short_gap_len"] = {short_gap_len_lo, short_gap_len_hi};
    j["long_gap_rate"] = long_gap_rate;
    j["long_gap_len"] = {long_gap_len_lo, long_gap_len_hi};
    j["blink_rate"] = blink_rate;
    j["blink_len"] = {blink_len_lo, blink_len_hi};
    return j.dump(2);
}

GeneratorConfig GeneratorConfig::from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    GeneratorConfig c;
    auto num = [&](const char* key, double& field) {
        if (j.contains(key)) field = j[key].get<double>();
    };
    auto inum = [&](const char* key, int& field) {
        if (j.contains(key)) field = j[key].get<int>();
    };
    auto pair2 = [&](const char* key, double& a, double& b) {
        if (j.contains(key)) {
            a = j[key][0].get<double>();
            b = j[key][1].get<double>();
        }
    };
    auto ipair2 = [&](const char* key, int& a, int& b) {
        if (j.contains(key)) {
            a = j[key][0].get<int>();
            b = j[key][1].get<int>();
        }
    };
    inum("n_subjects", c.n_subjects);
    inum("trials_per_subject", c.trials_per_subject);
    if (j.contains("frame_size"))
        c.frame_size = {j["frame_size"][0].get<int>(), j["frame_size"][1].get<int>()};
    if (j.contains("layout")) {
        c.layout.clear();
        for (auto it = j["layout"].begin(); it != j["layout"].end(); ++it) {
            const auto& bb = it.value();
            c.layout.emplace_back(it.key(),
                                  std::array<double, 4>{bb[0].get<double>(), bb[1].get<double>(),
                                                        bb[2].get<double>(), bb[3].get<double>()});
        }
    }
    if (j.contains("rng_seed")) c.rng_seed = j["rng_seed"].get<uint64_t>();
    num("manipulation_offset_x", c.manipulation_offset_x);
    num("inspection_distance_premium", c.inspection_distance_premium);
    num("physical_frac", c.physical_frac);
    pair2("centroid_sd", c.centroid_sd_x, c.centroid_sd_y);
    pair2("idle_spread", c.idle_spread_x, c.idle_spread_y);
    num("idle_center_y", c.idle_center_y);
    num("distance_bias_sigma", c.distance_bias_sigma);
    num("tremor_subj_sigma", c.tremor_subj_sigma);
    pair2("scene_sd", c.scene_sd_x, c.scene_sd_y);
    num("drift_step_sd", c.drift_step_sd);
    num("fix_dur_median", c.fix_dur_median);
    num("fix_dur_sigma", c.fix_dur_sigma);
    num("tremor_shape", c.tremor_shape);
    num("tremor_scale", c.tremor_scale);
    num("tremor_pull", c.tremor_pull);
    num("reanchor_p", c.reanchor_p);
    pair2("onobj_mu", c.onobj_mu_u, c.onobj_mu_v);
    pair2("onobj_sd", c.onobj_sd_u, c.onobj_sd_v);
    pair2("reaction", c.reaction_lo, c.reaction_hi);
    num("sacc_dur_base", c.sacc_dur_base);
    num("sacc_dur_per_px", c.sacc_dur_per_px);
    num("sacc_peak_cap", c.sacc_peak_cap);
    num("sacc_dur_jitter", c.sacc_dur_jitter);
    num("p_three_objects", c.p_three_objects);
    num("bout_continue_p", c.bout_continue_p);
    num("glance_p", c.glance_p);
    num("p_anticipate", c.p_anticipate);
    pair2("instr_insp", c.instr_insp_lo, c.instr_insp_hi);
    pair2("instr_manip", c.instr_manip_lo, c.instr_manip_hi);
    num("exec_base", c.exec_base);
    num("exec_exp_mean", c.exec_exp_mean);
    num("exec_cap", c.exec_cap);
    num("det_noise_sd", c.det_noise_sd);
    num("short_gap_rate", c.short_gap_rate);
    ipair2("short_gap_len", c.short_gap_len_lo, c.short_gap_len_hi);
    num("long_gap_rate", c.long_gap_rate);
    ipair2("long_gap_len", c.long_gap_len_lo, c.long_gap_len_hi);
    num("blink_rate", c.blink_rate);
    ipair2("blink_len", c.blink_len_lo, c.blink_len_hi);
    c.validate();
    return c;
}

std::string GeneratorConfig::config_hash() const { return hash_hex(fnv1a(to_json())); }

SubjectProfile make_profile(const GeneratorConfig& cfg, uint64_t seed) {
    Rng rng(seed);
    SubjectProfile p;
    double cx = cfg.frame_size[0] / 2.0;
    double cy = cfg.idle_center_y;
    p.centroid_x = cx + rng.normal(0.0, cfg.centroid_sd_x);
    p.centroid_y = cy + rng.normal(0.0, cfg.centroid_sd_y);
    p.spread_x = cfg.idle_spread_x * rng.uniform(0.85, 1.15);
    p.spread_y = cfg.idle_spread_y * rng.uniform(0.85, 1.15);
    p.speed_shape = cfg.tremor_shape;
    p.speed_scale = cfg.tremor_scale * std::exp(rng.normal(0.0, cfg.tremor_subj_sigma));
    p.distance_bias = std::exp(rng.normal(0.0, cfg.distance_bias_sigma));
    p.glance_mult = rng.uniform(0.85, 1.10);
    p.dur_mult = rng.uniform(0.90, 1.15);
    return p;
}

static double minjerk(double tau) {
    return 10.0 * tau * tau * tau - 15.0 * tau * tau * tau * tau +
           6.0 * tau * tau * tau * tau * tau;
}

struct Vec2 {
    double x = 0.0, y = 0.0;
};

static Vec2 anchor_on(const std::array<double, 4>& bbox, Rng& rng, const GeneratorConfig& cfg) {
    double u = rng.normal(cfg.onobj_mu_u, cfg.onobj_sd_u);
    double v = rng.normal(cfg.onobj_mu_v, cfg.onobj_sd_v);
    return {bbox[0] + u * (bbox[2] - bbox[0]), bbox[1] + v * (bbox[3] - bbox[1])};
}

Trial generate_trial(const GeneratorConfig& cfg, const SubjectProfile& prof, Intent intent,
                     uint64_t seed) {
    Rng rng(seed);
    Layout layout = cfg.effective_layout();
    int n_obj = static_cast<int>(layout.size());

    double t_instr = intent == Intent::inspection
                         ? rng.uniform(cfg.instr_insp_lo, cfg.instr_insp_hi)
                         : rng.uniform(cfg.instr_manip_lo, cfg.instr_manip_hi);
    double exec_dur = std::min(cfg.exec_base + rng.exponential(cfg.exec_exp_mean), cfg.exec_cap);
    double reaction = rng.uniform(cfg.reaction_lo, cfg.reaction_hi);
    double t_end = t_instr + reaction + exec_dur;
    int n = static_cast<int>(std::ceil(t_end * kGazeHz)) + 1;

    int target_i;
    std::vector<int> named;
    if (intent == Intent::inspection) {
        int k = rng.random() < cfg.p_three_objects ? 3 : 2;
        target_i = static_cast<int>(rng.integers(0, n_obj));
        const auto& tb = layout[target_i].second;
        double tcx = (tb[0] + tb[2]) / 2, tcy = (tb[1] + tb[3]) / 2;
        // distractors come from the target's three nearest neighbours
        std::vector<std::pair<double, int>> rest;
        for (int o = 0; o < n_obj; ++o) {
            if (o == target_i) continue;
            const auto& bb = layout[o].second;
            rest.emplace_back(std::hypot((bb[0] + bb[2]) / 2 - tcx, (bb[1] + bb[3]) / 2 - tcy), o);
        }
        std::sort(rest.begin(), rest.end());
        int n_near = std::min<int>(3, static_cast<int>(rest.size()));
        named.push_back(target_i);
        for (int pick : rng.choice(n_near, std::min(k - 1, n_near)))
            named.push_back(rest[pick].second);
    } else {
        target_i = static_cast<int>(rng.integers(0, n_obj));
        named.push_back(target_i);
    }

    Vec2 scene{rng.normal(0.0, cfg.scene_sd_x), rng.normal(0.0, cfg.scene_sd_y)};
    Vec2 shift{intent == Intent::manipulation ? cfg.manipulation_offset_x : 0.0, 0.0};
    Vec2 sc{scene.x + shift.x, scene.y + shift.y};

    std::vector<Vec2> drift(n);
    {
        Vec2 acc;
        for (int i = 0; i < n; ++i) {
            acc.x += rng.normal(0.0, cfg.drift_step_sd);
            acc.y += rng.normal(0.0, cfg.drift_step_sd);
            drift[i] = acc;
        }
    }

    std::vector<Vec2> pos(n);
    double t_behave = t_instr + reaction;
    int insp_idx = 0;
    int first_obj = target_i;
    bool anticipate = rng.random() < cfg.p_anticipate;
    bool task_started = false;
    bool on_glance = false;

    auto fix_dur = [&]() {
        return std::exp(rng.normal(std::log(cfg.fix_dur_median * prof.dur_mult), cfg.fix_dur_sigma));
    };
    auto idle_anchor = [&]() -> Vec2 {
        return {rng.normal(prof.centroid_x, prof.spread_x) + sc.x,
                rng.normal(prof.centroid_y, prof.spread_y) + sc.y};
    };
    auto on_obj = [&](int o) -> Vec2 {
        Vec2 a = anchor_on(layout[o].second, rng, cfg);
        return {a.x + sc.x, a.y + sc.y};
    };

    Vec2 a_cur = anticipate ? on_obj(first_obj) : idle_anchor();
    Vec2 p = a_cur;
    int i = 0;

    // returns the next anchor; extend=true means stay at the current one
    auto next_move = [&](double ti, bool& extend) -> Vec2 {
        extend = false;
        if (ti < t_behave) return anticipate ? on_obj(first_obj) : idle_anchor();
        if (!task_started) {
            task_started = true;
            return on_obj(intent == Intent::inspection ? named[insp_idx] : target_i);
        }
        if (intent == Intent::inspection) {
            if (rng.random() >= cfg.bout_continue_p && named.size() > 1) {
                int nxt = static_cast<int>(rng.integers(0, static_cast<int64_t>(named.size()) - 1));
                insp_idx = nxt < insp_idx ? nxt : nxt + 1;
                return on_obj(named[insp_idx]);
            }
            if (rng.random() < cfg.reanchor_p) return on_obj(named[insp_idx]);
            extend = true;
            return a_cur;
        }
        if (on_glance) {
            on_glance = false;
            return on_obj(target_i);
        }
        if (rng.random() < cfg.glance_p * prof.glance_mult) {
            on_glance = true;
            return on_obj(static_cast<int>(rng.integers(0, n_obj)));
        }
        if (rng.random() < cfg.reanchor_p) return on_obj(target_i);
        extend = true;
        return a_cur;
    };

    int remain = static_cast<int>(std::llround(fix_dur() * kGazeHz));
    double tr_scale = prof.speed_scale;
    double kappa = cfg.tremor_pull;
    while (i < n) {
        while (remain > 0 && i < n) {
            pos[i] = p;
            ++i;
            --remain;
            double sp = rng.gamma(prof.speed_shape, tr_scale);
            double ang = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            p.x += (sp / kGazeHz) * std::cos(ang) + kappa * (a_cur.x - p.x);
            p.y += (sp / kGazeHz) * std::sin(ang) + kappa * (a_cur.y - p.y);
        }
        if (i >= n) break;
        bool extend = false;
        Vec2 a = next_move(i / kGazeHz, extend);
        if (extend) {
            remain = static_cast<int>(std::llround(fix_dur() * kGazeHz));
            continue;
        }
        double d = std::hypot(a.x - p.x, a.y - p.y);
        if (d < 1.0) {
            a_cur = a;
            remain = static_cast<int>(std::llround(fix_dur() * kGazeHz));
            continue;
        }
        double dur = std::max(cfg.sacc_dur_base + d * cfg.sacc_dur_per_px,
                              1.875 * d / cfg.sacc_peak_cap);
        dur *= std::exp(rng.normal(0.0, cfg.sacc_dur_jitter));
        int ns = static_cast<int>(std::clamp<long long>(std::llround(dur * kGazeHz), 1, 80));
        Vec2 p0 = p;
        for (int j = 1; j <= ns && i < n; ++j) {
            double s = minjerk(static_cast<double>(j) / ns);
            pos[i] = {p0.x + s * (a.x - p0.x), p0.y + s * (a.y - p0.y)};
            ++i;
        }
        p = a;
        a_cur = a;
        remain = static_cast<int>(std::llround(fix_dur() * kGazeHz));
    }

    std::vector<bool> valid(n, true);
    {
        double tb = rng.exponential(1.0 / cfg.blink_rate);
        while (tb < t_end) {
            int j0 = static_cast<int>(tb * kGazeHz);
            int len = static_cast<int>(rng.integers(cfg.blink_len_lo, cfg.blink_len_hi + 1));
            for (int j = j0; j < std::min(j0 + len, n); ++j) valid[j] = false;
            tb += len / kGazeHz + rng.exponential(1.0 / cfg.blink_rate);
        }
    }

    Trial trial;
    trial.intent = intent;
    trial.target_label = layout[target_i].first;
    trial.instruction_end_t = quantize9(t_instr);
    trial.frame_size = cfg.frame_size;
    trial.gaze.resize(n);
    for (int j = 0; j < n; ++j) {
        trial.gaze[j].t = quantize9(j / kGazeHz);
        trial.gaze[j].valid = valid[j];
        if (valid[j]) {
            trial.gaze[j].x = quantize9(pos[j].x + drift[j].x);
            trial.gaze[j].y = quantize9(pos[j].y + drift[j].y);
        }
    }

    int nd = static_cast<int>(std::floor(t_end * kDetHz)) + 1;
    for (const auto& [name, bb] : layout) {
        std::vector<bool> keep(nd, true);
        const double rates[2] = {cfg.short_gap_rate, cfg.long_gap_rate};
        const int lens[2][2] = {{cfg.short_gap_len_lo, cfg.short_gap_len_hi},
                                {cfg.long_gap_len_lo, cfg.long_gap_len_hi}};
        for (int g = 0; g < 2; ++g) {
            if (rates[g] <= 0.0) continue;
            double tg = rng.exponential(1.0 / rates[g]);
            while (tg < t_end) {
                int j0 = static_cast<int>(tg * kDetHz);
                int len = static_cast<int>(rng.integers(lens[g][0], lens[g][1] + 1));
                for (int j = j0; j < std::min(j0 + len, nd); ++j) keep[j] = false;
                tg += len / kDetHz + rng.exponential(1.0 / rates[g]);
            }
        }
        if (std::none_of(keep.begin(), keep.end(), [](bool b) { return b; })) keep[0] = true;

        Track track;
        track.label = name;
        for (int j = 0; j < nd; ++j) {
            if (!keep[j]) continue;
            double td = j / kDetHz;
            int gi = std::min(static_cast<int>(td * kGazeHz), n - 1);
            double nx0 = rng.normal(0.0, cfg.det_noise_sd);
            double ny0 = rng.normal(0.0, cfg.det_noise_sd);
            double nx1 = rng.normal(0.0, cfg.det_noise_sd);
            double ny1 = rng.normal(0.0, cfg.det_noise_sd);
            ObjectDetection det;
            det.t = quantize9(td);
            det.bbox = {quantize9(bb[0] + sc.x + drift[gi].x + nx0),
                        quantize9(bb[1] + sc.y + drift[gi].y + ny0),
                        quantize9(bb[2] + sc.x + drift[gi].x + nx1),
                        quantize9(bb[3] + sc.y + drift[gi].y + ny1)};
            track.dets.push_back(det);
        }
        trial.tracks.push_back(std::move(track));
    }
    return trial;
}

Dataset generate_dataset(const GeneratorConfig& cfg) {
    cfg.validate();
    Rng master(cfg.rng_seed);

    struct Slot {
        Intent intent;
        ManipulationKind kind;
        uint64_t seed;
        int subject;
        int index;
    };
    std::vector<Slot> slots;
    std::vector<SubjectProfile> profiles;
    Dataset ds;

    int tps = cfg.trials_per_subject;
    for (int s = 0; s < cfg.n_subjects; ++s) {
        char sid[16];
        std::snprintf(sid, sizeof(sid), "s%02d", s);
        ds.subjects.push_back(sid);

        SubjectProfile prof = make_profile(cfg, master.bits());
        prof.subject_id = sid;
        profiles.push_back(prof);

        int n_insp = tps / 2;
        std::vector<Intent> labels(n_insp, Intent::inspection);
        labels.resize(tps, Intent::manipulation);
        Rng rs(master.bits());
        rs.shuffle(labels);

        int n_manip = tps - n_insp;
        int n_phys = static_cast<int>(std::llround(cfg.physical_frac * n_manip));
        std::vector<ManipulationKind> kinds(n_phys, ManipulationKind::physical);
        kinds.resize(n_manip, ManipulationKind::imaginary);
        rs.shuffle(kinds);

        int mi = 0;
        for (int k = 0; k < tps; ++k) {
            Slot slot;
            slot.intent = labels[k];
            slot.kind = labels[k] == Intent::manipulation ? kinds[mi++] : ManipulationKind::none;
            slot.seed = master.bits();
            slot.subject = s;
            slot.index = k;
            slots.push_back(slot);
        }
    }

    ds.trials.resize(slots.size());
    Trial* out = ds.trials.data();
    const Slot* sl = slots.data();
    const SubjectProfile* prof = profiles.data();
    parallel_for(static_cast<int64_t>(slots.size()), [&, out, sl, prof](int64_t i) {
        const Slot& s = sl[i];
        Trial t = generate_trial(cfg, prof[s.subject], s.intent, s.seed);
        char tid[24];
        std::snprintf(tid, sizeof(tid), "s%02d_t%03d", s.subject, s.index);
        t.trial_id = tid;
        t.subject_id = prof[s.subject].subject_id;
        t.kind = s.kind;
        out[i] = std::move(t);
    });

    ds.provenance.source = "synthetic";
    ds.provenance.seed = cfg.rng_seed;
    ds.provenance.config_hash = cfg.config_hash();
    return ds;
}

}  // namespace midas
