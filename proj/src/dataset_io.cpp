#include "midas/dataset_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>

#include "json.hpp"
#include "midas/validate.hpp"

using ordered_json = nlohmann::ordered_json;

namespace midas {

double quantize9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::strtod(buf, nullptr);
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

static ordered_json trial_to_json(const Trial& t) {
    ordered_json j;
    j["trial_id"] = t.trial_id;
    j["subject_id"] = t.subject_id;
    j["intent"] = intent_name(t.intent);
    if (t.kind == ManipulationKind::none)
        j["manipulation_kind"] = nullptr;
    else
        j["manipulation_kind"] = t.kind == ManipulationKind::physical ? "physical" : "imaginary";
    j["target_label"] = t.target_label;
    j["instruction_end_t"] = t.instruction_end_t;
    j["frame_size"] = {t.frame_size[0], t.frame_size[1]};

    ordered_json gz;
    std::vector<double> gt, gx, gy;
    std::vector<int> gv;
    gt.reserve(t.gaze.size());
    for (const auto& g : t.gaze) {
        gt.push_back(g.t);
        gx.push_back(g.x);
        gy.push_back(g.y);
        gv.push_back(g.valid ? 1 : 0);
    }
    gz["t"] = gt;
    gz["x"] = gx;
    gz["y"] = gy;
    gz["valid"] = gv;
    j["gaze"] = std::move(gz);

    ordered_json tracks = ordered_json::object();
    for (const auto& tr : t.tracks) {
        ordered_json tj;
        std::vector<double> tt, x1, y1, x2, y2;
        tt.reserve(tr.dets.size());
        for (const auto& d : tr.dets) {
            tt.push_back(d.t);
            x1.push_back(d.bbox[0]);
            y1.push_back(d.bbox[1]);
            x2.push_back(d.bbox[2]);
            y2.push_back(d.bbox[3]);
        }
        tj["t"] = tt;
        tj["x1"] = x1;
        tj["y1"] = y1;
        tj["x2"] = x2;
        tj["y2"] = y2;
        tracks[tr.label] = std::move(tj);
    }
    j["tracks"] = std::move(tracks);
    return j;
}

static Trial trial_from_json(const ordered_json& j) {
    Trial t;
    t.trial_id = j.at("trial_id").get<std::string>();
    t.subject_id = j.at("subject_id").get<std::string>();
    std::string intent = j.at("intent").get<std::string>();
    if (intent == "inspection")
        t.intent = Intent::inspection;
    else if (intent == "manipulation")
        t.intent = Intent::manipulation;
    else
        throw LoadError("unknown intent '" + intent + "'");
    if (j.at("manipulation_kind").is_null())
        t.kind = ManipulationKind::none;
    else {
        std::string k = j.at("manipulation_kind").get<std::string>();
        if (k == "physical")
            t.kind = ManipulationKind::physical;
        else if (k == "imaginary")
            t.kind = ManipulationKind::imaginary;
        else
            throw LoadError("unknown manipulation_kind '" + k + "'");
    }
    t.target_label = j.at("target_label").get<std::string>();
    t.instruction_end_t = j.at("instruction_end_t").get<double>();
    t.frame_size = {j.at("frame_size")[0].get<int>(), j.at("frame_size")[1].get<int>()};

    const auto& gz = j.at("gaze");
    const auto& gt = gz.at("t");
    const auto& gx = gz.at("x");
    const auto& gy = gz.at("y");
    const auto& gv = gz.at("valid");
    size_t n = gt.size();
    if (gx.size() != n || gy.size() != n || gv.size() != n)
        throw LoadError("gaze arrays have mismatched lengths");
    t.gaze.resize(n);
    for (size_t i = 0; i < n; ++i) {
        t.gaze[i].t = gt[i].get<double>();
        t.gaze[i].x = gx[i].get<double>();
        t.gaze[i].y = gy[i].get<double>();
        t.gaze[i].valid = gv[i].get<int>() != 0;
    }

    for (auto it = j.at("tracks").begin(); it != j.at("tracks").end(); ++it) {
        Track tr;
        tr.label = it.key();
        const auto& tj = it.value();
        const auto& tt = tj.at("t");
        size_t m = tt.size();
        tr.dets.resize(m);
        for (size_t i = 0; i < m; ++i) {
            tr.dets[i].t = tt[i].get<double>();
            tr.dets[i].bbox = {tj.at("x1")[i].get<double>(), tj.at("y1")[i].get<double>(),
                               tj.at("x2")[i].get<double>(), tj.at("y2")[i].get<double>()};
        }
        t.tracks.push_back(std::move(tr));
    }
    return t;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot open for writing: " + path);

    int n_insp = 0, n_manip = 0;
    for (const auto& t : ds.trials)
        (t.intent == Intent::inspection ? n_insp : n_manip)++;

    ordered_json manifest;
    manifest["schema_version"] = 1;
    manifest["kind"] = "dataset";
    ordered_json prov;
    prov["source"] = ds.provenance.source;
    prov["seed"] = ds.provenance.seed;
    prov["config_hash"] = ds.provenance.config_hash;
    manifest["provenance"] = std::move(prov);
    manifest["subjects"] = ds.subjects;
    manifest["n_trials"] = ds.trials.size();
    ordered_json cc;
    cc["inspection"] = n_insp;
    cc["manipulation"] = n_manip;
    manifest["class_counts"] = std::move(cc);
    out << manifest.dump() << "\n";

    for (const auto& t : ds.trials) out << trial_to_json(t).dump() << "\n";
    if (!out) throw LoadError("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
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
    if (manifest.value("kind", std::string()) != "dataset")
        throw SchemaError("not a dataset file: " + path);

    Dataset ds;
    ds.provenance.source = manifest["provenance"].value("source", std::string());
    ds.provenance.seed = manifest["provenance"].value("seed", uint64_t(0));
    ds.provenance.config_hash = manifest["provenance"].value("config_hash", std::string());
    ds.subjects = manifest["subjects"].get<std::vector<std::string>>();

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
        Trial t = trial_from_json(j);
        auto violations = validate_trial(t);
        if (!violations.empty())
            throw LoadError("trial '" + t.trial_id + "' invalid: " + violations.front());
        ds.trials.push_back(std::move(t));
    }

    size_t declared = manifest.value("n_trials", ds.trials.size());
    if (declared != ds.trials.size())
        throw LoadError(path + ": manifest declares " + std::to_string(declared) + " trials, found " +
                        std::to_string(ds.trials.size()));
    return ds;
}

}  // namespace midas
