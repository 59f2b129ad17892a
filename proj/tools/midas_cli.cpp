// Command-line front end for the full pipeline: synthetic recording
// generation, feature extraction, cross-validated training, fixation-budget
// curves, report rendering, and the analytic-gradient self check.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "midas/cv.hpp"
#include "midas/dataset_io.hpp"
#include "midas/features.hpp"
#include "midas/nn.hpp"
#include "midas/synthgen.hpp"

namespace {

std::string read_text(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw midas::LoadError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw midas::LoadError("cannot write " + path);
    f << text;
}

midas::EvalReport load_or_new_report(const std::string& path) {
    if (std::filesystem::exists(path)) return midas::load_report(path);
    return {};
}

std::string describe(const midas::CellResult& c) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s on %s (%s, seed %llu): mean %.4f, stddev %.4f%s",
                  midas::model_kind_name(c.model), midas::feature_set_name(c.features),
                  midas::scheme_name(c.scheme), (unsigned long long)c.seed, c.mean,
                  c.stddev, c.chance_level ? " (chance level)" : "");
    std::string s = buf;
    if (!c.skipped_folds.empty())
        s += ", " + std::to_string(c.skipped_folds.size()) + " fold(s) skipped";
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gaze intention decoding pipeline"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic recording set");
    std::string gen_config, gen_out = "dataset.jsonl";
    uint64_t gen_seed = 0;
    int gen_subjects = 0, gen_trials = 0;
    gen->add_option("--config", gen_config, "generator config JSON (defaults when omitted)");
    gen->add_option("--out", gen_out, "output dataset path (JSON Lines)");
    auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "override the config seed");
    auto* gen_subj_opt = gen->add_option("--subjects", gen_subjects, "override subject count");
    auto* gen_tri_opt = gen->add_option("--trials", gen_trials, "override trials per subject");

    // prep
    auto* prep = app.add_subcommand("prep", "extract features from a dataset");
    std::string prep_in, prep_set = "raw", prep_out = "features.jsonl";
    int prep_length = 400;
    prep->add_option("--in", prep_in, "dataset path from gen")->required();
    prep->add_option("--features", prep_set,
                     "raw|raw+target|distance|speed|all|hist-dist|hist-speed");
    prep->add_option("--out", prep_out, "output feature file path");
    prep->add_option("--length", prep_length, "window length in gaze samples");

    // train
    auto* train = app.add_subcommand("train", "cross-validate a model on a feature file");
    std::string tr_model = "midas", tr_features, tr_cv = "kfold5";
    std::string tr_report, tr_model_out;
    uint64_t tr_seed = 31337;
    bool tr_quiet = false;
    midas::MidasConfig tr_net;
    train->add_option("--model", tr_model, "midas|gbt|svm|logreg|handedness|gmm");
    train->add_option("--features", tr_features, "feature file from prep")->required();
    train->add_option("--cv", tr_cv, "kfold5|loso");
    train->add_option("--seed", tr_seed, "top-level seed");
    train->add_option("--report", tr_report, "report JSON to create or update");
    train->add_option("--model-out", tr_model_out,
                      "checkpoint path prefix; one checkpoint per fold");
    train->add_option("--hidden", tr_net.hidden, "recurrent state size per direction");
    train->add_option("--epochs", tr_net.epochs, "training epochs per fold");
    train->add_option("--batch", tr_net.batch_size, "minibatch size");
    train->add_flag("--quiet", tr_quiet, "suppress progress lines");

    // eval
    auto* eval = app.add_subcommand("eval", "accuracy as a function of observed samples");
    bool ev_curve = false;
    std::string ev_model = "midas", ev_features, ev_cv = "kfold5";
    std::string ev_out, ev_report;
    uint64_t ev_seed = 31337;
    std::vector<int> ev_lengths;
    midas::MidasConfig ev_net;
    bool ev_quiet = false;
    eval->add_flag("--curve", ev_curve, "compute the accuracy curve");
    eval->add_option("--model", ev_model, "midas|gbt|svm|logreg|handedness|gmm");
    eval->add_option("--features", ev_features, "feature file from prep")->required();
    eval->add_option("--cv", ev_cv, "kfold5|loso");
    eval->add_option("--seed", ev_seed, "top-level seed");
    eval->add_option("--lengths", ev_lengths, "prefix lengths to evaluate");
    eval->add_option("--out", ev_out, "curve CSV path (stdout when omitted)");
    eval->add_option("--report", ev_report, "report JSON to create or update");
    eval->add_option("--hidden", ev_net.hidden, "recurrent state size per direction");
    eval->add_option("--epochs", ev_net.epochs, "training epochs per fold");
    eval->add_option("--batch", ev_net.batch_size, "minibatch size");
    eval->add_flag("--quiet", ev_quiet, "suppress progress lines");

    // report
    auto* report = app.add_subcommand("report", "render an accumulated report");
    std::string rp_in = "report.json", rp_format = "csv", rp_out;
    report->add_option("--in", rp_in, "report JSON path");
    report->add_option("--format", rp_format, "csv|md");
    report->add_option("--out", rp_out, "output path (stdout when omitted)");

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "verify analytic gradients");
    uint64_t gc_seed = 1;
    gradcheck->add_option("--seed", gc_seed, "seed for the probe network and data");

    try {
        app.parse(argc, argv);

        if (*gen) {
            midas::GeneratorConfig cfg;
            if (!gen_config.empty())
                cfg = midas::GeneratorConfig::from_json(read_text(gen_config));
            if (*gen_seed_opt) cfg.rng_seed = gen_seed;
            if (*gen_subj_opt) cfg.n_subjects = gen_subjects;
            if (*gen_tri_opt) cfg.trials_per_subject = gen_trials;
            cfg.validate();
            const midas::Dataset ds = midas::generate_dataset(cfg);
            midas::save_dataset(ds, gen_out);
            std::cout << "wrote " << ds.trials.size() << " trials ("
                      << ds.subjects.size() << " subjects) to " << gen_out << "\n";
        } else if (*prep) {
            const midas::Dataset ds = midas::load_dataset(prep_in);
            const midas::FeatureSet set = midas::feature_set_from_name(prep_set);
            const midas::FeatureFile ff = midas::build_features(ds, set, prep_length);
            midas::save_features(ff, prep_out);
            std::cout << "wrote " << ff.records.size() << " " << ff.feature_set
                      << " records to " << prep_out << "\n";
        } else if (*train) {
            const midas::FeatureFile ff = midas::load_features(tr_features);
            const midas::ModelKind model = midas::model_kind_from_name(tr_model);
            const midas::CvScheme scheme = midas::scheme_from_name(tr_cv);
            const midas::SplitPlan split = midas::make_split(ff, scheme, tr_seed);
            midas::CvOptions opt;
            opt.midas = tr_net;
            opt.checkpoint_prefix = tr_model_out;
            if (!tr_quiet)
                opt.log = [](const std::string& s) { std::cerr << s << "\n"; };
            const midas::CellResult cell = midas::run_cv(ff, model, split, tr_seed, opt);
            std::cout << describe(cell) << "\n";
            if (!tr_report.empty()) {
                midas::EvalReport r = load_or_new_report(tr_report);
                r.upsert(cell);
                midas::save_report(r, tr_report);
            }
        } else if (*eval) {
            if (!ev_curve)
                throw midas::ConfigError("eval currently only supports --curve");
            const midas::FeatureFile ff = midas::load_features(ev_features);
            const midas::ModelKind model = midas::model_kind_from_name(ev_model);
            const midas::CvScheme scheme = midas::scheme_from_name(ev_cv);
            const midas::SplitPlan split = midas::make_split(ff, scheme, ev_seed);
            midas::CvOptions opt;
            opt.midas = ev_net;
            if (!ev_quiet)
                opt.log = [](const std::string& s) { std::cerr << s << "\n"; };
            const std::vector<int>& lengths =
                ev_lengths.empty() ? midas::kCurveLengths : ev_lengths;
            const midas::CurveResult curve =
                midas::accuracy_over_time(ff, model, split, lengths, ev_seed, opt);
            const std::string csv = midas::render_curve_csv(curve);
            if (ev_out.empty())
                std::cout << csv;
            else
                write_text(ev_out, csv);
            if (!ev_report.empty()) {
                midas::EvalReport r = load_or_new_report(ev_report);
                r.upsert(curve);
                midas::save_report(r, ev_report);
            }
        } else if (*report) {
            const midas::EvalReport r = midas::load_report(rp_in);
            const std::string text = midas::render_report(r, rp_format);
            if (rp_out.empty())
                std::cout << text;
            else
                write_text(rp_out, text);
        } else if (*gradcheck) {
            const midas::GradcheckReport g = midas::run_gradcheck(gc_seed);
            std::printf("checked %zu parameters: max relative error %.3g in %.2f s: %s\n",
                        g.checked, g.max_rel_err, g.seconds, g.pass ? "PASS" : "FAIL");
            if (!g.pass) return 3;
        }
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const midas::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
