// deepclust command-line tool: dataset synthesis, training, evaluation and
// the imbalance sweep.

#include <CLI11.hpp>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "deepclust/checkpoint.hpp"
#include "deepclust/dataio.hpp"
#include "deepclust/errors.hpp"
#include "deepclust/experiment.hpp"
#include "deepclust/training.hpp"

namespace dc = deepclust;

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::size_t end = comma == std::string::npos ? text.size() : comma;
        if (end > start) out.push_back(text.substr(start, end - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::size_t parse_count(const std::string& s, const std::string& what) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw dc::InvalidConfig("bad " + what + " \"" + s + "\"");
    return v;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_ratios(const std::string& text) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& item : split_list(text)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw dc::InvalidConfig("ratio \"" + item + "\" is not of the form MAJ:MIN");
        out.emplace_back(parse_count(item.substr(0, colon), "ratio"), parse_count(item.substr(colon + 1), "ratio"));
    }
    return out;
}

std::string format_scores(const std::vector<std::size_t>& rows, const std::vector<int>& labels,
                          const dc::Scored& scored) {
    std::string out = "row,label,prediction,score\n";
    char buf[64];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto res = std::to_chars(buf, buf + sizeof buf, scored.scores[i]);
        out += std::to_string(rows[i]) + "," + std::to_string(labels[i]) + "," +
               std::to_string(scored.predictions[i]) + "," + std::string(buf, res.ptr) + "\n";
    }
    return out;
}

struct TrainOptions {
    std::string data;
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    std::string log;
    std::string results;
    std::string loss;
    std::optional<double> alpha;
    std::string weighting = "inverse-frequency";
};

void add_train_options(CLI::App* cmd, TrainOptions& o) {
    cmd->add_option("--data", o.data, "Training CSV (f0..f{D-1},label)")->required();
    cmd->add_option("--config", o.config, "JSON training configuration");
    cmd->add_option("--seed", o.seed, "Seed for the split, initialisation and sampling");
    cmd->add_option("--out", o.out, "Checkpoint output path")->required();
    cmd->add_option("--log", o.log, "Per-iteration log (JSON lines)");
    cmd->add_option("--results", o.results, "Results record path (default: <out>.results.json)");
}

// Applies --loss/--alpha on top of the configuration and picks the method name.
dc::Method resolve_embedding_method(bool unsupervised, const TrainOptions& o, dc::TrainConfig& cfg) {
    if (!o.loss.empty()) {
        if (o.loss == "com-triplet") {
            cfg.loss = dc::LossKind::com_triplet;
            cfg.margin = o.alpha ? dc::MarginSpec::constant(*o.alpha) : dc::MarginSpec::adaptive();
        } else if (o.loss == "triplet") {
            cfg.loss = dc::LossKind::triplet;
            cfg.margin = dc::MarginSpec::constant(o.alpha.value_or(0.2));
        } else {
            throw dc::InvalidConfig("--loss must be com-triplet or triplet");
        }
    } else if (o.alpha) {
        cfg.margin = dc::MarginSpec::constant(*o.alpha);
    }
    const bool com = cfg.loss == dc::LossKind::com_triplet;
    if (unsupervised) return com ? dc::Method::udc_com : dc::Method::udc_triplet;
    return com ? dc::Method::sdc_com : dc::Method::sdc_triplet;
}

int run_train(const std::string& command, const TrainOptions& o) {
    const dc::LabeledDataset ds = dc::load_csv(o.data);
    dc::TrainConfig cfg;
    if (!o.config.empty()) cfg = dc::config_from_json(dc::read_text_file(o.config));
    cfg.seed = o.seed;

    dc::Method method;
    if (command == "train-classifier") {
        if (o.weighting == "inverse-frequency") {
            method = dc::Method::classifier_lw;
        } else if (o.weighting == "equal") {
            method = dc::Method::classifier;
        } else {
            throw dc::InvalidConfig("--weighting must be equal or inverse-frequency");
        }
    } else {
        method = resolve_embedding_method(command == "train-udc", o, cfg);
    }

    const dc::TrainingRun run = dc::run_training(method, ds, cfg, command);
    dc::save_checkpoint(o.out, run.checkpoint);
    dc::save_results(o.results.empty() ? o.out + ".results.json" : o.results, run.results);
    if (!o.log.empty()) dc::write_text_file(o.log, dc::format_train_log(run.log));
    std::cout << dc::format_results(run.results);
    return 0;
}

struct EvalOptions {
    std::string checkpoint;
    std::string data;
    std::string split = "all";
    std::string scores_out;
    std::string results;
};

int run_eval(const EvalOptions& o) {
    const dc::Checkpoint ck = dc::load_checkpoint(o.checkpoint);
    dc::LabeledDataset ds = dc::load_csv(o.data);
    if (ds.dim() != ck.input_dim()) {
        throw dc::DimensionMismatch("checkpoint expects " + std::to_string(ck.input_dim()) + " features, data has " +
                                    std::to_string(ds.dim()));
    }

    std::vector<std::size_t> rows;
    if (o.split == "all") {
        rows.resize(ds.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    } else {
        ds.splits = dc::split_dataset(ds, ck.seed);
        if (o.split == "train") {
            rows = ds.indices(dc::Split::train);
        } else if (o.split == "val") {
            rows = ds.indices(dc::Split::val);
        } else if (o.split == "test") {
            rows = ds.indices(dc::Split::test);
        } else {
            throw dc::InvalidConfig("--split must be all, train, val or test");
        }
    }

    const std::vector<int> labels = ds.labels_of(rows);
    const dc::Scored scored = dc::score(ck, ds.batch(rows));

    dc::ResultsRecord rec;
    rec.command = "eval";
    rec.config_json = ck.config_json;
    rec.seed = ck.seed;
    rec.headline_split = o.split;
    rec.splits.emplace_back(o.split, dc::evaluate(labels, scored));
    if (ck.prototypes) rec.prototype_separation = ck.prototypes->separation;

    if (!o.scores_out.empty()) dc::write_text_file(o.scores_out, format_scores(rows, labels, scored));
    if (!o.results.empty()) dc::save_results(o.results, rec);
    std::cout << dc::format_results(rec);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep clustering for imbalanced binary classification"};
    app.require_subcommand(1);

    // synth
    dc::BlobSpec blob;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a two-class Gaussian blob dataset");
    synth->add_option("--maj", blob.n_maj, "Majority samples")->required();
    synth->add_option("--min", blob.n_min, "Minority samples")->required();
    synth->add_option("--dim", blob.dim, "Feature dimension")->capture_default_str();
    synth->add_option("--seed", blob.seed, "Random seed")->capture_default_str();
    synth->add_option("--separation", blob.separation, "Class-mean distance in sigma units")->capture_default_str();
    synth->add_option("--sigma-maj", blob.sigma_maj, "Majority standard deviation")->capture_default_str();
    synth->add_option("--sigma-min", blob.sigma_min, "Minority standard deviation")->capture_default_str();
    synth->add_option("--out", synth_out, "Output CSV path")->required();

    // training commands
    TrainOptions sdc_opts, udc_opts, clf_opts;
    auto* sdc = app.add_subcommand("train-sdc", "Supervised deep clustering");
    add_train_options(sdc, sdc_opts);
    sdc->add_option("--loss", sdc_opts.loss, "com-triplet (default) or triplet");
    sdc->add_option("--alpha", sdc_opts.alpha, "Constant margin (triplet default 0.2)");
    auto* udc = app.add_subcommand("train-udc", "Unsupervised deep clustering with GMM pseudo-labels");
    add_train_options(udc, udc_opts);
    udc->add_option("--loss", udc_opts.loss, "com-triplet (default) or triplet");
    udc->add_option("--alpha", udc_opts.alpha, "Constant margin (triplet default 0.2)");
    auto* clf = app.add_subcommand("train-classifier", "Softmax classifier with weighted cross-entropy");
    add_train_options(clf, clf_opts);
    clf->add_option("--weighting", clf_opts.weighting, "equal or inverse-frequency")->capture_default_str();

    // eval
    EvalOptions eval_opts;
    auto* eval = app.add_subcommand("eval", "Score a dataset with a checkpoint");
    eval->add_option("--checkpoint", eval_opts.checkpoint, "Checkpoint path")->required();
    eval->add_option("--data", eval_opts.data, "CSV dataset")->required();
    eval->add_option("--split", eval_opts.split, "all, or train/val/test re-derived from the checkpoint seed")
        ->capture_default_str();
    eval->add_option("--scores-out", eval_opts.scores_out, "Per-row predictions and scores CSV");
    eval->add_option("--results", eval_opts.results, "Results record path");

    // sweep
    std::string ratios_text = "900:900,900:450,900:225,900:60,900:25,900:15";
    std::string seeds_text = "1,2,3,4,5";
    std::string methods_text = "sdc-com,classifier-lw";
    std::string sweep_out, sweep_summary, sweep_config;
    dc::SweepConfig sweep_cfg;
    auto* sweep = app.add_subcommand("sweep-imbalance", "Train and evaluate across imbalance ratios");
    sweep->add_option("--ratios", ratios_text, "Comma-separated MAJ:MIN list")->capture_default_str();
    sweep->add_option("--seeds", seeds_text, "Comma-separated seeds")->capture_default_str();
    sweep->add_option("--methods", methods_text,
                      "Comma-separated subset of sdc-com, sdc-triplet, classifier, classifier-lw, udc-com, udc-triplet")
        ->capture_default_str();
    sweep->add_option("--dim", sweep_cfg.blobs.dim, "Feature dimension")->capture_default_str();
    sweep->add_option("--separation", sweep_cfg.blobs.separation, "Class-mean distance in sigma units")
        ->capture_default_str();
    sweep->add_option("--config", sweep_config, "JSON training configuration");
    sweep->add_option("--threads", sweep_cfg.threads, "Worker threads")->capture_default_str();
    sweep->add_option("--out", sweep_out, "Per-run CSV path")->required();
    sweep->add_option("--summary", sweep_summary, "Median AUC per ratio x method CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*synth) {
            dc::save_csv(synth_out, dc::synth_imbalanced(blob));
            return 0;
        }
        if (*sdc) return run_train("train-sdc", sdc_opts);
        if (*udc) return run_train("train-udc", udc_opts);
        if (*clf) return run_train("train-classifier", clf_opts);
        if (*eval) return run_eval(eval_opts);
        if (*sweep) {
            sweep_cfg.ratios = parse_ratios(ratios_text);
            for (const auto& s : split_list(seeds_text)) sweep_cfg.seeds.push_back(parse_count(s, "seed"));
            for (const auto& m : split_list(methods_text)) sweep_cfg.methods.push_back(dc::parse_method(m));
            if (!sweep_config.empty()) sweep_cfg.train = dc::config_from_json(dc::read_text_file(sweep_config));
            const auto rows = dc::run_sweep(sweep_cfg);
            dc::write_text_file(sweep_out, dc::format_sweep_rows(rows));
            const std::string summary = dc::format_sweep_summary(rows);
            if (!sweep_summary.empty()) dc::write_text_file(sweep_summary, summary);
            std::cout << summary;
            return 0;
        }
    } catch (const dc::Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
