#include "deepclust/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <tuple>
#include <thread>

#include <nlohmann/json.hpp>

#include "deepclust/errors.hpp"
#include "deepclust/log.hpp"
#include "deepclust/numcore/rng.hpp"

namespace deepclust {

using nlohmann::json;

namespace {

constexpr double kTripletAlpha = 0.2;

struct MethodName {
    Method method;
    std::string_view name;
};

constexpr MethodName kMethodNames[] = {
    {Method::sdc_com, "sdc-com"},       {Method::sdc_triplet, "sdc-triplet"}, {Method::classifier, "classifier"},
    {Method::classifier_lw, "classifier-lw"}, {Method::udc_com, "udc-com"},     {Method::udc_triplet, "udc-triplet"},
};

bool is_classifier(Method m) { return m == Method::classifier || m == Method::classifier_lw; }
bool is_udc(Method m) { return m == Method::udc_com || m == Method::udc_triplet; }

void reject_unknown(const json& j, std::initializer_list<std::string_view> keys, const std::string& where) {
    for (const auto& [k, v] : j.items()) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
            throw ParseError("config" + where + ": unknown key \"" + k + "\"", 0);
        }
    }
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

std::string ratio_label(std::size_t n_maj, std::size_t n_min) {
    return std::to_string(n_maj) + ":" + std::to_string(n_min);
}

}  // namespace

std::string_view to_string(Method m) noexcept {
    for (const auto& entry : kMethodNames) {
        if (entry.method == m) return entry.name;
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (const auto& entry : kMethodNames) {
        if (entry.name == name) return entry.method;
    }
    throw InvalidConfig("unknown method \"" + std::string(name) +
                        "\" (expected sdc-com, sdc-triplet, classifier, classifier-lw, udc-com, udc-triplet)");
}

TrainConfig configure_for(Method m, TrainConfig base) {
    switch (m) {
        case Method::sdc_com:
        case Method::udc_com:
            base.loss = LossKind::com_triplet;
            base.margin = MarginSpec::adaptive();
            break;
        case Method::sdc_triplet:
        case Method::udc_triplet:
            base.loss = LossKind::triplet;
            base.margin = MarginSpec::constant(kTripletAlpha);
            break;
        case Method::classifier:
        case Method::classifier_lw:
            break;
    }
    return base;
}

std::string config_to_json(const TrainConfig& c) {
    json j;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["iterations"] = c.iterations ? json(*c.iterations) : json(nullptr);
    j["loss"] = c.loss == LossKind::com_triplet ? "com_triplet" : "triplet";
    j["margin"] = {{"mode", c.margin.is_adaptive() ? "adaptive" : "constant"}, {"alpha", c.margin.alpha}};
    j["optimizer"] = {{"learning_rate", c.optimizer.learning_rate},
                      {"beta1", c.optimizer.beta1},
                      {"beta2", c.optimizer.beta2},
                      {"epsilon", c.optimizer.epsilon}};
    j["encoder"] = {{"hidden", c.encoder.hidden},
                    {"embedding_dim", c.encoder.embedding_dim},
                    {"dropout_rate", c.encoder.dropout_rate}};
    j["gmm"] = {{"max_iter", c.gmm.max_iter},
                {"tolerance", c.gmm.tolerance},
                {"covariance_floor", c.gmm.covariance_floor},
                {"covariance", c.gmm.covariance == CovarianceType::diagonal ? "diagonal" : "full"},
                {"max_restarts", c.gmm.max_restarts},
                {"kmeans", {{"n_init", c.gmm.kmeans.n_init}, {"max_iter", c.gmm.kmeans.max_iter}}}};
    j["feature_selection"] = c.feature_selection;
    return j.dump();
}

TrainConfig config_from_json(std::string_view text, TrainConfig c) {
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw ParseError("config: expected a JSON object", 0);
        reject_unknown(j,
                       {"batch_size", "epochs", "iterations", "loss", "margin", "optimizer", "encoder", "gmm",
                        "feature_selection"},
                       "");
        if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
        if (j.contains("epochs")) c.epochs = j["epochs"].get<std::size_t>();
        if (j.contains("iterations")) {
            c.iterations = j["iterations"].is_null() ? std::nullopt
                                                     : std::optional<std::size_t>(j["iterations"].get<std::size_t>());
        }
        if (j.contains("loss")) {
            const auto loss = j["loss"].get<std::string>();
            if (loss == "com_triplet") {
                c.loss = LossKind::com_triplet;
            } else if (loss == "triplet") {
                c.loss = LossKind::triplet;
            } else {
                throw ParseError("config: loss must be \"com_triplet\" or \"triplet\"", 0);
            }
        }
        if (j.contains("margin")) {
            const json& m = j["margin"];
            reject_unknown(m, {"mode", "alpha"}, ".margin");
            const auto mode = m.value("mode", std::string(c.margin.is_adaptive() ? "adaptive" : "constant"));
            if (mode == "adaptive") {
                c.margin = MarginSpec::adaptive();
            } else if (mode == "constant") {
                c.margin = MarginSpec::constant(m.value("alpha", c.margin.alpha));
            } else {
                throw ParseError("config: margin.mode must be \"adaptive\" or \"constant\"", 0);
            }
        }
        if (j.contains("optimizer")) {
            const json& o = j["optimizer"];
            reject_unknown(o, {"learning_rate", "beta1", "beta2", "epsilon"}, ".optimizer");
            c.optimizer.learning_rate = o.value("learning_rate", c.optimizer.learning_rate);
            c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
            c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
            c.optimizer.epsilon = o.value("epsilon", c.optimizer.epsilon);
        }
        if (j.contains("encoder")) {
            const json& e = j["encoder"];
            reject_unknown(e, {"hidden", "embedding_dim", "dropout_rate"}, ".encoder");
            c.encoder.hidden = e.value("hidden", c.encoder.hidden);
            c.encoder.embedding_dim = e.value("embedding_dim", c.encoder.embedding_dim);
            c.encoder.dropout_rate = e.value("dropout_rate", c.encoder.dropout_rate);
        }
        if (j.contains("gmm")) {
            const json& g = j["gmm"];
            reject_unknown(g, {"max_iter", "tolerance", "covariance_floor", "covariance", "max_restarts", "kmeans"},
                           ".gmm");
            c.gmm.max_iter = g.value("max_iter", c.gmm.max_iter);
            c.gmm.tolerance = g.value("tolerance", c.gmm.tolerance);
            c.gmm.covariance_floor = g.value("covariance_floor", c.gmm.covariance_floor);
            c.gmm.max_restarts = g.value("max_restarts", c.gmm.max_restarts);
            if (g.contains("covariance")) {
                const auto cov = g["covariance"].get<std::string>();
                if (cov == "diagonal") {
                    c.gmm.covariance = CovarianceType::diagonal;
                } else if (cov == "full") {
                    c.gmm.covariance = CovarianceType::full;
                } else {
                    throw ParseError("config: gmm.covariance must be \"diagonal\" or \"full\"", 0);
                }
            }
            if (g.contains("kmeans")) {
                const json& k = g["kmeans"];
                reject_unknown(k, {"n_init", "max_iter"}, ".gmm.kmeans");
                c.gmm.kmeans.n_init = k.value("n_init", c.gmm.kmeans.n_init);
                c.gmm.kmeans.max_iter = k.value("max_iter", c.gmm.kmeans.max_iter);
            }
        }
        if (j.contains("feature_selection")) c.feature_selection = j["feature_selection"].get<bool>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what(), 0);
    }
    return c;
}

TrainingRun run_training(Method method, const LabeledDataset& dataset, const TrainConfig& config,
                         std::string command) {
    dataset.validate();
    TrainConfig cfg = config;
    if (cfg.encoder.input_dim == 0) cfg.encoder.input_dim = dataset.dim();
    if (cfg.encoder.input_dim != dataset.dim()) {
        throw DimensionMismatch("config expects " + std::to_string(cfg.encoder.input_dim) + " features, data has " +
                                std::to_string(dataset.dim()));
    }
    cfg.validate();

    LabeledDataset ds = dataset;
    ds.splits = split_dataset(ds, cfg.seed);

    TrainingRun run;
    Checkpoint& ck = run.checkpoint;
    ck.method = std::string(to_string(method));
    ck.seed = cfg.seed;
    ck.config_json = config_to_json(cfg);

    if (is_classifier(method)) {
        const auto weighting = method == Method::classifier_lw ? ClassWeighting::inverse_frequency : ClassWeighting::equal;
        ClassifierModel model = train_classifier(ds, cfg, weighting);
        ck.encoder = std::move(model.encoder);
        ck.head = std::move(model.head);
        run.log = std::move(model.records);
    } else {
        TrainLog log = is_udc(method) ? train_udc(ds, cfg) : train_sdc(ds, cfg);
        ck.encoder = std::move(log.encoder);
        ck.prototypes = std::move(log.prototypes);
        run.log = std::move(log.records);
    }

    ResultsRecord& res = run.results;
    res.command = std::move(command);
    res.config_json = ck.config_json;
    res.seed = cfg.seed;
    res.headline_split = "test";
    for (Split s : {Split::train, Split::val, Split::test}) {
        const auto rows = ds.indices(s);
        const auto labels = ds.labels_of(rows);
        res.splits.emplace_back(std::string(to_string(s)), evaluate(labels, score(ck, ds.batch(rows))));
    }
    if (ck.prototypes) res.prototype_separation = ck.prototypes->separation;
    return run;
}

// ---- sweep --------------------------------------------------------------------

void SweepConfig::validate() const {
    if (ratios.size() < 2) throw InvalidConfig("sweep needs at least two ratios");
    if (seeds.empty()) throw InvalidConfig("sweep needs at least one seed");
    if (methods.empty()) throw InvalidConfig("sweep needs at least one method");
    for (const auto& [maj, mn] : ratios) {
        if (maj == 0 || mn == 0) throw InvalidConfig("sweep ratio " + ratio_label(maj, mn) + " has an empty class");
    }
    if (threads == 0) throw InvalidConfig("sweep threads must be positive");
}

std::vector<std::pair<std::size_t, std::size_t>> default_sweep_ratios() {
    return {{900, 900}, {900, 450}, {900, 225}, {900, 60}, {900, 25}, {900, 15}};
}

std::uint64_t sweep_data_seed(std::size_t n_maj, std::size_t n_min, std::uint64_t seed) {
    return mix_seed(mix_seed(seed, n_maj), n_min);
}

std::vector<SweepRow> run_sweep(const SweepConfig& config) {
    config.validate();
    std::vector<SweepRow> rows;
    for (const auto& [maj, mn] : config.ratios) {
        for (Method m : config.methods) {
            for (std::uint64_t seed : config.seeds) {
                SweepRow row;
                row.n_maj = maj;
                row.n_min = mn;
                row.method = m;
                row.seed = seed;
                rows.push_back(std::move(row));
            }
        }
    }

    auto run_cell = [&config](SweepRow& row) {
        try {
            const std::uint64_t data_seed = sweep_data_seed(row.n_maj, row.n_min, row.seed);
            BlobSpec spec = config.blobs;
            spec.n_maj = row.n_maj;
            spec.n_min = row.n_min;
            spec.seed = data_seed;
            const LabeledDataset ds = synth_imbalanced(spec);
            TrainConfig cfg = configure_for(row.method, config.train);
            cfg.seed = mix_seed(data_seed, 1);  // same split for every method of a cell
            const TrainingRun run = run_training(row.method, ds, cfg, "sweep-imbalance");
            row.test = run.results.splits.back().second;
            row.separation = run.results.prototype_separation.value_or(std::numeric_limits<double>::quiet_NaN());
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
            row.separation = std::numeric_limits<double>::quiet_NaN();
            row.test.auc = std::numeric_limits<double>::quiet_NaN();
            logging::warn("sweep cell {} {} seed {} failed: {}", ratio_label(row.n_maj, row.n_min), to_string(row.method),
                      row.seed, e.what());
        }
    };

    const std::size_t workers = std::min(config.threads, rows.size());
    if (workers <= 1) {
        for (auto& row : rows) run_cell(row);
        return rows;
    }
    // Each cell writes only its own row slot, so the output order is fixed.
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < rows.size(); i = next++) run_cell(rows[i]);
        });
    }
    pool.clear();
    return rows;
}

std::string format_sweep_rows(const std::vector<SweepRow>& rows) {
    std::string out =
        "ratio,n_maj,n_min,method,seed,status,auc,recall,precision,specificity,accuracy,f1,separation,error\n";
    for (const auto& r : rows) {
        out += ratio_label(r.n_maj, r.n_min) + "," + std::to_string(r.n_maj) + "," + std::to_string(r.n_min) + "," +
               std::string(to_string(r.method)) + "," + std::to_string(r.seed) + "," + (r.ok ? "ok" : "error");
        if (r.ok) {
            for (double v : {r.test.auc, r.test.recall, r.test.precision, r.test.specificity, r.test.accuracy,
                             r.test.f1, r.separation}) {
                out += "," + format_double(v);
            }
            out += ",\n";
        } else {
            out += ",nan,nan,nan,nan,nan,nan,nan," + csv_quote(r.error) + "\n";
        }
    }
    return out;
}

double median_auc(const std::vector<SweepRow>& rows, std::size_t n_maj, std::size_t n_min, Method method) {
    std::vector<double> v;
    for (const auto& r : rows) {
        if (r.ok && r.n_maj == n_maj && r.n_min == n_min && r.method == method && !std::isnan(r.test.auc)) {
            v.push_back(r.test.auc);
        }
    }
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string format_sweep_summary(const std::vector<SweepRow>& rows) {
    std::string out = "ratio,n_maj,n_min,method,median_auc,ok_runs,runs\n";
    std::vector<std::tuple<std::size_t, std::size_t, Method>> groups;
    for (const auto& r : rows) {
        const auto key = std::make_tuple(r.n_maj, r.n_min, r.method);
        if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
    }
    for (const auto& [maj, mn, m] : groups) {
        std::size_t ok = 0, total = 0;
        for (const auto& r : rows) {
            if (r.n_maj == maj && r.n_min == mn && r.method == m) {
                ++total;
                ok += r.ok ? 1 : 0;
            }
        }
        out += ratio_label(maj, mn) + "," + std::to_string(maj) + "," + std::to_string(mn) + "," +
               std::string(to_string(m)) + "," + format_double(median_auc(rows, maj, mn, m)) + "," +
               std::to_string(ok) + "," + std::to_string(total) + "\n";
    }
    return out;
}

}  // namespace deepclust
