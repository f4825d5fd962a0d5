#include "deepclust/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deepclust/errors.hpp"
#include "deepclust/numcore/rng.hpp"

namespace deepclust {

using nlohmann::json;

std::string_view to_string(Split s) noexcept {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "unknown";
}

// ---- LabeledDataset --------------------------------------------------------

std::size_t LabeledDataset::count(int label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

std::vector<std::size_t> LabeledDataset::indices(Split split) const {
    if (splits.size() != labels.size()) throw InvalidSpec("dataset has not been split");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < splits.size(); ++i) {
        if (splits[i] == split) out.push_back(i);
    }
    return out;
}

Matrix LabeledDataset::batch(std::span<const std::size_t> rows) const {
    Matrix out(dim(), rows.size());
    for (std::size_t c = 0; c < rows.size(); ++c) {
        for (std::size_t d = 0; d < dim(); ++d) out(d, c) = features(rows[c], d);
    }
    return out;
}

std::vector<int> LabeledDataset::labels_of(std::span<const std::size_t> rows) const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(labels[r]);
    return out;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
    LabeledDataset out;
    out.features = batch(rows).transposed();
    out.labels = labels_of(rows);
    return out;
}

void LabeledDataset::validate() const {
    if (features.rows() != labels.size()) throw LengthMismatch("feature rows and labels differ");
    if (!splits.empty() && splits.size() != labels.size()) throw LengthMismatch("split tags and labels differ");
    for (int y : labels) {
        if (y != 0 && y != 1) throw InvalidSpec("labels must be 0 or 1");
    }
    if (!features.all_finite()) throw InvalidSpec("features must be finite");
}

// ---- synthetic blobs -------------------------------------------------------

void BlobSpec::validate() const {
    if (dim == 0) throw InvalidSpec("dim must be >= 1");
    if (n_min < 1) throw InvalidSpec("n_min must be >= 1");
    if (n_maj < n_min) throw InvalidSpec("n_maj must be >= n_min");
    if (!(sigma_maj > 0.0 && sigma_min > 0.0)) throw InvalidSpec("sigma must be > 0");
    if (!std::isfinite(separation)) throw InvalidSpec("separation must be finite");
    if (!mean_maj.empty() && mean_maj.size() != dim) throw InvalidSpec("mean_maj length differs from dim");
    if (!mean_min.empty() && mean_min.size() != dim) throw InvalidSpec("mean_min length differs from dim");
}

namespace {

// Default means sit at -/+ separation/2 along the unit all-ones diagonal.
std::vector<double> diagonal_mean(const BlobSpec& spec, double sign) {
    const double step = 0.5 * spec.separation * spec.sigma_maj / std::sqrt(static_cast<double>(spec.dim));
    return std::vector<double>(spec.dim, sign * step);
}

}  // namespace

std::vector<double> BlobSpec::resolved_mean_maj() const {
    return mean_maj.empty() ? diagonal_mean(*this, -1.0) : mean_maj;
}

std::vector<double> BlobSpec::resolved_mean_min() const {
    return mean_min.empty() ? diagonal_mean(*this, 1.0) : mean_min;
}

LabeledDataset synth_imbalanced(const BlobSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    LabeledDataset ds;
    ds.features = Matrix(spec.n_maj + spec.n_min, spec.dim);
    const auto mu_maj = spec.resolved_mean_maj();
    const auto mu_min = spec.resolved_mean_min();
    std::size_t row = 0;
    auto emit = [&](std::size_t n, const std::vector<double>& mu, double sigma, int label) {
        for (std::size_t i = 0; i < n; ++i, ++row) {
            for (std::size_t d = 0; d < spec.dim; ++d) ds.features(row, d) = rng.normal(mu[d], sigma);
            ds.labels.push_back(label);
        }
    };
    emit(spec.n_maj, mu_maj, spec.sigma_maj, 0);
    emit(spec.n_min, mu_min, spec.sigma_min, 1);
    return ds;
}

// ---- split -----------------------------------------------------------------

std::vector<Split> split_dataset(const LabeledDataset& dataset, std::uint64_t seed) {
    const std::size_t z = dataset.size();
    if (z < 8) throw TooFewSamples("splitting needs at least 8 samples, got " + std::to_string(z));
    Rng rng(seed);
    std::vector<Split> tags(z, Split::train);

    // Cumulative rounding across classes (minority first) keeps each split
    // total within one sample of its target.
    std::size_t cum = 0, cum_train = 0, cum_val = 0;
    for (int label : {1, 0}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < z; ++i) {
            if (dataset.labels[i] == label) members.push_back(i);
        }
        for (std::size_t i = members.size(); i > 1; --i) {
            std::swap(members[i - 1], members[rng.index(i)]);
        }
        const std::size_t n = members.size();
        cum += n;
        const auto train_to = static_cast<std::size_t>(std::llround(0.75 * static_cast<double>(cum)));
        const auto val_to = static_cast<std::size_t>(std::llround(0.125 * static_cast<double>(cum)));
        std::size_t n_train = std::min(n, train_to - std::min(train_to, cum_train));
        std::size_t n_val = std::min(n - n_train, val_to - std::min(val_to, cum_val));
        std::size_t n_test = n - n_train - n_val;
        if (n >= 3) {
            while (n_val == 0 || n_test == 0) {
                if (n_train <= 1) break;
                --n_train;
                (n_val == 0 ? n_val : n_test) += 1;
            }
        }
        cum_train += n_train;
        cum_val += n_val;
        for (std::size_t k = 0; k < n; ++k) {
            tags[members[k]] = k < n_train ? Split::train : (k < n_train + n_val ? Split::val : Split::test);
        }
    }
    return tags;
}

// ---- CSV -------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
            field.remove_suffix(1);
        }
        out.push_back(field);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_double(std::string_view s, std::size_t line) {
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ParseError("invalid number '" + std::string(s) + "'", line);
    }
    if (!std::isfinite(v)) throw ParseError("non-finite value '" + std::string(s) + "'", line);
    return v;
}

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

LabeledDataset parse_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        lines.push_back(text.substr(start, nl == std::string_view::npos ? text.npos : nl - start));
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    if (lines.empty() || split_fields(lines.front()).front().empty()) {
        throw MissingColumn("CSV header is missing");
    }
    const auto header = split_fields(lines.front());
    if (header.back() != "label") throw MissingColumn("CSV header has no trailing 'label' column");
    const std::size_t d = header.size() - 1;
    if (d == 0) throw MissingColumn("CSV header has no feature columns");
    for (std::size_t i = 0; i < d; ++i) {
        if (header[i] != "f" + std::to_string(i)) {
            throw MissingColumn("expected column 'f" + std::to_string(i) + "', found '" + std::string(header[i]) +
                                "'");
        }
    }

    std::vector<double> values;
    LabeledDataset ds;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::size_t line_no = li + 1;
        std::string_view line = lines[li];
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        const auto fields = split_fields(line);
        if (fields.size() != d + 1) {
            throw ParseError("expected " + std::to_string(d + 1) + " fields, found " + std::to_string(fields.size()),
                             line_no);
        }
        for (std::size_t i = 0; i < d; ++i) values.push_back(parse_double(fields[i], line_no));
        const std::string_view lab = fields[d];
        if (lab != "0" && lab != "1") {
            throw ParseError("row " + std::to_string(li) + ": label must be 0 or 1, found '" + std::string(lab) + "'",
                             line_no);
        }
        ds.labels.push_back(lab == "1" ? 1 : 0);
    }
    ds.features = Matrix(ds.labels.size(), d, std::move(values));
    return ds;
}

LabeledDataset load_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path)); }

std::string format_csv(const LabeledDataset& dataset) {
    dataset.validate();
    std::string out;
    for (std::size_t i = 0; i < dataset.dim(); ++i) out += "f" + std::to_string(i) + ",";
    out += "label\n";
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        for (std::size_t c = 0; c < dataset.dim(); ++c) {
            out += format_double(dataset.features(r, c));
            out += ',';
        }
        out += dataset.labels[r] == 1 ? "1\n" : "0\n";
    }
    return out;
}

void save_csv(const std::filesystem::path& path, const LabeledDataset& dataset) {
    write_text_file(path, format_csv(dataset));
}

// ---- results ---------------------------------------------------------------

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json metric_json(const MetricSet& m) {
    return json{{"recall", m.recall},     {"precision", m.precision}, {"specificity", m.specificity},
                {"accuracy", m.accuracy}, {"f1", m.f1},               {"auc", number_or_null(m.auc)},
                {"samples", m.samples}};
}

MetricSet metric_from(const json& j) {
    MetricSet m;
    m.recall = j.at("recall").get<double>();
    m.precision = j.at("precision").get<double>();
    m.specificity = j.at("specificity").get<double>();
    m.accuracy = j.at("accuracy").get<double>();
    m.f1 = j.at("f1").get<double>();
    m.auc = j.at("auc").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("auc").get<double>();
    m.samples = j.at("samples").get<std::size_t>();
    return m;
}

}  // namespace

std::string format_results(const ResultsRecord& record) {
    json j;
    j["command"] = record.command;
    j["config"] = json::parse(record.config_json);
    j["seed"] = record.seed;
    json splits = json::object();
    for (const auto& [name, m] : record.splits) {
        splits[name] = metric_json(m);
        if (name == record.headline_split) j["metrics"] = metric_json(m);
    }
    j["splits"] = splits;
    j["prototype_separation"] =
        record.prototype_separation ? number_or_null(*record.prototype_separation) : json(nullptr);
    return j.dump(2) + "\n";
}

ResultsRecord parse_results(std::string_view text) {
    try {
        const json j = json::parse(text);
        ResultsRecord r;
        r.command = j.at("command").get<std::string>();
        r.config_json = j.at("config").dump();
        r.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& [name, m] : j.at("splits").items()) r.splits.emplace_back(name, metric_from(m));
        if (!j.at("prototype_separation").is_null()) {
            r.prototype_separation = j.at("prototype_separation").get<double>();
        }
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("results record: ") + e.what(), 0);
    }
}

void save_results(const std::filesystem::path& path, const ResultsRecord& record) {
    write_text_file(path, format_results(record));
}

// ---- files -----------------------------------------------------------------

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace deepclust
