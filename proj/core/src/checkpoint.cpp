#include "deepclust/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "deepclust/dataio.hpp"
#include "deepclust/errors.hpp"

namespace deepclust {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.storage()}};
}

Matrix matrix_from(const json& j, const char* what) {
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols) {
        throw ParseError(std::string(what) + ": shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                             " disagrees with " + std::to_string(data.size()) + " values",
                         0);
    }
    return Matrix(rows, cols, std::move(data));
}

json layer_json(const DenseLayer& l) { return json{{"weight", matrix_json(l.weight)}, {"bias", matrix_json(l.bias)}}; }

DenseLayer layer_from(const json& j) {
    DenseLayer l{matrix_from(j.at("weight"), "weight"), matrix_from(j.at("bias"), "bias")};
    if (l.bias.rows() != l.weight.rows() || l.bias.cols() != 1) throw ParseError("bias shape disagrees with weight", 0);
    return l;
}

}  // namespace

std::string format_checkpoint(const Checkpoint& ck) {
    json j;
    j["format"] = "deepclust-checkpoint";
    j["version"] = ck.version;
    j["method"] = ck.method;
    j["seed"] = ck.seed;
    j["config"] = json::parse(ck.config_json);
    const EncoderConfig& ec = ck.encoder.config;
    json layers = json::array();
    for (const auto& l : ck.encoder.layers) layers.push_back(layer_json(l));
    j["encoder"] = {{"input_dim", ec.input_dim},
                    {"hidden", ec.hidden},
                    {"embedding_dim", ec.embedding_dim},
                    {"dropout_rate", ec.dropout_rate},
                    {"layers", layers}};
    if (ck.prototypes) {
        const Prototypes& p = *ck.prototypes;
        j["prototypes"] = {{"cl_min", p.cl_min},
                           {"cl_maj", p.cl_maj},
                           {"separation", p.separation},
                           {"feature_mask", p.feature_mask}};
    } else {
        j["prototypes"] = nullptr;
    }
    j["head"] = ck.head ? layer_json(*ck.head) : json(nullptr);
    return j.dump(1) + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
    Checkpoint ck;
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "deepclust-checkpoint") throw ParseError("not a checkpoint", 0);
        ck.version = j.at("version").get<int>();
        if (ck.version != kCheckpointVersion) {
            throw ParseError("unsupported checkpoint version " + std::to_string(ck.version), 0);
        }
        ck.method = j.at("method").get<std::string>();
        ck.seed = j.at("seed").get<std::uint64_t>();
        ck.config_json = j.at("config").dump();

        const json& enc = j.at("encoder");
        EncoderConfig& ec = ck.encoder.config;
        ec.input_dim = enc.at("input_dim").get<std::size_t>();
        ec.hidden = enc.at("hidden").get<std::vector<std::size_t>>();
        ec.embedding_dim = enc.at("embedding_dim").get<std::size_t>();
        ec.dropout_rate = enc.at("dropout_rate").get<double>();
        for (const auto& l : enc.at("layers")) ck.encoder.layers.push_back(layer_from(l));

        // Layer shapes must chain input_dim -> hidden... -> embedding_dim.
        std::vector<std::size_t> widths{ec.input_dim};
        widths.insert(widths.end(), ec.hidden.begin(), ec.hidden.end());
        widths.push_back(ec.embedding_dim);
        if (ck.encoder.layers.size() + 1 != widths.size()) throw ParseError("layer count disagrees with config", 0);
        for (std::size_t i = 0; i < ck.encoder.layers.size(); ++i) {
            const Matrix& w = ck.encoder.layers[i].weight;
            if (w.cols() != widths[i] || w.rows() != widths[i + 1]) {
                throw ParseError("layer " + std::to_string(i) + " shape disagrees with config", 0);
            }
        }

        if (!j.at("prototypes").is_null()) {
            const json& p = j.at("prototypes");
            Prototypes proto;
            proto.cl_min = p.at("cl_min").get<std::vector<double>>();
            proto.cl_maj = p.at("cl_maj").get<std::vector<double>>();
            proto.separation = p.at("separation").get<double>();
            proto.feature_mask = p.at("feature_mask").get<std::vector<bool>>();
            if (proto.cl_min.size() != ec.embedding_dim || proto.cl_maj.size() != ec.embedding_dim ||
                proto.feature_mask.size() != ec.embedding_dim) {
                throw ParseError("prototype length disagrees with embedding_dim", 0);
            }
            ck.prototypes = std::move(proto);
        }
        if (!j.at("head").is_null()) {
            DenseLayer head = layer_from(j.at("head"));
            if (head.weight.rows() != 2 || head.weight.cols() != ec.embedding_dim) {
                throw ParseError("classifier head shape disagrees with embedding_dim", 0);
            }
            ck.head = std::move(head);
        }
        if (!ck.prototypes && !ck.head) throw ParseError("checkpoint has neither prototypes nor a head", 0);
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what(), 0);
    }
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    write_text_file(path, format_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_text_file(path)); }

Scored score(const Checkpoint& ck, const Matrix& x) {
    if (x.rows() != ck.input_dim()) {
        throw DimensionMismatch("checkpoint expects " + std::to_string(ck.input_dim()) + " features, data has " +
                                std::to_string(x.rows()));
    }
    if (ck.prototypes) return score_prototypes(ck.encoder, *ck.prototypes, x);
    ClassifierModel model;
    model.encoder = ck.encoder;
    model.head = *ck.head;
    return score_classifier(model, x);
}

}  // namespace deepclust
