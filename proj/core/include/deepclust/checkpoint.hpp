#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "deepclust/encoder.hpp"
#include "deepclust/prototypes.hpp"
#include "deepclust/training.hpp"

namespace deepclust {

inline constexpr int kCheckpointVersion = 1;

// Everything needed to reproduce inference: encoder weights plus either the
// class prototypes (deep clustering) or the softmax head (classifier).
struct Checkpoint {
    int version = kCheckpointVersion;
    std::string method;
    std::uint64_t seed = 0;
    std::string config_json = "{}";
    EncoderParams encoder;
    std::optional<Prototypes> prototypes;
    std::optional<DenseLayer> head;

    std::size_t input_dim() const { return encoder.config.input_dim; }
};

// JSON document; doubles use shortest round-trip formatting so a
// save/load cycle reproduces inference outputs bit for bit.
std::string format_checkpoint(const Checkpoint& checkpoint);
// Throws ParseError on malformed documents, unknown versions, or shape disagreement.
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Scores a D x n batch with whichever head the checkpoint carries.
// Throws DimensionMismatch when D differs from the checkpoint's input_dim.
Scored score(const Checkpoint& checkpoint, const Matrix& x);

}  // namespace deepclust
