#pragma once

#include <cstdint>
#include <string_view>

namespace deepclust {

// Binary class tag. The minority class is the positive class everywhere.
enum class Label : std::uint8_t { majority = 0, minority = 1 };

constexpr Label opposite(Label c) noexcept {
    return c == Label::minority ? Label::majority : Label::minority;
}

constexpr int to_int(Label c) noexcept { return static_cast<int>(c); }

constexpr std::string_view to_string(Label c) noexcept {
    return c == Label::minority ? "minority" : "majority";
}

}  // namespace deepclust
