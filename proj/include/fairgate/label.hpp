#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "fairgate/error.hpp"

namespace fairgate {

// Binary review label. The numeric encoding used by the models is
// unfair = 1, fair = 0.
enum class Label { fair = 0, unfair = 1 };

inline std::string_view to_string(Label label) {
  return label == Label::unfair ? "unfair" : "fair";
}

inline std::optional<Label> parse_label(std::string_view text) {
  if (text == "fair") return Label::fair;
  if (text == "unfair") return Label::unfair;
  return std::nullopt;
}

inline double label_target(Label label) { return label == Label::unfair ? 1.0 : 0.0; }

}  // namespace fairgate
