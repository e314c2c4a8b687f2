#pragma once

#include <string_view>

namespace hyperrule {

// Outcome of the anomaly detector; values follow the sign convention of the
// decision function.
enum class Label : int { non_anomalous = 1, anomalous = -1 };

constexpr std::string_view to_string(Label l) {
  return l == Label::non_anomalous ? "non_anomalous" : "anomalous";
}

constexpr Label opposite(Label l) {
  return l == Label::non_anomalous ? Label::anomalous : Label::non_anomalous;
}

}  // namespace hyperrule
