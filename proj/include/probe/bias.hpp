#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace probe {

/// The eight cognitive-bias families probed by the benchmark.
enum class Bias {
    anchoring,
    bandwagon,
    framing,
    availability,
    hindsight,
    confirmation,
    hyperbolic_discounting,
    overconfidence,
};

struct BiasInfo {
    Bias id;
    std::string_view key;           // stable dataset label, e.g. "hyperbolic-discounting"
    std::string_view prompt_label;  // wording substituted into prompts, e.g. "framing effect"
    std::string_view definition;    // adopted definition text, shown to judge models
};

inline constexpr int kBiasCount = 8;

const std::array<BiasInfo, kBiasCount>& all_biases();
const BiasInfo& bias_info(Bias b);
std::optional<Bias> bias_from_key(std::string_view key);

}  // namespace probe
