#include "probe/bias.hpp"

namespace probe {

namespace {

constexpr std::array<BiasInfo, kBiasCount> kBiases = {{
    {Bias::anchoring, "anchoring", "anchoring bias",
     "Relying too heavily on the first piece of information encountered (the “anchor”) when "
     "making decisions or estimates."},
    {Bias::bandwagon, "bandwagon", "bandwagon effect",
     "Adopting behaviors, styles, or attitudes simply because others are doing so, often to "
     "conform or belong."},
    {Bias::framing, "framing", "framing effect",
     "Having decisions influenced by how information is presented (e.g., in terms of gains or "
     "losses) rather than the content itself."},
    {Bias::availability, "availability", "availability bias",
     "Overestimating the likelihood of events that come easily to mind, often because they are "
     "recent, vivid, or emotionally charged."},
    {Bias::hindsight, "hindsight", "hindsight bias",
     "After an event, believing the outcome was predictable or inevitable, even if it wasn’t."},
    {Bias::confirmation, "confirmation", "confirmation bias",
     "Seeking, interpreting, and remembering information in ways that confirm preexisting "
     "beliefs, while giving less weight to alternatives."},
    {Bias::hyperbolic_discounting, "hyperbolic-discounting", "hyperbolic discounting",
     "Preferring immediate, short-term benefits over larger, long-term advantages."},
    {Bias::overconfidence, "overconfidence", "overconfidence bias",
     "Having subjective confidence in judgments or abilities that exceeds actual accuracy or "
     "performance."},
}};

}  // namespace

const std::array<BiasInfo, kBiasCount>& all_biases() { return kBiases; }

const BiasInfo& bias_info(Bias b) { return kBiases[static_cast<int>(b)]; }

std::optional<Bias> bias_from_key(std::string_view key) {
    for (const auto& info : kBiases)
        if (info.key == key) return info.id;
    return std::nullopt;
}

}  // namespace probe
