#include "probe/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "probe/prompts.hpp"

namespace probe {

namespace {

VariantDecision query_variant(Gateway& gateway, const ModelHandle& model,
                              const std::string& system, const DilemmaText& text) {
    VariantDecision out;
    const std::string response =
        gateway.complete_chat(model, system, text.render(), deterministic_profile(),
                              "decision-system");
    const auto parsed = parse_explanation_decision(response);
    if (parsed) {
        out.decision = parsed.value().decision;
        out.explanation = parsed.value().explanation;
    }
    return out;
}

}  // namespace

DecisionLog evaluate_model(Gateway& gateway, const ModelHandle& model,
                           const std::vector<BenchmarkRecord>& dataset, int parallelism) {
    if (dataset.empty()) throw ProbeError("bad-config", "evaluate_model over an empty dataset");
    const auto system = render_prompt(PromptKind::decision_system, {});
    if (!system) throw ProbeError("bad-config", "decision template: " + system.error().code);

    DecisionLog log;
    log.model = model.model;
    log.entries.resize(dataset.size());

    auto evaluate_one = [&](std::size_t index) {
        const BenchmarkRecord& record = dataset[index];
        DecisionEntry entry;
        entry.record_id = record.pair.id;
        entry.bias = record.pair.bias;
        entry.unbiased = query_variant(gateway, model, system.value(), record.pair.unbiased);
        entry.biased = query_variant(gateway, model, system.value(), record.pair.biased);
        log.entries[index] = std::move(entry);
    };

    if (parallelism <= 1) {
        for (std::size_t i = 0; i < dataset.size(); ++i) evaluate_one(i);
        return log;
    }

    std::size_t next = 0;
    while (next < dataset.size()) {
        const std::size_t batch_end =
            std::min(dataset.size(), next + static_cast<std::size_t>(parallelism));
        std::vector<std::future<void>> futures;
        for (std::size_t i = next; i < batch_end; ++i)
            futures.push_back(std::async(std::launch::async, evaluate_one, i));
        for (auto& f : futures) f.get();
        next = batch_end;
    }
    return log;
}

Fraction bias_sensitivity_counts(const DecisionLog& log, Bias bias) {
    Fraction f;
    for (const auto& entry : log.entries) {
        if (entry.bias != bias || entry.abstained()) continue;
        ++f.denominator;
        if (entry.flipped()) ++f.numerator;
    }
    return f;
}

double bias_sensitivity(const DecisionLog& log, Bias bias) {
    const Fraction f = bias_sensitivity_counts(log, bias);
    if (f.denominator == 0)
        throw ProbeError("empty-denominator",
                         "no non-abstained records for bias '" +
                             std::string(bias_info(bias).key) + "'");
    return f.value();
}

TierBoundaries complexity_quartiles(std::vector<std::int64_t> steps) {
    if (steps.size() < 4)
        throw ProbeError("too-few-values", "need at least 4 step counts, got " +
                                               std::to_string(steps.size()));
    std::sort(steps.begin(), steps.end());
    const auto n = static_cast<double>(steps.size());
    auto nearest_rank = [&](int k) {
        const auto rank = static_cast<std::size_t>(std::ceil(k * n / 4.0));
        return steps[rank - 1];
    };
    return {nearest_rank(1), nearest_rank(2), nearest_rank(3)};
}

namespace {

constexpr std::array<Tier, 4> kTiers = {Tier::low, Tier::mid_low, Tier::mid_high, Tier::high};

}  // namespace

const std::array<Tier, 4>& all_tiers() { return kTiers; }

std::string_view tier_key(Tier t) {
    switch (t) {
        case Tier::low: return "low";
        case Tier::mid_low: return "mid-low";
        case Tier::mid_high: return "mid-high";
        case Tier::high: return "high";
    }
    return "low";
}

Tier assign_tier(std::int64_t steps, const TierBoundaries& b) {
    if (steps <= b.q1) return Tier::low;
    if (steps <= b.q2) return Tier::mid_low;
    if (steps <= b.q3) return Tier::mid_high;
    return Tier::high;
}

std::map<std::pair<Bias, Tier>, Fraction> tiered_sensitivity(
    const DecisionLog& log, const std::vector<BenchmarkRecord>& dataset,
    const TierBoundaries& boundaries) {
    std::map<std::string, const BenchmarkRecord*> by_id;
    for (const auto& record : dataset) by_id[record.pair.id] = &record;

    std::map<std::pair<Bias, Tier>, Fraction> cells;
    for (const auto& entry : log.entries) {
        if (entry.abstained()) continue;
        const auto it = by_id.find(entry.record_id);
        if (it == by_id.end()) continue;
        const Tier tier = assign_tier(it->second->unbiased_trace.inference_steps, boundaries);
        Fraction& cell = cells[{entry.bias, tier}];
        ++cell.denominator;
        if (entry.flipped()) ++cell.numerator;
    }
    return cells;
}

std::int64_t AwarenessResult::total_excluded() const {
    std::int64_t total = 0;
    for (const auto& [bias, count] : excluded) total += count;
    return total;
}

AwarenessResult assess_awareness(Gateway& gateway, const ModelHandle& judge,
                                 const DecisionLog& log,
                                 const std::vector<BenchmarkRecord>& dataset, int runs) {
    if (runs < 1) throw ProbeError("bad-config", "awareness runs");
    std::map<std::string, const BenchmarkRecord*> by_id;
    for (const auto& record : dataset) by_id[record.pair.id] = &record;

    AwarenessResult result;
    std::map<Bias, Fraction> rates;

    for (const auto& entry : log.entries) {
        if (!entry.biased.decision) continue;  // no explanation to judge
        const auto it = by_id.find(entry.record_id);
        if (it == by_id.end()) continue;
        const BenchmarkRecord& record = *it->second;
        const BiasInfo& info = bias_info(entry.bias);

        std::map<std::string, std::string> context;
        context["bias_label"] = std::string(info.prompt_label);
        context["bias_definition"] = std::string(info.definition);
        const auto system = render_prompt(PromptKind::awareness_check, context);
        if (!system) throw ProbeError("bad-config", "awareness template: " + system.error().code);

        const std::string decision_name =
            *entry.biased.decision == Option::A ? "Option A" : "Option B";
        const std::string user = "# Task\n" + record.pair.biased.render() +
                                 "\n\n# Recommended Decision\n" + decision_name +
                                 "\n\n# Decision Explanation\n" + entry.biased.explanation + "\n";
        const std::string positive =
            judge_positive_phrase(PromptKind::awareness_check, info.prompt_label);

        int parsed_count = 0, positive_count = 0;
        for (int run = 0; run < runs; ++run) {
            const std::string response = gateway.complete_chat(
                judge, system.value(), user, deterministic_profile(), "awareness-check");
            const auto verdict = parse_judge_verdict(response, positive);
            if (!verdict) continue;
            ++parsed_count;
            if (verdict.value().positive) ++positive_count;
        }
        if (parsed_count == 0) {
            ++result.excluded[entry.bias];
            continue;
        }
        const bool aware = positive_count * 2 > parsed_count;
        result.per_record[entry.record_id] = aware;
        Fraction& rate = rates[entry.bias];
        ++rate.denominator;
        if (aware) ++rate.numerator;
    }
    result.per_bias = std::move(rates);
    return result;
}

std::vector<ProxyCorrelation> correlate_proxies(const DecisionLog& log,
                                                const std::vector<BenchmarkRecord>& dataset) {
    std::map<std::string, const BenchmarkRecord*> by_id;
    for (const auto& record : dataset) by_id[record.pair.id] = &record;

    struct Row {
        double flip;
        double cosine;
        double levenshtein;
        double agreement;
        double round_trip;
    };
    std::vector<Row> rows;
    for (const auto& entry : log.entries) {
        if (entry.abstained()) continue;
        const auto it = by_id.find(entry.record_id);
        if (it == by_id.end()) continue;
        const BenchmarkRecord& r = *it->second;
        double agreement = 0.0;
        for (const auto& outcome : r.trail.outcomes)
            if (outcome.filter == FilterId::output_matching) {
                const auto m = outcome.metrics.find("agreement");
                if (m != outcome.metrics.end()) agreement = m->second;
            }
        rows.push_back({entry.flipped() ? 1.0 : 0.0, r.intra_cosine, r.intra_levenshtein,
                        agreement, r.round_trip_cosine});
    }
    if (rows.size() < 3)
        throw ProbeError("too-few-values", "need at least 3 evaluated records");

    std::vector<double> flips;
    flips.reserve(rows.size());
    for (const auto& row : rows) flips.push_back(row.flip);

    auto correlate = [&](const char* name, auto getter) {
        ProxyCorrelation out;
        out.proxy = name;
        std::vector<double> xs;
        xs.reserve(rows.size());
        for (const auto& row : rows) xs.push_back(getter(row));
        try {
            out.value = pearson_r(xs, flips);
        } catch (const ProbeError&) {
            out.value = std::nullopt;  // degenerate variance
        }
        return out;
    };

    return {
        correlate("intra_cosine", [](const Row& r) { return r.cosine; }),
        correlate("intra_levenshtein", [](const Row& r) { return r.levenshtein; }),
        correlate("audit_agreement", [](const Row& r) { return r.agreement; }),
        correlate("round_trip_cosine", [](const Row& r) { return r.round_trip; }),
    };
}

}  // namespace probe
