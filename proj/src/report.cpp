#include "probe/report.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace probe {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kAbsent = "-";

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ProbeError("unwritable-path", "cannot open " + path.string());
    return out;
}

std::string fmt(double value, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, value);
    return buf;
}

std::vector<Bias> biases_in_log(const DecisionLog& log) {
    std::set<Bias> seen;
    for (const auto& entry : log.entries) seen.insert(entry.bias);
    std::vector<Bias> out(seen.begin(), seen.end());
    return out;
}

}  // namespace

std::string format_fraction(double value) { return fmt(value); }

void write_ledger_tsv(const DiscardLedger& ledger, const std::vector<Bias>& biases,
                      const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "filter";
    for (Bias b : biases) out << '\t' << bias_info(b).key;
    out << "\ttotal\n";
    for (FilterId filter : ledger_filter_order()) {
        out << filter_display(filter);
        std::int64_t total = 0;
        for (Bias b : biases) {
            const auto n = ledger.discards(b, filter);
            total += n;
            out << '\t' << n;
        }
        out << '\t' << total << '\n';
    }
    out << "accepted";
    std::int64_t accepted_total = 0;
    for (Bias b : biases) {
        accepted_total += ledger.accepted(b);
        out << '\t' << ledger.accepted(b);
    }
    out << '\t' << accepted_total << '\n';
    out << "candidates";
    std::int64_t candidates_total = 0;
    for (Bias b : biases) {
        candidates_total += ledger.candidates(b);
        out << '\t' << ledger.candidates(b);
    }
    out << '\t' << candidates_total << '\n';
}

void write_manifest(const RunConfig& config, const std::string& command,
                    const std::string& seed_digest, const EngineConfig& engine,
                    const std::string& engine_version, const GenerateStats& stats,
                    const std::filesystem::path& path) {
    ordered_json j;
    j["version"] = "v1";
    j["command"] = command;
    j["config"] = config.to_json();
    j["seed_digest"] = "sha256:" + seed_digest;
    ordered_json e;
    e["executable"] = engine.executable;
    e["version"] = engine_version;
    e["timeout_ms"] = engine.timeout.count();
    j["engine"] = e;
    ordered_json s;
    s["candidates"] = stats.candidates;
    s["accepted"] = stats.accepted;
    s["discarded"] = stats.discarded;
    ordered_json rejections = ordered_json::object();
    for (const auto& [reason, count] : stats.expansion_rejections) rejections[reason] = count;
    s["expansion_rejections"] = rejections;
    ordered_json balance;
    balance["option_A"] = stats.correct_option_a;
    balance["option_B"] = stats.correct_option_b;
    s["correct_option_balance"] = balance;
    j["stats"] = s;

    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_sensitivity_tsv(const std::vector<ModelEvaluation>& evaluations,
                           const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "model\tbias\tsensitivity\tflips\tdenominator\tabstentions\n";
    for (const auto& eval : evaluations) {
        for (Bias bias : biases_in_log(eval.log)) {
            const Fraction f = bias_sensitivity_counts(eval.log, bias);
            std::int64_t abstained = 0;
            for (const auto& entry : eval.log.entries)
                if (entry.bias == bias && entry.abstained()) ++abstained;
            out << eval.model << '\t' << bias_info(bias).key << '\t'
                << (f.denominator == 0 ? std::string(kAbsent) : fmt(f.value())) << '\t'
                << f.numerator << '\t' << f.denominator << '\t' << abstained << '\n';
        }
    }
}

void write_tiers_tsv(const std::vector<ModelEvaluation>& evaluations,
                     const std::vector<BenchmarkRecord>& dataset,
                     const std::optional<TierBoundaries>& boundaries,
                     const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "model\tbias";
    for (Tier t : all_tiers()) out << '\t' << tier_key(t);
    out << '\n';
    for (const auto& eval : evaluations) {
        std::map<std::pair<Bias, Tier>, Fraction> cells;
        if (boundaries) cells = tiered_sensitivity(eval.log, dataset, *boundaries);
        for (Bias bias : biases_in_log(eval.log)) {
            out << eval.model << '\t' << bias_info(bias).key;
            for (Tier t : all_tiers()) {
                const auto it = cells.find({bias, t});
                if (it == cells.end() || it->second.denominator == 0)
                    out << '\t' << kAbsent;
                else
                    out << '\t' << fmt(it->second.value());
            }
            out << '\n';
        }
    }
}

void write_awareness_tsv(const std::vector<ModelEvaluation>& evaluations,
                         const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "model\tbias\tawareness\taware\tjudged\texcluded\n";
    for (const auto& eval : evaluations) {
        for (Bias bias : biases_in_log(eval.log)) {
            const auto it = eval.awareness.per_bias.find(bias);
            std::int64_t excluded = 0;
            if (auto e = eval.awareness.excluded.find(bias); e != eval.awareness.excluded.end())
                excluded = e->second;
            if (it == eval.awareness.per_bias.end() || it->second.denominator == 0) {
                out << eval.model << '\t' << bias_info(bias).key << '\t' << kAbsent << "\t0\t0\t"
                    << excluded << '\n';
            } else {
                out << eval.model << '\t' << bias_info(bias).key << '\t'
                    << fmt(it->second.value()) << '\t' << it->second.numerator << '\t'
                    << it->second.denominator << '\t' << excluded << '\n';
            }
        }
    }
}

namespace {

std::string decision_cell(const VariantDecision& v) {
    if (!v.decision) return kAbsent;
    return *v.decision == Option::A ? "A" : "B";
}

}  // namespace

void write_decisions_tsv(const std::vector<ModelEvaluation>& evaluations,
                         const std::vector<BenchmarkRecord>& dataset,
                         const std::optional<TierBoundaries>& boundaries,
                         const std::filesystem::path& path) {
    std::map<std::string, const BenchmarkRecord*> by_id;
    for (const auto& record : dataset) by_id[record.pair.id] = &record;

    auto out = open_out(path);
    out << "model\trecord_id\tbias\tinference_steps\ttier\tunbiased_decision\tbiased_decision"
           "\tflipped\tintra_cosine\tintra_levenshtein\taudit_agreement\tround_trip_cosine\n";
    for (const auto& eval : evaluations) {
        for (const auto& entry : eval.log.entries) {
            const auto it = by_id.find(entry.record_id);
            if (it == by_id.end()) continue;
            const BenchmarkRecord& r = *it->second;
            double agreement = 0.0;
            for (const auto& outcome : r.trail.outcomes)
                if (outcome.filter == FilterId::output_matching)
                    if (auto m = outcome.metrics.find("agreement"); m != outcome.metrics.end())
                        agreement = m->second;
            out << eval.model << '\t' << entry.record_id << '\t' << bias_info(entry.bias).key
                << '\t' << r.unbiased_trace.inference_steps << '\t'
                << (boundaries
                        ? std::string(tier_key(assign_tier(r.unbiased_trace.inference_steps, *boundaries)))
                        : std::string(kAbsent))
                << '\t'
                << decision_cell(entry.unbiased) << '\t' << decision_cell(entry.biased) << '\t'
                << (entry.abstained() ? std::string(kAbsent) : std::string(entry.flipped() ? "1" : "0"))
                << '\t' << fmt(r.intra_cosine) << '\t' << fmt(r.intra_levenshtein) << '\t'
                << fmt(agreement) << '\t' << fmt(r.round_trip_cosine) << '\n';
        }
    }
}

std::map<std::string, DecisionLog> read_decisions_tsv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ProbeError("bad-config", "decisions report not readable: " + path.string());

    std::map<std::string, DecisionLog> logs;
    std::string line;
    bool header = true;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (header) {
            header = false;
            continue;
        }
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::stringstream row(line);
        std::string field;
        while (std::getline(row, field, '\t')) fields.push_back(field);
        if (fields.size() < 8)
            throw ProbeError("malformed-line",
                             "decisions report line " + std::to_string(lineno));
        const auto bias = bias_from_key(fields[2]);
        if (!bias)
            throw ProbeError("malformed-line", "decisions report line " + std::to_string(lineno) +
                                                   ": unknown bias " + fields[2]);
        DecisionEntry entry;
        entry.record_id = fields[1];
        entry.bias = *bias;
        if (fields[5] == "A") entry.unbiased.decision = Option::A;
        if (fields[5] == "B") entry.unbiased.decision = Option::B;
        if (fields[6] == "A") entry.biased.decision = Option::A;
        if (fields[6] == "B") entry.biased.decision = Option::B;
        DecisionLog& log = logs[fields[0]];
        log.model = fields[0];
        log.entries.push_back(std::move(entry));
    }
    return logs;
}

void write_significance_tsv(const std::map<std::string, DecisionLog>& logs,
                            const std::vector<BenchmarkRecord>& dataset,
                            const std::filesystem::path& path) {
    std::vector<std::int64_t> steps;
    steps.reserve(dataset.size());
    for (const auto& record : dataset) steps.push_back(record.unbiased_trace.inference_steps);
    std::optional<TierBoundaries> boundaries;
    if (steps.size() >= 4) boundaries = complexity_quartiles(steps);

    // Binomial counts aggregated across models, per bias and extreme tier.
    std::map<Bias, Fraction> high, low;
    for (const auto& [model, log] : logs) {
        if (!boundaries) break;
        const auto cells = tiered_sensitivity(log, dataset, *boundaries);
        for (const auto& [key, cell] : cells) {
            if (key.second == Tier::high) {
                high[key.first].numerator += cell.numerator;
                high[key.first].denominator += cell.denominator;
            } else if (key.second == Tier::low) {
                low[key.first].numerator += cell.numerator;
                low[key.first].denominator += cell.denominator;
            }
        }
    }

    auto out = open_out(path);
    out << "bias\tdelta_pp\tci_lo_pp\tci_hi_pp\tz\tp\thigh_flips\thigh_n\tlow_flips\tlow_n\n";
    for (const auto& info : all_biases()) {
        const auto h = high.find(info.id);
        const auto l = low.find(info.id);
        if (h == high.end() && l == low.end()) continue;
        out << info.key;
        if (h == high.end() || l == low.end() || h->second.denominator == 0 ||
            l->second.denominator == 0) {
            out << '\t' << kAbsent << '\t' << kAbsent << '\t' << kAbsent << '\t' << kAbsent
                << '\t' << kAbsent;
        } else {
            const ProportionSample hs{h->second.numerator, h->second.denominator};
            const ProportionSample ls{l->second.numerator, l->second.denominator};
            const double delta = (hs.fraction() - ls.fraction()) * 100.0;
            const Interval ci = newcombe_interval(hs, ls);
            out << '\t' << fmt(delta) << '\t' << fmt(ci.lo * 100.0) << '\t' << fmt(ci.hi * 100.0);
            const auto ztest = two_proportion_z_one_sided(hs, ls);
            if (ztest)
                out << '\t' << fmt(ztest->z) << '\t' << fmt(ztest->p, "%.6g");
            else
                out << '\t' << kAbsent << '\t' << kAbsent;
        }
        const auto cell = [&](const std::map<Bias, Fraction>& m) {
            auto it = m.find(info.id);
            return it == m.end() ? Fraction{} : it->second;
        };
        out << '\t' << cell(high).numerator << '\t' << cell(high).denominator << '\t'
            << cell(low).numerator << '\t' << cell(low).denominator << '\n';
    }
}

void write_proxies_tsv(const std::map<std::string, DecisionLog>& logs,
                       const std::vector<BenchmarkRecord>& dataset,
                       const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "model\tproxy\tr\tp\n";
    for (const auto& [model, log] : logs) {
        std::vector<ProxyCorrelation> correlations;
        try {
            correlations = correlate_proxies(log, dataset);
        } catch (const ProbeError& e) {
            if (std::string(e.code()) != "too-few-values") throw;
            continue;  // not enough non-abstained records for this model
        }
        for (const auto& c : correlations) {
            out << model << '\t' << c.proxy;
            if (c.value)
                out << '\t' << fmt(c.value->r) << '\t' << fmt(c.value->p, "%.6g") << '\n';
            else
                out << '\t' << kAbsent << '\t' << kAbsent << '\n';
        }
    }
}

}  // namespace probe
