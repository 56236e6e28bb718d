#include "probe/config.hpp"

#include <fstream>
#include <sstream>

namespace probe {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string resolve_path(const std::filesystem::path& base, const std::string& value) {
    if (value.empty()) return value;
    std::filesystem::path p(value);
    if (p.is_absolute()) return p.string();
    return (base / p).lexically_normal().string();
}

}  // namespace

RunConfig RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ProbeError("bad-config", "config file not readable: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();

    json doc;
    try {
        doc = json::parse(buf.str());
    } catch (const json::exception& e) {
        throw ProbeError("bad-config", "config is not valid JSON: " + std::string(e.what()));
    }

    RunConfig config;
    const std::filesystem::path base = path.parent_path();

    try {
        if (doc.contains("provider")) {
            const auto& p = doc["provider"];
            config.provider.type = p.value("type", config.provider.type);
            config.provider.base_url = p.value("base_url", config.provider.base_url);
            config.provider.chat_path = p.value("chat_path", config.provider.chat_path);
            config.provider.embed_path = p.value("embed_path", config.provider.embed_path);
            config.provider.api_key_env = p.value("api_key_env", config.provider.api_key_env);
            config.provider.script = resolve_path(base, p.value("script", ""));
        }
        config.generator_model = doc.value("generator_model", "");
        if (doc.contains("evaluated_models"))
            config.evaluated_models = doc["evaluated_models"].get<std::vector<std::string>>();
        config.embedding_model = doc.value("embedding_model", config.embedding_model);
        if (doc.contains("biases")) {
            for (const auto& key : doc["biases"]) {
                const auto bias = bias_from_key(key.get<std::string>());
                if (!bias)
                    throw ProbeError("bad-config",
                                     "biases: unknown label '" + key.get<std::string>() + "'");
                config.biases.push_back(*bias);
            }
        }
        config.seed_corpus = resolve_path(base, doc.value("seed_corpus", ""));
        config.output_dir = resolve_path(base, doc.value("output_dir", config.output_dir));
        if (doc.contains("cascade")) {
            const auto& c = doc["cascade"];
            auto& k = config.cascade;
            k.batch_size = c.value("batch_size", k.batch_size);
            k.judge_runs = c.value("judge_runs", k.judge_runs);
            k.audit_runs = c.value("audit_runs", k.audit_runs);
            k.vote_threshold = c.value("vote_threshold", k.vote_threshold);
            k.round_trip_tau = c.value("round_trip_tau", k.round_trip_tau);
            k.collision_tau = c.value("collision_tau", k.collision_tau);
            k.conversion_retries = c.value("conversion_retries", k.conversion_retries);
            k.divergence_attempts = c.value("divergence_attempts", k.divergence_attempts);
            k.target_count = c.value("target_count", k.target_count);
        }
        config.parallelism = doc.value("parallelism", config.parallelism);
        config.created_at = doc.value("created_at", "");
        config.request_timeout_ms = doc.value("request_timeout_ms", config.request_timeout_ms);
        config.max_retries = doc.value("max_retries", config.max_retries);
    } catch (const json::exception& e) {
        throw ProbeError("bad-config", std::string("config: ") + e.what());
    }
    return config;
}

void RunConfig::validate() const {
    if (provider.type != "http" && provider.type != "fake")
        throw ProbeError("bad-config", "provider.type must be 'http' or 'fake'");
    if (provider.type == "http" && provider.base_url.empty())
        throw ProbeError("bad-config", "provider.base_url");
    if (provider.type == "fake" && provider.script.empty())
        throw ProbeError("bad-config", "provider.script");
    if (provider.type == "fake" && !std::filesystem::exists(provider.script))
        throw ProbeError("bad-config", "provider.script: no such file: " + provider.script);
    if (generator_model.empty()) throw ProbeError("bad-config", "generator_model");
    if (biases.empty()) throw ProbeError("bad-config", "biases: at least one bias required");
    if (seed_corpus.empty()) throw ProbeError("bad-config", "seed_corpus");
    if (!std::filesystem::exists(seed_corpus))
        throw ProbeError("bad-config", "seed_corpus: no such file: " + seed_corpus);
    if (parallelism < 1) throw ProbeError("bad-config", "parallelism");
    if (request_timeout_ms <= 0) throw ProbeError("bad-config", "request_timeout_ms");
    if (max_retries < 0) throw ProbeError("bad-config", "max_retries");
    if (!created_at.empty() && !looks_like_utc_timestamp(created_at))
        throw ProbeError("bad-config", "created_at: expected UTC ISO-8601, e.g. 2026-01-01T00:00:00Z");
    cascade.validate();
}

ordered_json RunConfig::to_json() const {
    ordered_json j;
    ordered_json p;
    p["type"] = provider.type;
    p["base_url"] = provider.base_url;
    p["chat_path"] = provider.chat_path;
    p["embed_path"] = provider.embed_path;
    p["api_key_env"] = provider.api_key_env;
    p["script"] = provider.script;
    j["provider"] = p;
    j["generator_model"] = generator_model;
    j["evaluated_models"] = evaluated_models;
    j["embedding_model"] = embedding_model;
    ordered_json biases_json = ordered_json::array();
    for (Bias b : biases) biases_json.push_back(std::string(bias_info(b).key));
    j["biases"] = biases_json;
    j["seed_corpus"] = seed_corpus;
    j["output_dir"] = output_dir;
    ordered_json c;
    c["batch_size"] = cascade.batch_size;
    c["judge_runs"] = cascade.judge_runs;
    c["audit_runs"] = cascade.audit_runs;
    c["vote_threshold"] = cascade.vote_threshold;
    c["round_trip_tau"] = cascade.round_trip_tau;
    c["collision_tau"] = cascade.collision_tau;
    c["conversion_retries"] = cascade.conversion_retries;
    c["divergence_attempts"] = cascade.divergence_attempts;
    c["target_count"] = cascade.target_count;
    j["cascade"] = c;
    j["parallelism"] = parallelism;
    j["created_at"] = created_at;
    j["request_timeout_ms"] = request_timeout_ms;
    j["max_retries"] = max_retries;
    return j;
}

ModelHandle RunConfig::generator_handle() const {
    ModelHandle handle;
    handle.model = generator_model;
    handle.timeout = std::chrono::milliseconds(request_timeout_ms);
    handle.max_retries = max_retries;
    return handle;
}

ModelHandle RunConfig::embedding_handle() const {
    ModelHandle handle;
    handle.model = embedding_model;
    handle.timeout = std::chrono::milliseconds(request_timeout_ms);
    handle.max_retries = max_retries;
    return handle;
}

std::string RunConfig::effective_created_at() const {
    return created_at.empty() ? utc_timestamp_now() : created_at;
}

std::shared_ptr<ChatTransport> make_transport(const RunConfig& config) {
    if (config.provider.type == "fake")
        return ScriptedTransport::from_file(config.provider.script);
    HttpEndpoint endpoint;
    endpoint.base_url = config.provider.base_url;
    endpoint.chat_path = config.provider.chat_path;
    endpoint.embed_path = config.provider.embed_path;
    endpoint.api_key_env = config.provider.api_key_env;
    return make_http_transport(std::move(endpoint), config.embedding_model);
}

}  // namespace probe
