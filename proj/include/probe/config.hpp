#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "probe/bias.hpp"
#include "probe/gateway.hpp"
#include "probe/pipeline.hpp"

namespace probe {

struct ProviderConfig {
    std::string type = "http";  // "http" | "fake"
    std::string base_url;
    std::string chat_path = "/chat/completions";
    std::string embed_path = "/embeddings";
    std::string api_key_env = "PROBE_API_KEY";
    std::string script;  // fake: path to the scripted-response file
};

/// Resolved run configuration: one file, flag overrides, env only for
/// secrets. Relative paths are anchored at the config file's directory.
struct RunConfig {
    ProviderConfig provider;
    std::string generator_model;
    std::vector<std::string> evaluated_models;
    std::string embedding_model = kHashEmbeddingModel;
    std::vector<Bias> biases;
    std::string seed_corpus;
    std::string output_dir = "out";
    CascadeConfig cascade;
    int parallelism = 4;
    std::string created_at;  // pinned pair timestamp; empty = wall clock
    int request_timeout_ms = 30000;
    int max_retries = 3;

    static RunConfig load_file(const std::filesystem::path& path);
    void validate() const;  // throws bad-config naming the field

    nlohmann::ordered_json to_json() const;

    ModelHandle generator_handle() const;
    ModelHandle embedding_handle() const;
    /// Effective timestamp for generated records.
    std::string effective_created_at() const;
};

/// Builds the transport the config names. For http providers this checks the
/// API key env var up front, before any network call.
std::shared_ptr<ChatTransport> make_transport(const RunConfig& config);

}  // namespace probe
