#ifndef FSHAP_MODEL_CLIENT_HPP
#define FSHAP_MODEL_CLIENT_HPP

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fshap/core.hpp"

namespace fshap {

/// Hex-encoded SHA-256 of `data`.
std::string sha256_hex(const std::string& data);

/// One-shot HTTP(S) POST of a JSON body on a fresh connection. Returns
/// (status, response body); transport-level failures throw ProviderError.
/// `bearer`, when non-empty, is sent as an Authorization: Bearer header.
std::pair<int, std::string> http_post_json(
    const std::string& url, const std::string& body,
    std::chrono::milliseconds timeout = std::chrono::milliseconds(60000),
    const std::string& bearer = {});

struct ProviderConfig {
    std::string endpoint_url;
    std::string model_id;
    std::string credential_env_var = "FS_API_KEY";
    /// Fixed at 0; the constructor refuses anything else. Kept as a field so
    /// the refusal is a checked invariant rather than silent behavior.
    double temperature = 0.0;
    /// Additional attempts after the first, with exponential backoff.
    unsigned max_retries = 3;
    std::chrono::milliseconds timeout{60000};
    std::string cache_dir;  // empty disables the response cache
    /// In-flight request bound per provider instance (rate-limit courtesy).
    unsigned max_concurrency = 4;
};

/// Anything that can turn a prompt into text.
class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string complete(const std::string& prompt) = 0;
    virtual std::string model_id() const = 0;
};

/// Chat-completions HTTP client. POSTs {endpoint}/chat/completions with a
/// single user-role message at temperature 0 and a bearer credential read
/// from the configured environment variable (header omitted when unset).
class HttpChatProvider : public Provider {
public:
    explicit HttpChatProvider(ProviderConfig cfg);
    ~HttpChatProvider() override;

    std::string complete(const std::string& prompt) override;
    std::string model_id() const override { return cfg_.model_id; }

private:
    struct Impl;
    ProviderConfig cfg_;
    std::unique_ptr<Impl> impl_;
};

/// Deterministic scripted provider: first rule whose `contains` substring
/// occurs in the prompt wins; otherwise the default output. Never touches
/// the network.
struct MockRule {
    std::string contains;
    std::string output;
};

struct MockScript {
    std::string model_id = "mock";
    std::vector<MockRule> rules;
    std::string default_output;
};

/// Reads a script file: {"model_id": ..., "rules": [{"contains": ...,
/// "output": ...}, ...], "default": ...}. All fields optional.
MockScript load_mock_script(const std::string& path);

class MockProvider : public Provider {
public:
    explicit MockProvider(MockScript script) : script_(std::move(script)) {}

    std::string complete(const std::string& prompt) override;
    std::string model_id() const override { return script_.model_id; }

private:
    MockScript script_;
};

/// Function-backed provider for tests and synthetic experiments.
class CallbackProvider : public Provider {
public:
    CallbackProvider(std::string model_id, std::function<std::string(const std::string&)> fn)
        : model_id_(std::move(model_id)), fn_(std::move(fn)) {}

    std::string complete(const std::string& prompt) override { return fn_(prompt); }
    std::string model_id() const override { return model_id_; }

private:
    std::string model_id_;
    std::function<std::string(const std::string&)> fn_;
};

/// Content-addressed response cache around a Provider. Layout:
/// {cache_dir}/{model_id}/{sha256(prompt)}.json, one JSON file per key with
/// body {prompt, model_id, text, created_at}. Writes are write-temp-then-
/// rename so concurrent generate() calls are safe. Corrupt entries are
/// ignored and rebuilt.
class ModelClient {
public:
    /// Empty cache_dir disables caching entirely.
    ModelClient(std::shared_ptr<Provider> provider, std::string cache_dir);

    /// `use_cache = false` skips the cache read (forces a fresh completion)
    /// but still stores the result for later calls.
    ModelOutput generate(const std::string& prompt, bool use_cache = true);

    Provider& provider() { return *provider_; }
    const std::string& cache_dir() const { return cache_dir_; }

private:
    std::optional<std::string> cache_load(const std::string& hash, const std::string& prompt) const;
    void cache_store(const std::string& hash, const std::string& prompt,
                     const std::string& text) const;
    std::string entry_path(const std::string& hash) const;

    std::shared_ptr<Provider> provider_;
    std::string cache_dir_;
};

/// Applies the FS_CACHE_DIR environment override; returns `requested`
/// unchanged when the variable is unset or empty.
std::string resolve_cache_dir(const std::string& requested);

}  // namespace fshap

#endif  // FSHAP_MODEL_CLIENT_HPP
