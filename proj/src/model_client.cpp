#include "fshap/model_client.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/ssl.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/ssl.hpp>
#include <boost/beast/version.hpp>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fshap {

namespace beast = boost::beast;
namespace http = beast::http;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;
using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr ||
        EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256 digest failed");
    }
    EVP_MD_CTX_free(ctx);

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// HTTP provider
// ---------------------------------------------------------------------------

namespace {

struct ParsedUrl {
    bool tls = false;
    std::string host;
    std::string port;
    std::string base_path;  // no trailing slash; may be empty
};

ParsedUrl parse_url(const std::string& url) {
    ParsedUrl out;
    std::string rest;
    if (url.rfind("https://", 0) == 0) {
        out.tls = true;
        out.port = "443";
        rest = url.substr(8);
    } else if (url.rfind("http://", 0) == 0) {
        out.tls = false;
        out.port = "80";
        rest = url.substr(7);
    } else {
        throw ContractViolation("endpoint URL must start with http:// or https://: " + url);
    }
    std::size_t slash = rest.find('/');
    std::string authority = rest.substr(0, slash);
    if (slash != std::string::npos) {
        out.base_path = rest.substr(slash);
        while (!out.base_path.empty() && out.base_path.back() == '/') {
            out.base_path.pop_back();
        }
    }
    std::size_t colon = authority.find(':');
    if (colon != std::string::npos) {
        out.host = authority.substr(0, colon);
        out.port = authority.substr(colon + 1);
    } else {
        out.host = authority;
    }
    if (out.host.empty()) {
        throw ContractViolation("endpoint URL has no host: " + url);
    }
    return out;
}

/// Bounded-concurrency gate (counting semaphore on a mutex, no C++20
/// <semaphore> so the bound can be a runtime value with zero fuss).
class Gate {
public:
    explicit Gate(unsigned slots) : slots_(slots == 0 ? 1 : slots) {}

    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return slots_ > 0; });
        --slots_;
    }

    void release() {
        {
            std::lock_guard lock(mu_);
            ++slots_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    unsigned slots_;
};

struct GateGuard {
    explicit GateGuard(Gate& g) : gate(g) { gate.acquire(); }
    ~GateGuard() { gate.release(); }
    Gate& gate;
};

}  // namespace

std::pair<int, std::string> http_post_json(const std::string& url, const std::string& body,
                                           std::chrono::milliseconds timeout,
                                           const std::string& bearer) {
    const ParsedUrl parsed = parse_url(url);
    try {
        asio::io_context ioc;
        tcp::resolver resolver(ioc);
        auto const endpoints = resolver.resolve(parsed.host, parsed.port);

        http::request<http::string_body> req{
            http::verb::post, parsed.base_path.empty() ? "/" : parsed.base_path, 11};
        req.set(http::field::host, parsed.host);
        req.set(http::field::user_agent, "fshap/1.0");
        req.set(http::field::content_type, "application/json");
        if (!bearer.empty()) {
            req.set(http::field::authorization, "Bearer " + bearer);
        }
        req.body() = body;
        req.prepare_payload();

        http::response<http::string_body> res;
        beast::flat_buffer buffer;

        if (parsed.tls) {
            asio::ssl::context ssl_ctx(asio::ssl::context::tls_client);
            ssl_ctx.set_default_verify_paths();
            ssl_ctx.set_verify_mode(asio::ssl::verify_peer);
            beast::ssl_stream<beast::tcp_stream> stream(ioc, ssl_ctx);
            if (!SSL_set_tlsext_host_name(stream.native_handle(), parsed.host.c_str())) {
                throw beast::system_error(
                    beast::error_code(static_cast<int>(::ERR_get_error()),
                                      asio::error::get_ssl_category()));
            }
            beast::get_lowest_layer(stream).expires_after(timeout);
            beast::get_lowest_layer(stream).connect(endpoints);
            stream.handshake(asio::ssl::stream_base::client);
            http::write(stream, req);
            http::read(stream, buffer, res);
            beast::error_code ec;
            stream.shutdown(ec);  // best-effort; many servers just close
        } else {
            beast::tcp_stream stream(ioc);
            stream.expires_after(timeout);
            stream.connect(endpoints);
            http::write(stream, req);
            http::read(stream, buffer, res);
            beast::error_code ec;
            stream.socket().shutdown(tcp::socket::shutdown_both, ec);
        }
        return {static_cast<int>(res.result_int()), std::move(res.body())};
    } catch (const std::exception& e) {
        throw ProviderError(std::string("POST ") + url + " failed: " + e.what());
    }
}

struct HttpChatProvider::Impl {
    std::string completions_url;
    std::string bearer;  // empty → no Authorization header
    Gate gate;

    explicit Impl(const ProviderConfig& cfg) : gate(cfg.max_concurrency) {
        ParsedUrl parsed = parse_url(cfg.endpoint_url);  // validates the URL shape early
        completions_url = (parsed.tls ? "https://" : "http://") + parsed.host + ":" +
                          parsed.port + parsed.base_path + "/chat/completions";
        if (!cfg.credential_env_var.empty()) {
            if (const char* v = std::getenv(cfg.credential_env_var.c_str());
                v != nullptr && *v != '\0') {
                bearer = v;
            }
        }
    }
};

HttpChatProvider::HttpChatProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.temperature != 0.0) {
        throw ContractViolation("temperature must be 0, got " +
                                std::to_string(cfg_.temperature));
    }
    impl_ = std::make_unique<Impl>(cfg_);
}

HttpChatProvider::~HttpChatProvider() = default;

std::string HttpChatProvider::complete(const std::string& prompt) {
    json body = {
        {"model", cfg_.model_id},
        {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
        {"temperature", 0},
    };
    const std::string payload = body.dump();

    GateGuard guard(impl_->gate);
    std::string last_error = "no attempt made";
    int last_status = 0;
    for (unsigned attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(250) * (1u << (attempt - 1)));
        }
        try {
            auto [status, text] =
                http_post_json(impl_->completions_url, payload, cfg_.timeout, impl_->bearer);
            if (status < 200 || status >= 300) {
                last_status = status;
                last_error = "HTTP " + std::to_string(status) + ": " + text.substr(0, 200);
                continue;
            }
            json res = json::parse(text);
            return res.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            last_status = 0;
            last_error = std::string("malformed response: ") + e.what();
        } catch (const std::exception& e) {
            last_status = 0;
            last_error = e.what();
        }
    }
    throw ProviderError("chat completion failed after " +
                            std::to_string(cfg_.max_retries + 1) + " attempts: " + last_error,
                        last_status);
}

// ---------------------------------------------------------------------------
// Mock provider
// ---------------------------------------------------------------------------

MockScript load_mock_script(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ReportError("cannot open mock script: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ReportError("invalid mock script " + path + ": " + e.what());
    }
    MockScript script;
    script.model_id = j.value("model_id", std::string("mock"));
    script.default_output = j.value("default", std::string());
    for (const auto& rule : j.value("rules", json::array())) {
        script.rules.push_back(MockRule{rule.at("contains").get<std::string>(),
                                        rule.at("output").get<std::string>()});
    }
    return script;
}

std::string MockProvider::complete(const std::string& prompt) {
    for (const auto& rule : script_.rules) {
        if (prompt.find(rule.contains) != std::string::npos) {
            return rule.output;
        }
    }
    return script_.default_output;
}

// ---------------------------------------------------------------------------
// Cached client
// ---------------------------------------------------------------------------

namespace {

std::string iso8601_utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

ModelClient::ModelClient(std::shared_ptr<Provider> provider, std::string cache_dir)
    : provider_(std::move(provider)), cache_dir_(std::move(cache_dir)) {
    if (!provider_) {
        throw ContractViolation("ModelClient requires a provider");
    }
}

std::string ModelClient::entry_path(const std::string& hash) const {
    return (fs::path(cache_dir_) / provider_->model_id() / (hash + ".json")).string();
}

std::optional<std::string> ModelClient::cache_load(const std::string& hash,
                                                   const std::string& prompt) const {
    std::ifstream in(entry_path(hash), std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    try {
        json j;
        in >> j;
        // Guard against truncated or foreign files: the stored prompt must
        // round-trip. A mismatch is treated as corruption, not an error.
        if (j.at("prompt").get<std::string>() != prompt ||
            j.at("model_id").get<std::string>() != provider_->model_id()) {
            return std::nullopt;
        }
        return j.at("text").get<std::string>();
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void ModelClient::cache_store(const std::string& hash, const std::string& prompt,
                              const std::string& text) const {
    const fs::path path = entry_path(hash);
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
        throw Error("cannot create cache directory " + path.parent_path().string() + ": " +
                    ec.message());
    }

    json j = {
        {"prompt", prompt},
        {"model_id", provider_->model_id()},
        {"text", text},
        {"created_at", iso8601_utc_now()},
    };

    static std::atomic<unsigned> counter{0};
    const fs::path tmp = path.string() + ".tmp" + std::to_string(::getpid()) + "." +
                         std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write cache entry " + tmp.string());
        }
        out << j.dump(2) << '\n';
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("cannot finalize cache entry " + path.string() + ": " + ec.message());
    }
}

ModelOutput ModelClient::generate(const std::string& prompt, bool use_cache) {
    ModelOutput out;
    out.model_id = provider_->model_id();
    out.prompt_hash = sha256_hex(prompt);

    const bool caching = !cache_dir_.empty();
    if (caching && use_cache) {
        if (auto cached = cache_load(out.prompt_hash, prompt)) {
            out.text = std::move(*cached);
            out.from_cache = true;
            return out;
        }
    }
    out.text = provider_->complete(prompt);
    out.from_cache = false;
    if (caching) {
        cache_store(out.prompt_hash, prompt, out.text);
    }
    return out;
}

std::string resolve_cache_dir(const std::string& requested) {
    if (const char* v = std::getenv("FS_CACHE_DIR"); v != nullptr && *v != '\0') {
        return v;
    }
    return requested;
}

}  // namespace fshap
