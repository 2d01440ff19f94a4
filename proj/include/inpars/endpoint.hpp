#pragma once

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <utility>

#include "httplib.h"
#include "json.hpp"

#include "inpars/error.hpp"

namespace inpars {

/// Network-level failure that survived all retries, or a non-retryable HTTP status.
class EndpointError : public Error {
public:
    using Error::Error;
};

struct EndpointConfig {
    /// Scheme, host, port and optional path prefix, e.g. "http://localhost:8000/v1".
    std::string base_url;
    std::string model;
    std::optional<std::string> auth_token;
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};

    void validate() const {
        if (base_url.empty()) throw ConfigError("endpoint URL is empty");
        if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
        if (timeout.count() <= 0) throw ConfigError("request timeout must be > 0");
    }
};

namespace detail {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing slash
};

inline SplitUrl split_url(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
    auto path = url.find('/', scheme + 3);
    SplitUrl out;
    out.origin = url.substr(0, path);
    out.prefix = path == std::string::npos ? "" : url.substr(path);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

}  // namespace detail

/// POSTs JSON bodies to one endpoint, retrying connection failures, 429 and
/// 5xx responses with exponential backoff.
class JsonEndpoint {
public:
    explicit JsonEndpoint(EndpointConfig config) : config_(std::move(config)) {
        config_.validate();
        url_ = detail::split_url(config_.base_url);
    }

    nlohmann::json post(const std::string& path, const nlohmann::json& body) const {
        httplib::Client client(url_.origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        httplib::Headers headers;
        if (config_.auth_token) headers.emplace("Authorization", "Bearer " + *config_.auth_token);
        const std::string payload = body.dump();
        const std::string target = url_.prefix + path;

        std::string last_error;
        auto backoff = config_.initial_backoff;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            }
            auto res = client.Post(target, headers, payload, "application/json");
            if (!res) {
                last_error = "connection failed: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status < 200 || res->status >= 300)
                throw EndpointError(config_.base_url + target + ": HTTP " + std::to_string(res->status) + ": " +
                                    res->body.substr(0, 300));
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::parse_error&) {
                throw EndpointError(config_.base_url + target + ": response is not JSON");
            }
        }
        throw EndpointError(config_.base_url + target + ": giving up after " + std::to_string(config_.max_retries + 1) +
                            " attempt(s): " + last_error);
    }

    const EndpointConfig& config() const { return config_; }

private:
    EndpointConfig config_;
    detail::SplitUrl url_;
};

}  // namespace inpars
