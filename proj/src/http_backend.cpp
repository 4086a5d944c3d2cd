#include "testsift/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

namespace testsift {

using nlohmann::json;

HttpChatBackend::HttpChatBackend(HttpBackendOptions options) : options_(std::move(options)) {
    name_ = options_.api == HttpApi::OpenAiChat ? "openai" : "ollama";
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (options_.base_url.starts_with("https://")) {
        throw ConfigError("built without TLS support; use an http endpoint");
    }
#endif
    if (!options_.credential_env.empty()) {
        const char* key = std::getenv(options_.credential_env.c_str());
        if (!key || !*key) {
            throw ConfigError("credential environment variable not set: " +
                              options_.credential_env);
        }
        api_key_ = key;
    }
}

std::string HttpChatBackend::complete(const std::string& prompt, const LlmParams& params) {
    json body;
    std::string path;
    httplib::Headers headers;

    if (options_.api == HttpApi::OpenAiChat) {
        path = "/v1/chat/completions";
        body["model"] = params.model_id;
        body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
        body["temperature"] = params.temperature;
        body["top_p"] = params.top_p;
        if (!api_key_.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key_);
        }
    } else {
        path = "/api/generate";
        body["model"] = params.model_id;
        body["prompt"] = prompt;
        body["stream"] = false;
        json opts;
        opts["temperature"] = params.temperature;
        opts["top_p"] = params.top_p;
        if (params.top_k) opts["top_k"] = *params.top_k;
        body["options"] = std::move(opts);
    }

    std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= params.max_transport_retries; ++attempt) {
        httplib::Client client(options_.base_url);
        client.set_read_timeout(options_.timeout_seconds, 0);
        client.set_connection_timeout(options_.timeout_seconds, 0);
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "http status " + std::to_string(res->status) + ": " + res->body;
            // 4xx responses other than 429 are not retried.
            if (res->status >= 400 && res->status < 500 && res->status != 429) break;
            continue;
        }
        json reply = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
        if (reply.is_discarded()) {
            last_error = "malformed response body";
            continue;
        }
        if (options_.api == HttpApi::OpenAiChat) {
            if (reply.contains("choices") && !reply["choices"].empty()) {
                const auto& msg = reply["choices"][0]["message"];
                if (msg.contains("content") && msg["content"].is_string()) {
                    return msg["content"].get<std::string>();
                }
            }
            last_error = "response has no message content";
        } else {
            if (reply.contains("response") && reply["response"].is_string()) {
                return reply["response"].get<std::string>();
            }
            last_error = "response has no 'response' field";
        }
    }
    throw BackendError(std::string(name_) + " backend failed: " + last_error);
}

}  // namespace testsift
