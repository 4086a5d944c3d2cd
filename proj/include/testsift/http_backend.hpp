#pragma once

#include <string>

#include "testsift/analyzer.hpp"

namespace testsift {

/// Wire flavor for hosted backends.
enum class HttpApi {
    OpenAiChat,      // POST {base}/v1/chat/completions, bearer token from env
    OllamaGenerate,  // POST {base}/api/generate, no credential
};

struct HttpBackendOptions {
    HttpApi api = HttpApi::OllamaGenerate;
    std::string base_url = "http://localhost:11434";
    std::string credential_env;  // env var holding the API key, if any
    int timeout_seconds = 120;
};

/// Blocking HTTP client for OpenAI-compatible and Ollama endpoints. Transport
/// failures are retried params.max_transport_retries times, then surface as
/// BackendError.
class HttpChatBackend final : public LlmBackend {
public:
    explicit HttpChatBackend(HttpBackendOptions options);
    std::string complete(const std::string& prompt, const LlmParams& params) override;
    bool deterministic() const override { return false; }
    std::string_view name() const override { return name_; }

private:
    HttpBackendOptions options_;
    std::string name_;
    std::string api_key_;
};

}  // namespace testsift
