#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <semaphore>
#include <string>

#include "json.hpp"
#include "rrk/error.hpp"
#include "rrk/verifier.hpp"

namespace rrk {

struct RemoteOptions {
    std::string url;                 // http://host[:port][/path]
    std::size_t max_in_flight = 8;
    int max_retries = 2;             // attempts = 1 + max_retries
    std::chrono::milliseconds backoff{100};  // doubled after each failed attempt
    std::chrono::milliseconds connect_timeout{2000};
    std::chrono::milliseconds read_timeout{30000};
};

// JSON-over-HTTP POST with bounded concurrency and idempotent retries.
// Exhausted retries raise `failure_code`.
class HttpJsonClient {
public:
    HttpJsonClient(RemoteOptions options, ErrorCode failure_code);
    ~HttpJsonClient();
    HttpJsonClient(const HttpJsonClient&) = delete;
    HttpJsonClient& operator=(const HttpJsonClient&) = delete;

    // Retries transport errors, non-200 statuses and bodies that are not JSON
    // objects.
    nlohmann::json post(const nlohmann::json& body) const;

    const RemoteOptions& options() const noexcept { return options_; }

private:
    RemoteOptions options_;
    ErrorCode failure_code_;
    std::string scheme_host_port_;
    std::string path_;
    std::unique_ptr<std::counting_semaphore<4096>> in_flight_;
};

// Forwards each sentence to an external classifier:
//   request  {"text": "...", "labels": ["angry", ...]}
//   response {"scores": {"angry": 0.93, ...}}
// Response keys must map one-to-one onto the taxonomy (after normalization),
// otherwise LabelMismatch.
class RemoteVerifier final : public VerifierBackend {
public:
    explicit RemoteVerifier(RemoteOptions options);

    std::string id() const override { return "remote:" + client_.options().url; }
    ScoreVector score(std::string_view sentence, const Taxonomy& taxonomy) const override;
    std::vector<ScoreVector> score_all(std::span<const std::string> sentences,
                                       const Taxonomy& taxonomy) const override;

private:
    HttpJsonClient client_;
};

// {"prompt": "..."} -> {"reply": "..."}; used by remote judges and generators.
class ChatClient {
public:
    ChatClient(RemoteOptions options, ErrorCode failure_code)
        : client_(std::move(options), failure_code), failure_code_(failure_code) {}

    std::string ask(const std::string& prompt) const;
    const std::string& url() const noexcept { return client_.options().url; }
    std::size_t max_in_flight() const noexcept { return client_.options().max_in_flight; }

private:
    HttpJsonClient client_;
    ErrorCode failure_code_;
};

}  // namespace rrk
