#include "rrk/remote.hpp"

#include <cmath>
#include <thread>

#include "httplib.h"
#include "rrk/parallel.hpp"

namespace rrk {

namespace {

struct SemaphoreGuard {
    explicit SemaphoreGuard(std::counting_semaphore<4096>& s) : sem(s) { sem.acquire(); }
    ~SemaphoreGuard() { sem.release(); }
    std::counting_semaphore<4096>& sem;
};

}  // namespace

HttpJsonClient::HttpJsonClient(RemoteOptions options, ErrorCode failure_code)
    : options_(std::move(options)), failure_code_(failure_code) {
    const std::string& url = options_.url;
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) {
        throw Error(ErrorCode::InvalidValue, "endpoint '" + url + "' must start with http://");
    }
    const auto slash = url.find('/', scheme.size());
    scheme_host_port_ = url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : url.substr(slash);
    if (scheme_host_port_.size() == scheme.size()) {
        throw Error(ErrorCode::InvalidValue, "endpoint '" + url + "' has no host");
    }
    if (options_.max_in_flight == 0 || options_.max_in_flight > 4096) {
        throw Error(ErrorCode::InvalidValue, "max_in_flight must lie in [1, 4096]");
    }
    if (options_.max_retries < 0) throw Error(ErrorCode::InvalidValue, "max_retries must be >= 0");
    in_flight_ = std::make_unique<std::counting_semaphore<4096>>(static_cast<std::ptrdiff_t>(options_.max_in_flight));
}

HttpJsonClient::~HttpJsonClient() = default;

nlohmann::json HttpJsonClient::post(const nlohmann::json& body) const {
    const std::string payload = body.dump();
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(options_.backoff * (1 << (attempt - 1)));
        SemaphoreGuard guard(*in_flight_);
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(options_.connect_timeout);
        client.set_read_timeout(options_.read_timeout);
        auto res = client.Post(path_, payload, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        auto parsed = nlohmann::json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object()) {
            last_error = "response is not a JSON object";
            continue;
        }
        return parsed;
    }
    throw Error(failure_code_, options_.url + " failed after " + std::to_string(options_.max_retries + 1) +
                                   " attempts: " + last_error);
}

RemoteVerifier::RemoteVerifier(RemoteOptions options)
    : client_(std::move(options), ErrorCode::RemoteUnavailable) {}

ScoreVector RemoteVerifier::score(std::string_view sentence, const Taxonomy& taxonomy) const {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& l : taxonomy.labels()) labels.push_back(l.value());
    const auto reply = client_.post({{"text", std::string(sentence)}, {"labels", labels}});

    auto it = reply.find("scores");
    if (it == reply.end() || !it->is_object()) {
        throw Error(ErrorCode::LabelMismatch, "response has no 'scores' object");
    }
    std::vector<double> scores(taxonomy.size(), 0.0);
    std::vector<bool> seen(taxonomy.size(), false);
    for (const auto& [key, value] : it->items()) {
        auto label = try_normalize_label(key, taxonomy);
        if (!label) throw Error(ErrorCode::LabelMismatch, "remote label '" + key + "' is not in " + taxonomy.name());
        const auto idx = *taxonomy.index_of(*label);
        if (seen[idx]) throw Error(ErrorCode::LabelMismatch, "remote labels map twice onto '" + label->value() + "'");
        if (!value.is_number()) throw Error(ErrorCode::LabelMismatch, "non-numeric score for '" + key + "'");
        const double v = value.get<double>();
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw Error(ErrorCode::LabelMismatch, "score for '" + key + "' outside [0, 1]");
        }
        scores[idx] = v;
        seen[idx] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) throw Error(ErrorCode::LabelMismatch, "remote response lacks label '" + taxonomy[i].value() + "'");
    }
    return ScoreVector(std::move(scores));
}

std::vector<ScoreVector> RemoteVerifier::score_all(std::span<const std::string> sentences,
                                                   const Taxonomy& taxonomy) const {
    return parallel_map(sentences.size(), client_.options().max_in_flight,
                        [&](std::size_t i) { return score(sentences[i], taxonomy); });
}

std::string ChatClient::ask(const std::string& prompt) const {
    const auto reply = client_.post({{"prompt", prompt}});
    auto it = reply.find("reply");
    if (it == reply.end() || !it->is_string()) {
        throw Error(failure_code_, "response from " + url() + " has no string 'reply'");
    }
    return it->get<std::string>();
}

}  // namespace rrk
