#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <semaphore>
#include <thread>

#include "simboot/planner.hpp"

namespace simboot {

namespace {

using Clock = std::chrono::steady_clock;

class OraclePlanner : public Planner {
 public:
  Result<std::string, PlannerError> complete(const PlanningRequest& r) override {
    return oracle_plan_text(r.instance, r.observed);
  }
};

class DegradedOraclePlanner : public Planner {
 public:
  explicit DegradedOraclePlanner(double rate) : rate_(rate) {}
  Result<std::string, PlannerError> complete(const PlanningRequest& r) override {
    return degraded_plan_text(r.instance, r.observed, rate_, r.seed);
  }

 private:
  double rate_;
};

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ModelError("endpoint must be an http(s) URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

PlannerError error(PlannerErrorKind kind, std::string message, int status = 0) {
  return PlannerError{kind, status, std::move(message)};
}

// RAII slot in the in-flight limit.
class Slot {
 public:
  explicit Slot(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
  ~Slot() { s_.release(); }
  Slot(const Slot&) = delete;
  Slot& operator=(const Slot&) = delete;

 private:
  std::counting_semaphore<>& s_;
};

class RemotePlanner : public Planner {
 public:
  explicit RemotePlanner(PlannerConfig config)
      : config_(std::move(config)), endpoint_(split_url(config_.endpoint)), in_flight_(config_.max_in_flight) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }

  Result<std::string, PlannerError> complete(const PlanningRequest& r) override {
    if (r.prompt.empty()) return unexpected(error(PlannerErrorKind::MalformedResponse, "empty prompt"));
    const auto budget = std::chrono::duration<double>(config_.timeout_s * config_.retry.max_attempts);
    const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(budget);

    const std::string body = request_body(r.prompt);
    PlannerError last = error(PlannerErrorKind::Timeout, "no attempt made");
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
      if (attempt > 1) {
        const auto wait = std::chrono::duration<double>(config_.retry.backoff_base_s * std::pow(2.0, attempt - 2));
        if (Clock::now() + std::chrono::duration_cast<Clock::duration>(wait) >= deadline) break;
        std::this_thread::sleep_for(wait);
      }
      const double remaining = std::chrono::duration<double>(deadline - Clock::now()).count();
      if (remaining <= 0.0) break;

      bool retryable = false;
      auto result = attempt_once(body, std::min(config_.timeout_s, remaining), retryable);
      if (result) return result;
      last = result.error();
      if (!retryable) return result;
    }
    if (last.kind == PlannerErrorKind::Timeout && config_.retry.max_attempts == 1) return unexpected(last);
    return unexpected(error(PlannerErrorKind::RetriesExhausted,
                            "gave up after " + std::to_string(config_.retry.max_attempts) +
                                " attempt(s); last error: " + last.message,
                            last.http_status));
  }

 private:
  std::string request_body(const std::string& prompt) const {
    nlohmann::ordered_json j = {
        {"model", config_.model},
        {"messages", nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", config_.temperature},
        {"max_tokens", config_.max_tokens},
    };
    return j.dump();
  }

  Result<std::string, PlannerError> attempt_once(const std::string& body, double timeout_s, bool& retryable) {
    Slot slot(in_flight_);
    httplib::Client client(endpoint_.origin);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(timeout_s));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    if (config_.verbose) log("request", endpoint_.origin + endpoint_.path + (api_key_.empty() ? "" : " [Authorization: Bearer ***]") + "\n" + body);

    auto res = client.Post(endpoint_.path, headers, body, "application/json");
    if (!res) {
      retryable = true;
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                             err == httplib::Error::ConnectionTimeout;
      return unexpected(error(timed_out ? PlannerErrorKind::Timeout : PlannerErrorKind::RetriesExhausted,
                              "transport error: " + httplib::to_string(err)));
    }
    if (config_.verbose) log("response " + std::to_string(res->status), res->body);
    if (res->status != 200) {
      retryable = res->status == 429 || res->status >= 500;
      return unexpected(error(PlannerErrorKind::HttpStatus, "HTTP status " + std::to_string(res->status), res->status));
    }
    retryable = false;
    auto doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) return unexpected(error(PlannerErrorKind::MalformedResponse, "response is not JSON"));
    try {
      const auto& content = doc.at("choices").at(0).at("message").at("content");
      if (!content.is_string()) throw std::runtime_error("content is not a string");
      return content.get<std::string>();
    } catch (const std::exception& e) {
      return unexpected(error(PlannerErrorKind::MalformedResponse,
                              std::string("response lacks choices[0].message.content: ") + e.what()));
    }
  }

  void log(const std::string& what, const std::string& text) {
    static std::mutex m;
    std::lock_guard lock(m);
    std::cerr << "[planner] " << what << "\n" << text << "\n";
  }

  PlannerConfig config_;
  Endpoint endpoint_;
  std::counting_semaphore<> in_flight_;
  std::string api_key_;
};

}  // namespace

void PlannerConfig::validate() const {
  if (!(failure_rate >= 0.0 && failure_rate <= 1.0)) throw ModelError("failure_rate must be in [0, 1]");
  if (!(timeout_s > 0.0) || !std::isfinite(timeout_s)) throw ModelError("timeout_s must be > 0");
  if (retry.max_attempts < 1) throw ModelError("retry.max_attempts must be >= 1");
  if (!(retry.backoff_base_s >= 0.0)) throw ModelError("retry.backoff_base_s must be >= 0");
  if (max_in_flight < 1) throw ModelError("max_in_flight must be >= 1");
  if (max_tokens < 1) throw ModelError("max_tokens must be >= 1");
  if (!(temperature >= 0.0)) throw ModelError("temperature must be >= 0");
  if (kind == PlannerKind::Remote) split_url(endpoint);
}

std::string to_string(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::Remote: return "remote";
    case PlannerKind::Oracle: return "oracle";
    case PlannerKind::OracleDegraded: return "oracle-degraded";
  }
  return "oracle";
}

bool apply_planner_spec(std::string_view spec, PlannerConfig& config) {
  if (spec == "remote") {
    config.kind = PlannerKind::Remote;
    return true;
  }
  if (spec == "oracle") {
    config.kind = PlannerKind::Oracle;
    return true;
  }
  constexpr std::string_view prefix = "oracle-degraded:";
  if (spec.substr(0, prefix.size()) != prefix) return false;
  const std::string rate(spec.substr(prefix.size()));
  char* end = nullptr;
  const double v = std::strtod(rate.c_str(), &end);
  if (rate.empty() || end != rate.c_str() + rate.size() || !(v >= 0.0 && v <= 1.0)) return false;
  config.kind = PlannerKind::OracleDegraded;
  config.failure_rate = v;
  return true;
}

std::string planner_spec(const PlannerConfig& config) {
  if (config.kind != PlannerKind::OracleDegraded) return to_string(config.kind);
  char buf[64];
  std::snprintf(buf, sizeof buf, "oracle-degraded:%g", config.failure_rate);
  return buf;
}

std::string_view to_string(PlannerErrorKind k) {
  switch (k) {
    case PlannerErrorKind::Timeout: return "timeout";
    case PlannerErrorKind::HttpStatus: return "http_status";
    case PlannerErrorKind::MalformedResponse: return "malformed_response";
    case PlannerErrorKind::RetriesExhausted: return "retries_exhausted";
  }
  return "malformed_response";
}

std::unique_ptr<Planner> make_planner(const PlannerConfig& config) {
  config.validate();
  switch (config.kind) {
    case PlannerKind::Remote: return std::make_unique<RemotePlanner>(config);
    case PlannerKind::Oracle: return std::make_unique<OraclePlanner>();
    case PlannerKind::OracleDegraded: return std::make_unique<DegradedOraclePlanner>(config.failure_rate);
  }
  return std::make_unique<OraclePlanner>();
}

}  // namespace simboot
