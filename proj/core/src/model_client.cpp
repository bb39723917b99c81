#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "spatialrl/model_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <thread>

#include "spatialrl/errors.hpp"
#include "spatialrl/io.hpp"

namespace spatialrl {

using nlohmann::json;

ContentPart ContentPart::from_text(std::string text) {
  ContentPart p;
  p.kind = Kind::kText;
  p.text = std::move(text);
  return p;
}

ContentPart ContentPart::from_png_base64(std::string data) {
  ContentPart p;
  p.kind = Kind::kImagePng;
  p.base64_data = std::move(data);
  return p;
}

std::string ChatRequest::text() const {
  std::string out;
  for (const auto& m : messages) {
    for (const auto& p : m.content) {
      if (p.kind == ContentPart::Kind::kText) {
        if (!out.empty()) out.push_back('\n');
        out += p.text;
      }
    }
  }
  return out;
}

std::string to_wire_json(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    json content = json::array();
    for (const auto& p : m.content) {
      if (p.kind == ContentPart::Kind::kText) {
        content.push_back({{"type", "text"}, {"text", p.text}});
      } else {
        content.push_back({{"type", "image_url"},
                           {"image_url", {{"url", "data:image/png;base64," + p.base64_data}}}});
      }
    }
    messages.push_back({{"role", m.role}, {"content", std::move(content)}});
  }
  json body = {{"model", request.model},
               {"messages", std::move(messages)},
               {"temperature", request.temperature},
               {"max_tokens", request.max_tokens}};
  return body.dump();
}

std::string parse_wire_response(const std::string& body) {
  try {
    const json j = json::parse(body);
    const json& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    if (content.is_null()) return {};
    std::string out;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") out += part.value("text", "");
    }
    return out;
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed completion response: ") + e.what(), 0);
  }
}

std::uint64_t request_fingerprint(const ChatRequest& request) {
  return fnv1a64(to_wire_json(request));
}

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const {
  const double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, attempt);
  return std::chrono::milliseconds(
      static_cast<long long>(std::min(ms, static_cast<double>(max_backoff.count()))));
}

HttpModelClient::HttpModelClient(HttpClientConfig config)
    : config_(std::move(config)),
      inflight_(std::make_unique<std::counting_semaphore<>>(std::max(1, config_.max_inflight))) {
  if (config_.endpoint.empty()) throw InputError("model client endpoint is empty");
}

std::string HttpModelClient::complete(const ChatRequest& request) {
  ChatRequest req = request;
  if (req.model.empty()) req.model = config_.model;
  const std::string body = to_wire_json(req);

  inflight_->acquire();
  struct Release {
    std::counting_semaphore<>* s;
    ~Release() { s->release(); }
  } release{inflight_.get()};

  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  int last_status = 0;
  for (int attempt = 0; attempt <= config_.retry.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.retry.backoff(attempt - 1));
    auto res = client.Post(config_.path, headers, body, "application/json");
    if (!res) {
      last_error = "connection error: " + httplib::to_string(res.error());
      last_status = 0;
      continue;
    }
    last_status = res->status;
    if (res->status == 200) return parse_wire_response(res->body);
    last_error = "HTTP " + std::to_string(res->status);
    if (res->status != 429 && res->status < 500) break;
  }
  throw TransportError(last_error + " from " + config_.endpoint, last_status);
}

MockModelClient::MockModelClient(std::string model_id, Responder responder)
    : model_id_(std::move(model_id)), responder_(std::move(responder)) {}

std::string MockModelClient::complete(const ChatRequest& request) {
  std::size_t call = 0;
  std::optional<std::string> fixture;
  {
    std::lock_guard lock(mu_);
    call = ++calls_;
    if (std::find(failing_calls_.begin(), failing_calls_.end(), call) != failing_calls_.end()) {
      throw TransportError("mock failure on call " + std::to_string(call), 503);
    }
    if (!fixtures_.empty()) {
      auto it = fixtures_.find(request_fingerprint(request));
      if (it != fixtures_.end()) fixture = it->second;
    }
  }
  if (fixture) return *fixture;
  if (!responder_) throw TransportError("mock has no response for request", 404);
  auto reply = responder_(request);
  if (!reply) throw TransportError("mock responder declined the request", 503);
  return *reply;
}

void MockModelClient::add_fixture(std::uint64_t fingerprint, std::string response) {
  std::lock_guard lock(mu_);
  fixtures_[fingerprint] = std::move(response);
}

void MockModelClient::load_fixtures(const std::string& jsonl) {
  for (const auto& line : split_lines(jsonl)) {
    try {
      const json j = json::parse(line);
      add_fixture(std::stoull(j.at("key").get<std::string>(), nullptr, 16),
                  j.at("response").get<std::string>());
    } catch (const std::exception& e) {
      throw InputError(std::string("bad mock fixture line: ") + e.what());
    }
  }
}

void MockModelClient::fail_on_call(std::size_t call_number) {
  std::lock_guard lock(mu_);
  failing_calls_.push_back(call_number);
}

std::size_t MockModelClient::call_count() const {
  std::lock_guard lock(mu_);
  return calls_;
}

}  // namespace spatialrl
