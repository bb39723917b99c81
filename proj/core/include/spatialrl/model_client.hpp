#ifndef SPATIALRL_MODEL_CLIENT_HPP_
#define SPATIALRL_MODEL_CLIENT_HPP_

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

namespace spatialrl {

struct ContentPart {
  enum class Kind { kText, kImagePng };
  Kind kind = Kind::kText;
  std::string text;           // kText
  std::string base64_data;    // kImagePng, base64 PNG bytes

  static ContentPart from_text(std::string text);
  static ContentPart from_png_base64(std::string data);
};

struct ChatMessage {
  std::string role;  // "system", "user", "assistant"
  std::vector<ContentPart> content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 512;

  // Concatenation of all text parts, in order.
  std::string text() const;
};

// Chat-completions request body (OpenAI-compatible wire format).
std::string to_wire_json(const ChatRequest& request);
// Extracts choices[0].message.content from a response body. Throws
// TransportError on malformed bodies.
std::string parse_wire_response(const std::string& body);

// Stable key of a request: FNV-1a of its wire JSON.
std::uint64_t request_fingerprint(const ChatRequest& request);

// A text-generation backend. Implementations must be safe to share across
// threads.
class ModelClient {
 public:
  virtual ~ModelClient() = default;
  // Throws TransportError when the backend is unreachable after retries.
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string model_id() const = 0;
};

struct RetryPolicy {
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};

  std::chrono::milliseconds backoff(int attempt) const;
};

struct HttpClientConfig {
  // Base URL, e.g. "https://api.example.com" or "http://127.0.0.1:8000".
  std::string endpoint;
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key;  // sent as a bearer token when nonempty
  RetryPolicy retry;
  int max_inflight = 4;
  int timeout_seconds = 120;
};

// HTTP chat-completions client. Retries 429, 5xx and connection errors with
// exponential backoff; at most `max_inflight` requests are outstanding.
class HttpModelClient : public ModelClient {
 public:
  explicit HttpModelClient(HttpClientConfig config);
  std::string complete(const ChatRequest& request) override;
  std::string model_id() const override { return config_.model; }

 private:
  HttpClientConfig config_;
  std::unique_ptr<std::counting_semaphore<>> inflight_;
};

// Deterministic in-process client for tests and offline runs. Responses are
// looked up by request fingerprint first, then produced by the responder.
class MockModelClient : public ModelClient {
 public:
  // Returning nullopt simulates a transport failure.
  using Responder = std::function<std::optional<std::string>(const ChatRequest&)>;

  explicit MockModelClient(std::string model_id, Responder responder = {});

  std::string complete(const ChatRequest& request) override;
  std::string model_id() const override { return model_id_; }

  void add_fixture(std::uint64_t fingerprint, std::string response);
  // JSON lines of {"key": "<16 hex digits>", "response": "..."}.
  void load_fixtures(const std::string& jsonl);
  // Calls numbered from 1; the listed call fails with TransportError.
  void fail_on_call(std::size_t call_number);
  std::size_t call_count() const;

 private:
  std::string model_id_;
  Responder responder_;
  mutable std::mutex mu_;
  std::map<std::uint64_t, std::string> fixtures_;
  std::vector<std::size_t> failing_calls_;
  std::size_t calls_ = 0;
};

}  // namespace spatialrl

#endif  // SPATIALRL_MODEL_CLIENT_HPP_
