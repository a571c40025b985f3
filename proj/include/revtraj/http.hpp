#pragma once

#include <string>
#include <vector>

#include "revtraj/error.hpp"
#include "revtraj/serialize.hpp"

namespace revtraj {

struct HttpEndpoint {
  // Full URL, e.g. "http://127.0.0.1:8000/v1/completions".
  std::string url;
  long timeout_ms = 30000;
  int retries = 2;
  long backoff_ms = 200;
  // Environment variable holding a bearer token; unset or empty means none.
  std::string api_key_env = "REVTRAJ_API_KEY";
};

struct HttpResponse {
  int status = 0;
  Json body;
};

// POSTs JSON and parses the JSON reply. Connection failures and 5xx replies
// are retried with exponential backoff, then reported as `failure_code`.
// Other statuses are returned to the caller.
class JsonHttpClient {
 public:
  JsonHttpClient(HttpEndpoint endpoint, ErrorCode failure_code);

  HttpResponse post(const std::string& path, const Json& body) const;
  // POST to the endpoint's own path.
  HttpResponse post(const Json& body) const { return post(path_, body); }

  const std::string& base_path() const noexcept { return path_; }

 private:
  HttpEndpoint endpoint_;
  ErrorCode failure_code_;
  std::string origin_;
  std::string path_;
};

// Splits "scheme://host[:port][/path]" into origin and path ("/" if absent).
std::pair<std::string, std::string> split_url(const std::string& url);

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  int n = 1;
  double temperature = 1.0;
  std::vector<std::string> stop;
  std::string model;
};

// Chat-completions style protocol:
//   request  {messages:[{role,content}], n, temperature, stop, model?}
//   response {choices:[{text}]}
class ChatClient {
 public:
  ChatClient(HttpEndpoint endpoint, ErrorCode failure_code);
  std::vector<std::string> complete(const ChatRequest& request) const;

 private:
  JsonHttpClient http_;
  ErrorCode failure_code_;
};

}  // namespace revtraj
