#include "revtraj/http.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace revtraj {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos)
    fail(ErrorCode::config_error, "endpoint '" + url + "' must start with http://");
  const std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

JsonHttpClient::JsonHttpClient(HttpEndpoint endpoint, ErrorCode failure_code)
    : endpoint_(std::move(endpoint)), failure_code_(failure_code) {
  std::tie(origin_, path_) = split_url(endpoint_.url);
}

HttpResponse JsonHttpClient::post(const std::string& path, const Json& body) const {
  httplib::Client client(origin_);
  const auto timeout = std::chrono::milliseconds(endpoint_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!endpoint_.api_key_env.empty())
    if (const char* key = std::getenv(endpoint_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);

  const std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= endpoint_.retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(endpoint_.backoff_ms << (attempt - 1)));
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server returned " + std::to_string(res->status);
      continue;
    }
    HttpResponse out;
    out.status = res->status;
    if (!res->body.empty()) {
      try {
        out.body = Json::parse(res->body);
      } catch (const Json::parse_error&) {
        fail(failure_code_, origin_ + path + ": reply is not JSON");
      }
    }
    return out;
  }
  fail(failure_code_, origin_ + path + ": " + last_error);
}

ChatClient::ChatClient(HttpEndpoint endpoint, ErrorCode failure_code)
    : http_(std::move(endpoint), failure_code), failure_code_(failure_code) {}

std::vector<std::string> ChatClient::complete(const ChatRequest& request) const {
  Json body;
  body["messages"] = Json::array();
  for (const auto& m : request.messages)
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  body["n"] = request.n;
  body["temperature"] = request.temperature;
  body["stop"] = request.stop;
  if (!request.model.empty()) body["model"] = request.model;

  const HttpResponse res = http_.post(body);
  if (res.status != 200) fail(failure_code_, "chat endpoint returned " + std::to_string(res.status));
  std::vector<std::string> texts;
  try {
    for (const auto& choice : res.body.at("choices")) texts.push_back(choice.at("text").get<std::string>());
  } catch (const Json::exception& e) {
    fail(failure_code_, std::string("malformed chat reply: ") + e.what());
  }
  return texts;
}

}  // namespace revtraj
