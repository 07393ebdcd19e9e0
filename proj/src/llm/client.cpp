#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "skillsim/error.hpp"
#include "skillsim/io_util.hpp"
#include "skillsim/llm/gateway.hpp"

#include <httplib.h>

namespace skillsim::llm {

using nlohmann::json;
namespace fs = std::filesystem;

std::string canonical_request_body(const LLMRequest& request) {
  // nlohmann maps sort keys alphabetically, which is the canonical order.
  json body;
  body["model"] = request.model_id;
  body["temperature"] = request.temperature;
  json messages = json::array();
  for (const auto& m : request.messages)
    messages.push_back({{"role", m.role}, {"content", m.content}});
  body["messages"] = std::move(messages);
  return body.dump();
}

std::string request_cache_key(const LLMRequest& request) {
  return sha256_hex(canonical_request_body(request));
}

namespace {

fs::path cache_path(const std::string& cache_dir, const std::string& key) {
  return fs::path(cache_dir) / (key + ".json");
}

std::string read_cached_response(const fs::path& path) {
  json entry = json::parse(read_file(path));
  return entry.at("response").get<std::string>();
}

void write_cache_entry(const fs::path& path, const std::string& request_body,
                       const std::string& response) {
  json entry;
  entry["request"] = request_body;
  entry["response"] = response;
  write_file_atomic(path, entry.dump(2) + "\n");
}

class HttplibTransport : public HttpTransport {
 public:
  HttpResult post_json(const std::string& url, const std::string& body,
                       const std::string& api_key, double timeout_s) override {
    // Split scheme://host:port and path.
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
      throw NetworkError("endpoint url \"" + url + "\" has no scheme");
    auto path_start = url.find('/', scheme_end + 3);
    std::string origin =
        path_start == std::string::npos ? url : url.substr(0, path_start);
    std::string path =
        path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(std::chrono::milliseconds(
        static_cast<long>(timeout_s * 1000)));
    client.set_read_timeout(
        std::chrono::milliseconds(static_cast<long>(timeout_s * 1000)));
    httplib::Headers headers;
    if (!api_key.empty())
      headers.emplace("Authorization", "Bearer " + api_key);
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) return {false, 0, httplib::to_string(res.error())};
    return {true, res->status, res->body};
  }
};

std::string extract_content(const std::string& body) {
  try {
    json doc = json::parse(body);
    return doc.at("choices").at(0).at("message").at("content")
        .get<std::string>();
  } catch (const json::exception& e) {
    throw BadResponse(std::string("cannot extract message content: ") +
                      e.what());
  }
}

}  // namespace

std::unique_ptr<HttpTransport> make_default_transport() {
  return std::make_unique<HttplibTransport>();
}

std::string query(const LLMRequest& request, const ProviderConfig& cfg,
                  HttpTransport* transport) {
  if (request.messages.empty()) throw EmptyQuery("request has no messages");
  if (cfg.mode == ProviderMode::Replay && cfg.cache_dir.empty())
    throw Error("ConfigError", "replay mode requires a cache_dir");

  const std::string body = canonical_request_body(request);
  const std::string key = sha256_hex(body);

  if (!cfg.cache_dir.empty()) {
    const fs::path entry = cache_path(cfg.cache_dir, key);
    if (fs::exists(entry)) return read_cached_response(entry);
  }

  if (cfg.mode == ProviderMode::Replay)
    throw ReplayMiss("no cached response for request " + key.substr(0, 12) +
                     "... in " + (cfg.cache_dir.empty() ? "<unset cache dir>"
                                                        : cfg.cache_dir));

  const char* api_key = std::getenv(cfg.api_key_env_var.c_str());
  if (!api_key || !*api_key)
    throw MissingApiKey("environment variable " + cfg.api_key_env_var +
                        " is not set");

  std::unique_ptr<HttpTransport> owned;
  if (!transport) {
    owned = make_default_transport();
    transport = owned.get();
  }

  std::string last_failure;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      const double delay = cfg.backoff_base_s * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    HttpResult res =
        transport->post_json(cfg.endpoint_url, body, api_key, cfg.timeout_s);
    if (!res.transport_ok) {
      last_failure = "transport failure: " + res.body;
      continue;
    }
    if (res.status >= 500) {
      last_failure = "server status " + std::to_string(res.status);
      continue;
    }
    if (res.status != 200)
      throw HttpStatusError(res.status, res.body.substr(0, 200));

    const std::string content = extract_content(res.body);
    if (!cfg.cache_dir.empty())
      write_cache_entry(cache_path(cfg.cache_dir, key), body, content);
    return content;
  }
  throw NetworkError("request failed after " +
                     std::to_string(cfg.max_retries + 1) + " attempts (" +
                     last_failure + ")");
}

void seed_replay_cache(const LLMRequest& request,
                       const std::string& response_text,
                       const std::string& cache_dir) {
  const std::string body = canonical_request_body(request);
  write_cache_entry(cache_path(cache_dir, sha256_hex(body)), body,
                    response_text);
}

}  // namespace skillsim::llm
