#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "skillsim/scene.hpp"

namespace skillsim::llm {

// The four prompt sections, rendered in fixed order: asset descriptions,
// API instructions, few-shot exemplars, query.
struct PromptBundle {
  std::vector<std::string> asset_descriptions;
  std::string api_instructions;
  std::vector<std::pair<std::string, std::string>> exemplars;  // (Q, A)
  std::string query;
};

struct Message {
  std::string role;  // system | user | assistant
  std::string content;
};

struct LLMRequest {
  std::string model_id = "gpt-4";
  std::vector<Message> messages;
  double temperature = 0.0;
};

enum class ProviderMode { Http, Replay };

struct ProviderConfig {
  std::string endpoint_url;
  std::string api_key_env_var = "SKILLSIM_API_KEY";
  double timeout_s = 30.0;
  int max_retries = 2;
  std::string cache_dir;
  ProviderMode mode = ProviderMode::Replay;
  double backoff_base_s = 0.25;  // exponential backoff start
};

// Simulator query functions and reward grammar the LLM is told about, plus
// the expected response layout. Fixed text: it participates in cache keys.
std::string api_instructions_text();

// Built-in single in-context exemplar (dishwasher + mug long-horizon task).
const std::vector<std::pair<std::string, std::string>>& default_exemplars();

std::string default_query_text();

// Bundle the scene description with instructions and exemplars.
// Throws EmptyScene if the scene has no assets.
PromptBundle assemble_prompt(
    const SceneSpec& scene,
    const std::vector<std::pair<std::string, std::string>>& exemplars,
    const std::string& query);

// system(descriptions+instructions), then per exemplar user/assistant, then
// user(query). Throws EmptyQuery.
LLMRequest render_messages(const PromptBundle& bundle,
                           const std::string& model_id = "gpt-4",
                           double temperature = 0.0);

// Canonical chat-completions JSON body (sorted keys, stable float format);
// cache keys are the SHA-256 of this text.
std::string canonical_request_body(const LLMRequest& request);
std::string request_cache_key(const LLMRequest& request);

// Injectable transport so tests can count or refuse network use.
struct HttpResult {
  bool transport_ok = false;  // false: connect/timeout failure
  int status = 0;
  std::string body;
};
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResult post_json(const std::string& url, const std::string& body,
                               const std::string& api_key,
                               double timeout_s) = 0;
};
std::unique_ptr<HttpTransport> make_default_transport();

// Resolve a request to response text.
//   replay mode: cache lookup only; throws ReplayMiss when absent.
//   http mode:   cache hit bypasses the network; otherwise POST with
//                exponential-backoff retries (<= max_retries + 1 attempts),
//                then cache the response atomically.
// Throws MissingApiKey, NetworkError, HttpStatusError, BadResponse.
std::string query(const LLMRequest& request, const ProviderConfig& cfg,
                  HttpTransport* transport = nullptr);

// Pre-populate the cache with a known response (used to build replay
// fixtures for tests and offline runs).
void seed_replay_cache(const LLMRequest& request,
                       const std::string& response_text,
                       const std::string& cache_dir);

}  // namespace skillsim::llm
