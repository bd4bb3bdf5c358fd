#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "storyweave/candidate.hpp"
#include "storyweave/prompt.hpp"
#include "storyweave/tasks.hpp"

namespace storyweave {

// Sampling happens on the model server; top_k is forwarded, never applied
// locally. `seed` only affects the mock backend.
struct GenerationParams {
  int top_k = 40;
  int num_candidates = 3;
  int max_response_chars = 1024;
  std::optional<std::uint64_t> seed;
  int timeout_ms = 30000;

  // Throws Error(invalid_argument) for non-positive values.
  void validate() const;

  bool operator==(const GenerationParams&) const = default;
};

enum class WireFormat { dialog, flat };

std::string_view format_name(WireFormat format);
WireFormat parse_format(std::string_view name);

inline constexpr std::string_view kMockEndpoint = "mock";

struct BackendDescriptor {
  std::string id;
  WireFormat format = WireFormat::dialog;
  // An http:// URL, or "mock".
  std::string endpoint = std::string(kMockEndpoint);

  bool is_mock() const { return endpoint == kMockEndpoint; }

  bool operator==(const BackendDescriptor&) const = default;
};

// Request body of the generation protocol:
//   {"format": "dialog", "turns": [{"role": "writer", "text": "..."}],
//    "top_k": 40, "num_candidates": 3, "max_response_chars": 1024}
//   {"format": "flat", "prompt": "...", ...}
// Response body: {"candidates": ["...", ...]}.
nlohmann::json serialize_wire(const PromptRequest& req, WireFormat format,
                              const GenerationParams& params = {});

struct WirePayload {
  WireFormat format = WireFormat::dialog;
  std::vector<Turn> turns;
  std::string prompt;
  int top_k = 0;
  int num_candidates = 0;
  int max_response_chars = 0;

  bool operator==(const WirePayload&) const = default;
};

// Throws Error(backend_protocol) for payloads that do not match the schema.
WirePayload parse_wire(const nlohmann::json& payload);

// Interprets a backend HTTP reply. 2xx bodies must hold a non-empty
// "candidates" array of strings; 413 or an error object with code
// "prompt_too_long" becomes Error(prompt_too_long); anything else is
// Error(backend_protocol) carrying the backend's message.
std::vector<std::string> parse_wire_response(int status,
                                             std::string_view body);

class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;

  // Returns 1..num_candidates raw candidates in the order received.
  virtual std::vector<Candidate> generate(const PromptRequest& req,
                                          const GenerationParams& params,
                                          std::stop_token stop = {}) = 0;
};

// Offline stand-in: stitches words from the prompt into canned sentence
// frames. Output depends only on (prompt bytes, seed, index).
class MockBackend final : public Backend {
 public:
  explicit MockBackend(BackendDescriptor descriptor);

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  std::vector<Candidate> generate(const PromptRequest& req,
                                  const GenerationParams& params,
                                  std::stop_token stop = {}) override;

 private:
  BackendDescriptor descriptor_;
};

// Posts the wire payload to an http:// endpoint.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendDescriptor descriptor);

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  std::vector<Candidate> generate(const PromptRequest& req,
                                  const GenerationParams& params,
                                  std::stop_token stop = {}) override;

 private:
  BackendDescriptor descriptor_;
  std::string origin_;
  std::string path_;
};

std::unique_ptr<Backend> make_backend(BackendDescriptor descriptor);

std::vector<Candidate> generate(const PromptRequest& req,
                                const GenerationParams& params,
                                const BackendDescriptor& backend);

// 64-bit FNV-1a; the mock's hash, stable across platforms.
std::uint64_t fnv1a(std::string_view bytes,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace storyweave
