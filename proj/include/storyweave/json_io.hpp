#pragma once

#include <nlohmann/json.hpp>

#include "storyweave/backend.hpp"
#include "storyweave/candidate.hpp"
#include "storyweave/interaction.hpp"
#include "storyweave/prompt.hpp"
#include "storyweave/story.hpp"
#include "storyweave/tasks.hpp"

// JSON mappings shared by persistence, the corpus log and the HTTP API.
// from_json is strict: missing or mistyped fields throw nlohmann exceptions
// or storyweave::Error, which callers turn into their own error codes.
namespace storyweave {

void to_json(nlohmann::json& j, const Selection& sel);
void from_json(const nlohmann::json& j, Selection& sel);

void to_json(nlohmann::json& j, const Turn& turn);
void from_json(const nlohmann::json& j, Turn& turn);

void to_json(nlohmann::json& j, const Span& span);
Span span_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const GenerationParams& params);
void from_json(const nlohmann::json& j, GenerationParams& params);

// Lenient variant for API input: absent fields keep `defaults`.
GenerationParams params_from_json(const nlohmann::json& j,
                                  GenerationParams defaults);

void to_json(nlohmann::json& j, const BackendDescriptor& backend);
void from_json(const nlohmann::json& j, BackendDescriptor& backend);

void to_json(nlohmann::json& j, const Candidate& candidate);
void from_json(const nlohmann::json& j, Candidate& candidate);

void to_json(nlohmann::json& j, const PromptRequest& req);
void from_json(const nlohmann::json& j, PromptRequest& req);

void to_json(nlohmann::json& j, const InteractionRecord& record);
void from_json(const nlohmann::json& j, InteractionRecord& record);

// {"text": ..., "spans": [{"start", "end", "kind", "request_id"?}]} with
// code-point offsets.
nlohmann::json annotated_export(const StoryDocument& doc);

}  // namespace storyweave
