#include "storyweave/json_io.hpp"

#include "storyweave/error.hpp"

namespace storyweave {

using nlohmann::json;

namespace {

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& value) {
  if (value) {
    j[key] = *value;
  } else {
    j[key] = nullptr;
  }
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key) {
  const json& value = j.at(key);
  if (value.is_null()) return std::nullopt;
  return value.get<T>();
}

}  // namespace

void to_json(json& j, const Selection& sel) {
  j = {{"start", sel.start}, {"end", sel.end}};
}

void from_json(const json& j, Selection& sel) {
  sel.start = j.at("start").get<std::size_t>();
  sel.end = j.at("end").get<std::size_t>();
}

void to_json(json& j, const Turn& turn) {
  j = {{"role", role_name(turn.role)}, {"text", turn.text}};
}

void from_json(const json& j, Turn& turn) {
  turn.role = parse_role(j.at("role").get<std::string>());
  turn.text = j.at("text").get<std::string>();
}

void to_json(json& j, const Span& span) {
  j = {{"text", span.text()},
       {"kind", author_name(span.provenance().kind)}};
  if (span.provenance().kind == Author::model) {
    j["request_id"] = span.provenance().request_id;
  }
}

Span span_from_json(const json& j) {
  Provenance provenance;
  provenance.kind = parse_author(j.at("kind").get<std::string>());
  if (provenance.kind == Author::model) {
    provenance.request_id = j.at("request_id").get<std::string>();
  }
  return Span(j.at("text").get<std::string>(), std::move(provenance));
}

void to_json(json& j, const GenerationParams& params) {
  j = {{"top_k", params.top_k},
       {"num_candidates", params.num_candidates},
       {"max_response_chars", params.max_response_chars},
       {"timeout_ms", params.timeout_ms}};
  put_optional(j, "seed", params.seed);
}

void from_json(const json& j, GenerationParams& params) {
  params.top_k = j.at("top_k").get<int>();
  params.num_candidates = j.at("num_candidates").get<int>();
  params.max_response_chars = j.at("max_response_chars").get<int>();
  params.timeout_ms = j.at("timeout_ms").get<int>();
  params.seed = get_optional<std::uint64_t>(j, "seed");
  params.validate();
}

GenerationParams params_from_json(const json& j, GenerationParams defaults) {
  if (j.is_null()) return defaults;
  if (!j.is_object()) {
    throw Error(Errc::invalid_argument, "params must be a JSON object");
  }
  GenerationParams params = std::move(defaults);
  params.top_k = j.value("top_k", params.top_k);
  params.num_candidates = j.value("num_candidates", params.num_candidates);
  params.max_response_chars =
      j.value("max_response_chars", params.max_response_chars);
  params.timeout_ms = j.value("timeout_ms", params.timeout_ms);
  if (j.contains("seed")) params.seed = get_optional<std::uint64_t>(j, "seed");
  params.validate();
  return params;
}

void to_json(json& j, const BackendDescriptor& backend) {
  j = {{"id", backend.id},
       {"format", format_name(backend.format)},
       {"endpoint", backend.endpoint}};
}

void from_json(const json& j, BackendDescriptor& backend) {
  backend.id = j.at("id").get<std::string>();
  backend.format = parse_format(j.at("format").get<std::string>());
  backend.endpoint = j.at("endpoint").get<std::string>();
}

void to_json(json& j, const Candidate& candidate) {
  j = {{"text", candidate.text},
       {"raw_text", candidate.raw_text},
       {"backend_id", candidate.backend_id},
       {"trimmed", candidate.annotations.trimmed}};
  if (const auto& meta = candidate.annotations.meta) {
    j["meta"] = {{"is_meta", meta->is_meta},
                 {"matched_rules", meta->matched_rules}};
  } else {
    j["meta"] = nullptr;
  }
  put_optional(j, "word_count_delta", candidate.annotations.word_count_delta);
}

void from_json(const json& j, Candidate& candidate) {
  candidate.text = j.at("text").get<std::string>();
  candidate.raw_text = j.at("raw_text").get<std::string>();
  candidate.backend_id = j.at("backend_id").get<std::string>();
  candidate.annotations.trimmed = j.at("trimmed").get<bool>();
  const json& meta = j.at("meta");
  if (meta.is_null()) {
    candidate.annotations.meta.reset();
  } else {
    candidate.annotations.meta = MetaTextVerdict{
        meta.at("is_meta").get<bool>(),
        meta.at("matched_rules").get<std::vector<std::string>>()};
  }
  candidate.annotations.word_count_delta =
      get_optional<long>(j, "word_count_delta");
}

void to_json(json& j, const PromptRequest& req) {
  j = {{"request_id", req.request_id},
       {"kind", task_name(req.kind)},
       {"doc_version", req.doc_version},
       {"binding", req.binding},
       {"context", req.context.turns},
       {"flat_prompt", req.flat_prompt}};
  put_optional(j, "target", req.target);
  put_optional(j, "n_words", req.n_words);
  put_optional(j, "tone", req.tone);
  put_optional(j, "instruction", req.instruction);
}

void from_json(const json& j, PromptRequest& req) {
  req.request_id = j.at("request_id").get<std::string>();
  req.kind = parse_task(j.at("kind").get<std::string>());
  req.doc_version = j.at("doc_version").get<std::uint64_t>();
  req.binding.clear();
  for (const auto& [slot, value] : j.at("binding").items()) {
    req.binding.emplace(slot, value.get<std::string>());
  }
  req.context.turns = j.at("context").get<std::vector<Turn>>();
  req.flat_prompt = j.at("flat_prompt").get<std::string>();
  req.target = get_optional<Selection>(j, "target");
  req.n_words = get_optional<int>(j, "n_words");
  req.tone = get_optional<std::string>(j, "tone");
  req.instruction = get_optional<std::string>(j, "instruction");
}

void to_json(json& j, const InteractionRecord& record) {
  j = {{"request_id", record.request_id},
       {"session_id", record.session_id},
       {"kind", task_name(record.kind)},
       {"doc_version_before", record.doc_version_before},
       {"request", record.request},
       {"params", record.params},
       {"backend_id", record.backend_id},
       {"raw_candidates", record.raw_candidates},
       {"candidates", record.candidates},
       {"timestamp", record.timestamp}};
  put_optional(j, "accepted_index", record.accepted_index);
}

void from_json(const json& j, InteractionRecord& record) {
  record.request_id = j.at("request_id").get<std::string>();
  record.session_id = j.at("session_id").get<std::string>();
  record.kind = parse_task(j.at("kind").get<std::string>());
  record.doc_version_before = j.at("doc_version_before").get<std::uint64_t>();
  record.request = j.at("request").get<PromptRequest>();
  record.params = j.at("params").get<GenerationParams>();
  record.backend_id = j.at("backend_id").get<std::string>();
  record.raw_candidates = j.at("raw_candidates").get<std::vector<Candidate>>();
  record.candidates = j.at("candidates").get<std::vector<Candidate>>();
  record.timestamp = j.at("timestamp").get<std::string>();
  record.accepted_index = get_optional<std::size_t>(j, "accepted_index");
  if (record.accepted_index &&
      *record.accepted_index >= record.candidates.size()) {
    throw Error(Errc::integrity, "accepted_index " +
                                     std::to_string(*record.accepted_index) +
                                     " does not name a listed candidate");
  }
}

json annotated_export(const StoryDocument& doc) {
  json spans = json::array();
  std::size_t offset = 0;
  for (const auto& span : doc.spans()) {
    json entry = {{"start", offset},
                  {"end", offset + span.length()},
                  {"kind", author_name(span.provenance().kind)}};
    if (span.provenance().kind == Author::model) {
      entry["request_id"] = span.provenance().request_id;
    }
    spans.push_back(std::move(entry));
    offset += span.length();
  }
  return {{"text", doc.full_text()}, {"spans", std::move(spans)}};
}

}  // namespace storyweave
