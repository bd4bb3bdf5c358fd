#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "storyweave/candidate.hpp"
#include "storyweave/prompt.hpp"
#include "storyweave/story.hpp"

namespace storyweave {

enum class TaskKind { continuation, infill, elaborate, rewrite, custom };

inline constexpr TaskKind kAllTaskKinds[] = {
    TaskKind::continuation, TaskKind::infill, TaskKind::elaborate,
    TaskKind::rewrite, TaskKind::custom};

std::string_view task_name(TaskKind kind);
TaskKind parse_task(std::string_view name);

// Six underscores; spliced as " ______ " with surrounding whitespace
// collapsed.
inline constexpr std::string_view kBlankMarker = "______";

// A fully bound generation request, ready for either wire format.
struct PromptRequest {
  std::string request_id;
  TaskKind kind = TaskKind::continuation;
  std::uint64_t doc_version = 0;
  std::optional<Selection> target;
  std::optional<int> n_words;
  std::optional<std::string> tone;
  std::optional<std::string> instruction;
  SlotBinding binding;
  ConversationContext context;
  std::string flat_prompt;

  // Story text as embedded in the prompt (blank-marked for infill).
  const std::string& story() const;

  bool operator==(const PromptRequest&) const = default;
};

struct TaskOptions {
  std::optional<int> n_words;
  std::optional<std::string> tone;
  std::optional<std::string> instruction;
};

// Replaces [start, end) with the blank marker, collapsing whitespace on both
// sides to a single space. Throws Error(precondition) for a caret selection
// or if the rest of the story already contains the marker.
std::string blank_out(const StoryDocument& doc, Selection sel);

// Offset just past the sentence holding the end of `sel`: the first '.',
// '!' or '?' at or after the selection's last character that is followed
// by whitespace or the end of text. Falls back to the end of the document.
std::size_t sentence_end_after(const StoryDocument& doc, Selection sel);

// Maps task kinds to their templates and builds requests against a
// document. Builders are pure: identical inputs give identical requests.
class TaskRegistry {
 public:
  // Reads <kind>.tmpl for every task kind from `dir`.
  static TaskRegistry load_directory(const std::filesystem::path& dir);

  explicit TaskRegistry(std::map<TaskKind, TaskTemplate> templates);

  const TaskTemplate& get(TaskKind kind) const;

  PromptRequest continuation(const StoryDocument& doc,
                             std::string request_id) const;
  PromptRequest infill(const StoryDocument& doc, Selection sel,
                       std::optional<int> n_words,
                       std::string request_id) const;
  PromptRequest elaborate(const StoryDocument& doc, Selection sel,
                          std::string request_id) const;
  PromptRequest rewrite(const StoryDocument& doc, std::optional<Selection> sel,
                        std::string_view tone, std::string request_id) const;
  PromptRequest custom(const StoryDocument& doc, std::string_view instruction,
                       std::string request_id,
                       std::optional<Selection> target = std::nullopt) const;

  PromptRequest build(TaskKind kind, const StoryDocument& doc,
                      std::optional<Selection> sel, const TaskOptions& options,
                      std::string request_id) const;

 private:
  PromptRequest bind(TaskKind kind, const StoryDocument& doc,
                     SlotBinding binding, std::string request_id) const;

  std::map<TaskKind, TaskTemplate> templates_;
};

// Splices an accepted candidate into the document with model provenance.
// Throws Error(stale_request) if the document moved on since `req` was
// built and Error(precondition) for empty candidate text.
StoryDocument apply_candidate(const StoryDocument& doc,
                              const PromptRequest& req,
                              const Candidate& candidate);

}  // namespace storyweave
