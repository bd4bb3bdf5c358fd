#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "storyweave/backend.hpp"
#include "storyweave/candidate.hpp"
#include "storyweave/tasks.hpp"

namespace storyweave {

// One suggest/accept exchange, kept for the interaction corpus. The
// request carries both prompt serializations and, for custom tasks, the
// writer's instruction verbatim.
struct InteractionRecord {
  std::string request_id;
  std::string session_id;
  TaskKind kind = TaskKind::continuation;
  std::uint64_t doc_version_before = 0;
  PromptRequest request;
  GenerationParams params;
  std::string backend_id;
  std::vector<Candidate> raw_candidates;
  std::vector<Candidate> candidates;
  std::optional<std::size_t> accepted_index;
  std::string timestamp;

  bool operator==(const InteractionRecord&) const = default;
};

}  // namespace storyweave
