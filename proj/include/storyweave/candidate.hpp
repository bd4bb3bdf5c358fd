#pragma once

#include <optional>
#include <string>
#include <vector>

namespace storyweave {

struct MetaTextVerdict {
  bool is_meta = false;
  std::vector<std::string> matched_rules;

  bool operator==(const MetaTextVerdict&) const = default;
};

struct CandidateAnnotations {
  std::optional<MetaTextVerdict> meta;
  // word_count(text) - requested words; infill only.
  std::optional<long> word_count_delta;
  bool trimmed = false;

  bool operator==(const CandidateAnnotations&) const = default;
};

// One model response. `raw_text` is what the backend returned; `text` is
// what the writer sees after post-processing.
struct Candidate {
  std::string text;
  std::string backend_id;
  std::string raw_text;
  CandidateAnnotations annotations;

  static Candidate raw(std::string text, std::string backend_id) {
    Candidate c;
    c.raw_text = text;
    c.text = std::move(text);
    c.backend_id = std::move(backend_id);
    return c;
  }

  bool operator==(const Candidate&) const = default;
};

}  // namespace storyweave
