#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "storyweave/candidate.hpp"
#include "storyweave/tasks.hpp"

namespace storyweave {

enum class MatchKind {
  // Case-insensitive literal anywhere in the candidate.
  substring,
  // A literal, optionally ending in '?': the '?' anchors the match to a
  // sentence that ends in a question mark.
  regex_lite,
};

struct MetaRule {
  std::string id;
  MatchKind kind = MatchKind::substring;
  std::string pattern;

  bool operator==(const MetaRule&) const = default;
};

// Ordered rule list for spotting meta text: output that talks about the
// story instead of adding to it. Several lines may share one rule id.
class MetaRules {
 public:
  // Lines of the form "RULE <id>: <substring|regex-lite> <pattern>"; blank
  // lines and '#' comments are skipped. Throws Error(parse).
  static MetaRules parse(std::string_view source);
  static MetaRules load_file(const std::filesystem::path& path);
  // The rule set shipped in rules/meta_rules.txt.
  static MetaRules defaults();

  MetaRules() = default;
  explicit MetaRules(std::vector<MetaRule> rules) : rules_(std::move(rules)) {}

  const std::vector<MetaRule>& rules() const { return rules_; }

 private:
  std::vector<MetaRule> rules_;
};

// Never modifies text. A question-anchored literal that the story itself
// also uses does not count, so in-world dialogue about "the story" passes.
MetaTextVerdict detect_meta(std::string_view candidate_text,
                            std::string_view story_text,
                            const MetaRules& rules);

// Lowercased, whitespace-collapsed key used for duplicate detection.
std::string dedupe_key(std::string_view text);

std::vector<Candidate> dedupe(std::vector<Candidate> candidates);

// Cuts an unfinished trailing sentence. The result is always a prefix of
// the input.
std::pair<std::string, bool> trim_to_sentence(std::string_view text);

Candidate annotate_word_count(Candidate candidate, int target);

class PostProcessor {
 public:
  explicit PostProcessor(MetaRules rules) : rules_(std::move(rules)) {}

  // strip -> drop empty -> flag meta -> trim (continuation) -> word-count
  // delta (infill) -> dedupe. Flags are sticky, so re-running the
  // pipeline on its own output changes nothing.
  std::vector<Candidate> run(std::vector<Candidate> raw,
                             const PromptRequest& req) const;

  const MetaRules& rules() const { return rules_; }

 private:
  MetaRules rules_;
};

}  // namespace storyweave
