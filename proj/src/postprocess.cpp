#include "storyweave/postprocess.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "storyweave/error.hpp"
#include "storyweave/utf8.hpp"

namespace storyweave {

namespace {

// Keep in sync with rules/meta_rules.txt (checked by the postprocess tests).
constexpr std::string_view kDefaultRules =
    R"(# Meta-text rules: candidates that talk about the story instead of adding to
# it. Format: RULE <id>: <substring|regex-lite> <pattern>
# Matching ignores ASCII case and treats curly apostrophes as straight ones.
# A regex-lite pattern ending in '?' only matches inside a sentence that
# ends with a question mark.
RULE question-about-story: regex-lite story?
RULE question-about-story: regex-lite the four words?
RULE question-about-story: regex-lite what's this?
RULE question-about-story: regex-lite what is this?
RULE first-person-commentary: substring I like where
RULE first-person-commentary: substring I have no idea
RULE first-person-commentary: substring I don't really get
RULE first-person-commentary: substring I don't understand
RULE first-person-commentary: substring could you explain
RULE addresses-writer: substring your story
)";

// ASCII lowercase with curly single quotes folded to '\''.
std::string fold(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t start = pos;
    const char32_t cp = utf8::decode(text, pos);
    if (cp == U'‘' || cp == U'’') {
      out += '\'';
    } else if (cp >= 'A' && cp <= 'Z') {
      out += static_cast<char>(cp - 'A' + 'a');
    } else {
      out.append(text.substr(start, pos - start));
    }
  }
  return out;
}

bool is_terminator(char32_t cp) { return cp == '.' || cp == '!' || cp == '?'; }

bool is_closing_quote(char32_t cp) {
  return cp == '"' || cp == '\'' || cp == U'”' || cp == U'’';
}

// Sentences (byte ranges of folded text) whose terminator run holds a '?'.
std::vector<std::string_view> questions(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char c = text[pos];
    if (c != '.' && c != '!' && c != '?') {
      ++pos;
      continue;
    }
    bool question = false;
    while (pos < text.size() &&
           (text[pos] == '.' || text[pos] == '!' || text[pos] == '?')) {
      question = question || text[pos] == '?';
      ++pos;
    }
    if (question) out.push_back(text.substr(start, pos - start));
    start = pos;
  }
  return out;
}

bool rule_matches(const MetaRule& rule, std::string_view folded,
                  std::string_view folded_story) {
  if (rule.kind == MatchKind::substring) {
    return folded.find(rule.pattern) != std::string_view::npos;
  }
  std::string_view literal = rule.pattern;
  const bool anchored = literal.ends_with('?');
  if (anchored) literal.remove_suffix(1);
  if (!anchored) return folded.find(literal) != std::string_view::npos;
  if (folded_story.find(literal) != std::string_view::npos) return false;
  for (const auto sentence : questions(folded)) {
    if (sentence.find(literal) != std::string_view::npos) return true;
  }
  return false;
}

}  // namespace

MetaRules MetaRules::parse(std::string_view source) {
  std::vector<MetaRule> rules;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < source.size()) {
    ++line_no;
    const std::size_t eol = source.find('\n', pos);
    std::string_view line = source.substr(
        pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? source.size() : eol + 1;
    if (line.ends_with('\r')) line.remove_suffix(1);
    if (utf8::trim(line).empty() || line.starts_with('#')) continue;

    const auto fail = [&](const std::string& what) {
      throw Error(Errc::parse,
                  "rules line " + std::to_string(line_no) + ": " + what);
    };
    if (!line.starts_with("RULE ")) fail("expected 'RULE <id>: <kind> <pattern>'");
    line.remove_prefix(5);
    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos || colon == 0) fail("missing rule id");
    MetaRule rule;
    rule.id = std::string(utf8::trim(line.substr(0, colon)));
    std::string_view rest = utf8::trim_left(line.substr(colon + 1));
    const std::size_t space = rest.find(' ');
    const std::string_view kind = rest.substr(0, space);
    if (kind == "substring") {
      rule.kind = MatchKind::substring;
    } else if (kind == "regex-lite") {
      rule.kind = MatchKind::regex_lite;
    } else {
      fail("unknown match kind '" + std::string(kind) + "'");
    }
    if (space == std::string_view::npos) fail("missing pattern");
    rule.pattern = fold(rest.substr(space + 1));
    if (rule.pattern.empty() || rule.pattern == "?") fail("empty pattern");
    rules.push_back(std::move(rule));
  }
  return MetaRules(std::move(rules));
}

MetaRules MetaRules::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::not_found, "cannot open rules file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

MetaRules MetaRules::defaults() { return parse(kDefaultRules); }

MetaTextVerdict detect_meta(std::string_view candidate_text,
                            std::string_view story_text,
                            const MetaRules& rules) {
  MetaTextVerdict verdict;
  const std::string folded = fold(candidate_text);
  const std::string folded_story = fold(story_text);
  for (const auto& rule : rules.rules()) {
    if (std::find(verdict.matched_rules.begin(), verdict.matched_rules.end(),
                  rule.id) != verdict.matched_rules.end()) {
      continue;
    }
    if (rule_matches(rule, folded, folded_story)) {
      verdict.matched_rules.push_back(rule.id);
    }
  }
  verdict.is_meta = !verdict.matched_rules.empty();
  return verdict;
}

std::string dedupe_key(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t start = pos;
    const char32_t cp = utf8::decode(text, pos);
    if (utf8::is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    if (cp >= 'A' && cp <= 'Z') {
      out += static_cast<char>(cp - 'A' + 'a');
    } else {
      out.append(text.substr(start, pos - start));
    }
  }
  return out;
}

std::vector<Candidate> dedupe(std::vector<Candidate> candidates) {
  std::unordered_set<std::string> seen;
  std::vector<Candidate> out;
  out.reserve(candidates.size());
  for (auto& candidate : candidates) {
    if (seen.insert(dedupe_key(candidate.text)).second) {
      out.push_back(std::move(candidate));
    }
  }
  return out;
}

std::pair<std::string, bool> trim_to_sentence(std::string_view text) {
  struct Point {
    char32_t cp;
    std::size_t end;  // byte offset just past this code point
  };
  std::vector<Point> points;
  for (std::size_t pos = 0; pos < text.size();) {
    const char32_t cp = utf8::decode(text, pos);
    points.push_back({cp, pos});
  }
  const auto unchanged = std::pair{std::string(text), false};
  if (points.empty()) return unchanged;

  std::size_t last = points.size() - 1;
  while (last > 0 && is_closing_quote(points[last].cp)) --last;
  if (is_terminator(points[last].cp)) return unchanged;

  // Last terminator (plus closing quotes) that is followed by whitespace.
  for (std::size_t i = points.size() - 1; i-- > 0;) {
    if (!is_terminator(points[i].cp)) continue;
    std::size_t j = i;
    while (j + 1 < points.size() && is_closing_quote(points[j + 1].cp)) ++j;
    if (j + 1 < points.size() && utf8::is_space(points[j + 1].cp)) {
      return {std::string(text.substr(0, points[j].end)), true};
    }
  }
  return unchanged;
}

Candidate annotate_word_count(Candidate candidate, int target) {
  candidate.annotations.word_count_delta =
      static_cast<long>(word_count(candidate.text)) - target;
  return candidate;
}

std::vector<Candidate> PostProcessor::run(std::vector<Candidate> raw,
                                          const PromptRequest& req) const {
  std::vector<Candidate> kept;
  kept.reserve(raw.size());
  for (auto& candidate : raw) {
    candidate.text = std::string(utf8::trim(candidate.text));
    if (candidate.text.empty()) continue;

    MetaTextVerdict verdict = detect_meta(candidate.text, req.story(), rules_);
    if (const auto& previous = candidate.annotations.meta) {
      std::vector<std::string> merged = previous->matched_rules;
      for (const auto& id : verdict.matched_rules) {
        if (std::find(merged.begin(), merged.end(), id) == merged.end()) {
          merged.push_back(id);
        }
      }
      verdict.matched_rules = std::move(merged);
      verdict.is_meta = !verdict.matched_rules.empty();
    }
    candidate.annotations.meta = std::move(verdict);

    if (req.kind == TaskKind::continuation) {
      auto [text, trimmed] = trim_to_sentence(candidate.text);
      candidate.text = std::move(text);
      candidate.annotations.trimmed = candidate.annotations.trimmed || trimmed;
    }
    if (req.kind == TaskKind::infill && req.n_words) {
      candidate = annotate_word_count(std::move(candidate), *req.n_words);
    }
    kept.push_back(std::move(candidate));
  }
  return dedupe(std::move(kept));
}

}  // namespace storyweave
