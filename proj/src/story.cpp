#include "storyweave/story.hpp"

#include <algorithm>

#include "storyweave/error.hpp"
#include "storyweave/utf8.hpp"

namespace storyweave {

std::string_view author_name(Author author) {
  return author == Author::human ? "human" : "model";
}

Author parse_author(std::string_view name) {
  if (name == "human") return Author::human;
  if (name == "model") return Author::model;
  throw Error(Errc::invalid_argument,
              "unknown provenance kind '" + std::string(name) + "'");
}

void Provenance::validate() const {
  if (kind == Author::model && request_id.empty()) {
    throw Error(Errc::invalid_argument, "model text must carry a request id");
  }
  if (kind == Author::human && !request_id.empty()) {
    throw Error(Errc::invalid_argument,
                "human text cannot carry a request id");
  }
}

Span::Span(std::string text, Provenance provenance)
    : text_(std::move(text)), provenance_(std::move(provenance)) {
  utf8::validate(text_);
  provenance_.validate();
  length_ = utf8::length(text_);
}

std::vector<Span> canonicalize(std::vector<Span> spans) {
  std::vector<Span> out;
  out.reserve(spans.size());
  for (auto& span : spans) {
    if (span.length() == 0) continue;
    if (!out.empty() && out.back().provenance() == span.provenance()) {
      out.back() = Span(out.back().text() + span.text(), span.provenance());
    } else {
      out.push_back(std::move(span));
    }
  }
  return out;
}

StoryDocument::StoryDocument(std::vector<Span> spans, std::uint64_t version)
    : spans_(canonicalize(std::move(spans))), version_(version) {
  for (const auto& span : spans_) length_ += span.length();
}

std::string StoryDocument::full_text() const {
  std::string text;
  for (const auto& span : spans_) text += span.text();
  return text;
}

void StoryDocument::check_selection(Selection sel) const {
  if (sel.start > sel.end || sel.end > length_) {
    throw Error(Errc::range, "selection [" + std::to_string(sel.start) + ", " +
                                 std::to_string(sel.end) +
                                 ") is outside document of length " +
                                 std::to_string(length_));
  }
}

std::string StoryDocument::selected_text(Selection sel) const {
  check_selection(sel);
  return std::string(utf8::substr(full_text(), sel.start, sel.end));
}

StoryDocument StoryDocument::replace_range(Selection sel, std::string_view text,
                                           const Provenance& provenance) const {
  check_selection(sel);
  std::vector<Span> prefix;
  std::vector<Span> suffix;
  std::size_t offset = 0;
  for (const auto& span : spans_) {
    const std::size_t begin = offset;
    const std::size_t end = offset + span.length();
    offset = end;
    if (begin < sel.start) {
      const std::size_t keep = std::min(end, sel.start) - begin;
      prefix.emplace_back(std::string(utf8::substr(span.text(), 0, keep)),
                          span.provenance());
    }
    if (end > sel.end) {
      const std::size_t from = std::max(begin, sel.end) - begin;
      suffix.emplace_back(
          std::string(utf8::substr(span.text(), from, span.length())),
          span.provenance());
    }
  }
  std::vector<Span> spans = std::move(prefix);
  spans.emplace_back(std::string(text), provenance);
  std::move(suffix.begin(), suffix.end(), std::back_inserter(spans));
  return StoryDocument(std::move(spans), version_ + 1);
}

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const bool space = utf8::is_space(utf8::decode(text, pos));
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

}  // namespace storyweave
