#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace storyweave {

enum class Author { human, model };

std::string_view author_name(Author author);
Author parse_author(std::string_view name);

// Who wrote a run of text. Model text always names the request that
// produced it; human text never does.
struct Provenance {
  Author kind = Author::human;
  std::string request_id;

  static Provenance human() { return {}; }
  static Provenance model(std::string request_id) {
    return {Author::model, std::move(request_id)};
  }

  // Throws Error(invalid_argument) if the request_id rule is broken.
  void validate() const;

  bool operator==(const Provenance&) const = default;
};

class Span {
 public:
  Span(std::string text, Provenance provenance);

  const std::string& text() const noexcept { return text_; }
  const Provenance& provenance() const noexcept { return provenance_; }
  // In code points.
  std::size_t length() const noexcept { return length_; }

  bool operator==(const Span& other) const {
    return text_ == other.text_ && provenance_ == other.provenance_;
  }

 private:
  std::string text_;
  Provenance provenance_;
  std::size_t length_;
};

// Half-open code-point range; start == end is a caret.
struct Selection {
  std::size_t start = 0;
  std::size_t end = 0;

  static Selection caret(std::size_t at) { return {at, at}; }

  bool is_caret() const noexcept { return start == end; }
  std::size_t size() const noexcept { return end - start; }

  bool operator==(const Selection&) const = default;
};

// Drops empty spans and merges neighbours with equal provenance.
std::vector<Span> canonicalize(std::vector<Span> spans);

// Immutable story text partitioned into provenance-tagged spans. Every
// mutation returns a new document with a higher version.
class StoryDocument {
 public:
  StoryDocument() = default;
  explicit StoryDocument(std::vector<Span> spans, std::uint64_t version = 0);

  const std::vector<Span>& spans() const noexcept { return spans_; }
  std::uint64_t version() const noexcept { return version_; }
  std::size_t length() const noexcept { return length_; }
  bool empty() const noexcept { return length_ == 0; }

  std::string full_text() const;

  // Throws Error(range) if `sel` is reversed or past the end.
  std::string selected_text(Selection sel) const;
  void check_selection(Selection sel) const;

  StoryDocument replace_range(Selection sel, std::string_view text,
                              const Provenance& provenance) const;

  bool operator==(const StoryDocument&) const = default;

 private:
  std::vector<Span> spans_;
  std::uint64_t version_ = 0;
  std::size_t length_ = 0;
};

// Maximal runs of non-whitespace; punctuation sticks to its word.
std::size_t word_count(std::string_view text);

}  // namespace storyweave
