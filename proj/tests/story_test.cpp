#include <gtest/gtest.h>

#include <random>

#include "storyweave/story.hpp"
#include "storyweave/utf8.hpp"
#include "test_support.hpp"

namespace storyweave {
namespace {

using testing::FlatOracle;
using testing::owners_of;

TEST(StoryDocument, FullTextConcatenatesSpans) {
  const StoryDocument doc({Span("An elderly man", Provenance::human()),
                           Span(" was sitting alone.",
                                Provenance::model("r-1"))});
  EXPECT_EQ(doc.full_text(), "An elderly man was sitting alone.");
  EXPECT_EQ(doc.spans().size(), 2u);
}

TEST(StoryDocument, EmptyDocument) {
  const StoryDocument doc;
  EXPECT_EQ(doc.full_text(), "");
  EXPECT_TRUE(doc.empty());
  EXPECT_EQ(doc.version(), 0u);
}

TEST(StoryDocument, SelectedText) {
  const StoryDocument doc = testing::human_doc(
      "Suddenly he saw a whitetail doe. It was beautiful.");
  const Selection sel = testing::find_selection(doc.full_text(),
                                                "he saw a whitetail doe");
  EXPECT_EQ(doc.selected_text(sel), "he saw a whitetail doe");
  EXPECT_EQ(doc.selected_text(Selection::caret(4)), "");
}

TEST(StoryDocument, SelectionOutOfBoundsIsRangeError) {
  const StoryDocument doc = testing::human_doc("abc");
  EXPECT_ERRC(doc.selected_text({0, 4}), Errc::range);
  EXPECT_ERRC(doc.selected_text({2, 1}), Errc::range);
  EXPECT_ERRC(doc.replace_range({4, 4}, "x", Provenance::human()), Errc::range);
}

TEST(StoryDocument, OffsetsAreCodePoints) {
  const StoryDocument doc = testing::human_doc("café 漢字 ok");
  EXPECT_EQ(doc.length(), 10u);
  EXPECT_EQ(doc.selected_text({5, 7}), "漢字");
  const StoryDocument next = doc.replace_range({3, 4}, "e", Provenance::human());
  EXPECT_EQ(next.full_text(), "cafe 漢字 ok");
}

TEST(StoryDocument, ReplaceThenRestoreIsIdentity) {
  const StoryDocument doc =
      testing::human_doc("The knight drew a sword and waited.");
  const Selection sword = testing::find_selection(doc.full_text(), "a sword");
  const StoryDocument changed =
      doc.replace_range(sword, "a talking sword", Provenance::human());
  EXPECT_EQ(changed.full_text(), "The knight drew a talking sword and waited.");
  const Selection talking =
      testing::find_selection(changed.full_text(), "a talking sword");
  const StoryDocument restored =
      changed.replace_range(talking, "a sword", Provenance::human());
  EXPECT_EQ(restored.full_text(), doc.full_text());
  EXPECT_EQ(restored.spans(), doc.spans());
  EXPECT_EQ(restored.version(), doc.version() + 2);
}

TEST(StoryDocument, InsertAtCaretCreatesOneModelSpan) {
  const StoryDocument doc = testing::human_doc("Hello world.");
  const StoryDocument next =
      doc.replace_range(Selection::caret(5), ", big", Provenance::model("r-7"));
  ASSERT_EQ(next.spans().size(), 3u);
  EXPECT_EQ(next.spans()[0].text(), "Hello");
  EXPECT_EQ(next.spans()[1].text(), ", big");
  EXPECT_EQ(next.spans()[1].provenance(), Provenance::model("r-7"));
  EXPECT_EQ(next.spans()[2].text(), " world.");
  EXPECT_EQ(next.full_text(), "Hello, big world.");
}

TEST(StoryDocument, ReplaceEverythingWithNothing) {
  const StoryDocument doc({Span("one ", Provenance::human()),
                           Span("two", Provenance::model("r-1"))});
  const StoryDocument next =
      doc.replace_range({0, doc.length()}, "", Provenance::human());
  EXPECT_TRUE(next.empty());
  EXPECT_TRUE(next.spans().empty());
  EXPECT_EQ(next.version(), 1u);
}

TEST(StoryDocument, AdjacentSameProvenanceSpansMerge) {
  const StoryDocument doc({Span("a", Provenance::human()),
                           Span("", Provenance::model("r-1")),
                           Span("b", Provenance::human()),
                           Span("c", Provenance::model("r-1")),
                           Span("d", Provenance::model("r-1")),
                           Span("e", Provenance::model("r-2"))});
  ASSERT_EQ(doc.spans().size(), 3u);
  EXPECT_EQ(doc.spans()[0].text(), "ab");
  EXPECT_EQ(doc.spans()[1].text(), "cd");
  EXPECT_EQ(doc.spans()[2].text(), "e");
}

TEST(StoryDocument, ProvenanceRulesAreEnforced) {
  EXPECT_ERRC(Span("x", Provenance{Author::model, ""}), Errc::invalid_argument);
  EXPECT_ERRC(Span("x", Provenance{Author::human, "r-1"}),
              Errc::invalid_argument);
  EXPECT_ERRC(Span("\xff", Provenance::human()), Errc::invalid_argument);
}

TEST(WordCount, CountsWhitespaceRuns) {
  EXPECT_EQ(word_count("he saw a whitetail doe"), 5u);
  EXPECT_EQ(word_count(""), 0u);
  EXPECT_EQ(word_count("  two   words  "), 2u);
  EXPECT_EQ(word_count("doe. It"), 2u);
  EXPECT_EQ(word_count("a\tb\nc d"), 4u);
}

// Property checks against the flat-string shadow.
TEST(StoryDocumentProperty, RandomEditsMatchFlatOracle) {
  std::mt19937_64 rng(20210417);
  std::uniform_int_distribution<int> who(0, 3);
  for (int trial = 0; trial < 300; ++trial) {
    StoryDocument doc;
    FlatOracle oracle;
    for (int step = 0; step < 25; ++step) {
      const Selection sel = testing::random_selection(rng, doc.length());
      const std::u32string insert = testing::random_text(rng, 6);
      const int author = who(rng);
      const Provenance provenance =
          author == 0 ? Provenance::human()
                      : Provenance::model("r-" + std::to_string(author));

      EXPECT_EQ(doc.selected_text(sel),
                testing::encode(oracle.text.substr(sel.start, sel.size())));

      const StoryDocument next =
          doc.replace_range(sel, testing::encode(insert), provenance);
      oracle.splice(sel, insert, provenance);

      ASSERT_EQ(next.full_text(), oracle.utf8());
      ASSERT_EQ(owners_of(next), oracle.owners);
      ASSERT_EQ(next.version(), doc.version() + 1);

      std::size_t total = 0;
      for (std::size_t i = 0; i < next.spans().size(); ++i) {
        const Span& span = next.spans()[i];
        ASSERT_GE(span.length(), 1u);
        ASSERT_EQ(span.length(), utf8::length(span.text()));
        total += span.length();
        if (i > 0) {
          ASSERT_NE(span.provenance(), next.spans()[i - 1].provenance());
        }
      }
      ASSERT_EQ(total, next.length());
      ASSERT_EQ(canonicalize(next.spans()), next.spans());
      doc = next;
    }
  }
}

}  // namespace
}  // namespace storyweave
