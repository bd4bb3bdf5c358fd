#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "storyweave/prompt.hpp"
#include "test_support.hpp"

namespace storyweave {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string shipped(const std::string& name) {
  return std::string(STORYWEAVE_TEMPLATE_DIR) + "/" + name + ".tmpl";
}

TEST(LoadTemplate, ShippedInfillHasStagedExamples) {
  const TaskTemplate tmpl = load_template_file(shipped("infill"));
  EXPECT_EQ(tmpl.name, "infill");
  EXPECT_FALSE(tmpl.staged_context.empty());
  EXPECT_EQ(tmpl.required_slots,
            (std::set<std::string, std::less<>>{"N_WORDS", "STORY"}));
  EXPECT_EQ(tmpl.staged_context.size() % 2, 0u);
  EXPECT_EQ(tmpl.staged_context.back().role, Role::assistant);
}

TEST(LoadTemplate, ShippedContinuationHasNoStagedExamples) {
  const TaskTemplate tmpl = load_template_file(shipped("continuation"));
  EXPECT_TRUE(tmpl.staged_context.empty());
  EXPECT_EQ(tmpl.required_slots,
            (std::set<std::string, std::less<>>{"STORY"}));
  ASSERT_TRUE(tmpl.flat_pattern.has_value());
  EXPECT_EQ(*tmpl.flat_pattern, "{STORY}");
}

TEST(LoadTemplate, TurnBodiesKeepInteriorNewlines) {
  const TaskTemplate tmpl = load_template(
      "# comment\n"
      "WRITER:\n"
      "line one\n"
      "  line two  \n"
      "\n"
      "ASSISTANT: inline answer\n"
      "FINAL:\n"
      "Here is some text: {STORY}\n"
      "Please rewrite it to be more {TONE}.\n",
      "t");
  ASSERT_EQ(tmpl.staged_context.size(), 2u);
  EXPECT_EQ(tmpl.staged_context[0].text, "line one\n  line two  \n");
  EXPECT_EQ(tmpl.staged_context[1].text, "inline answer");
  EXPECT_EQ(tmpl.final_turn_pattern,
            "Here is some text: {STORY}\nPlease rewrite it to be more {TONE}.");
}

TEST(LoadTemplate, ConsecutiveWriterTurnsFail) {
  try {
    load_template("WRITER:\na\nWRITER:\nb\nASSISTANT:\nc\nFINAL:\n{STORY}\n",
                  "bad");
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos)
        << e.what();
  }
}

TEST(LoadTemplate, RejectsMalformedInput) {
  EXPECT_ERRC(load_template("FINAL:\nHello {NAME}\n", "t"), Errc::parse);
  EXPECT_ERRC(load_template("WRITER\nhi\nFINAL:\nx\n", "t"), Errc::parse);
  EXPECT_ERRC(load_template("WRITER:\nhi\n", "t"), Errc::parse);
  EXPECT_ERRC(load_template("stray text\nFINAL:\nx\n", "t"), Errc::parse);
  EXPECT_ERRC(load_template("WRITER:\nhi\nFINAL:\nx\n", "t"), Errc::parse);
  EXPECT_ERRC(load_template("ASSISTANT:\nhi\nFINAL:\nx\n", "t"), Errc::parse);
  EXPECT_ERRC(load_template("WRITER:\nASSISTANT:\nhi\nFINAL:\nx\n", "t"),
              Errc::parse);
  EXPECT_ERRC(load_template("FINAL:\nx\nWRITER:\nhi\n", "t"), Errc::parse);
  EXPECT_ERRC(load_template("FINAL:\n{STORY}\nFLAT:\n{TONE}\n", "t"),
              Errc::parse);
  EXPECT_ERRC(load_template("FINAL:\n", "t"), Errc::parse);
}

TEST(LoadTemplate, OrdinaryWordsThatStartLikeMarkersAreText) {
  const TaskTemplate tmpl =
      load_template("WRITER:\nWRITERS write.\nASSISTANT:\nFINALLY done.\n"
                    "FINAL:\nx {STORY}\n",
                    "t");
  EXPECT_EQ(tmpl.staged_context[0].text, "WRITERS write.");
  EXPECT_EQ(tmpl.staged_context[1].text, "FINALLY done.");
}

TEST(RenderFinalTurn, ContinuationMatchesQuotedPrompt) {
  const TaskTemplate tmpl = load_template_file(shipped("continuation"));
  const Turn turn =
      render_final_turn(tmpl, {{"STORY", testing::kElderlyMan}});
  EXPECT_EQ(turn.role, Role::writer);
  EXPECT_EQ(turn.text,
            "Here is my story so far: `An elderly man was sitting alone on a "
            "dark path.'. Give me the next sentence.");
}

TEST(RenderFinalTurn, InfillMatchesQuotedPrompt) {
  const TaskTemplate tmpl = load_template_file(shipped("infill"));
  const Turn turn = render_final_turn(
      tmpl, {{"STORY",
              "An elderly man was sitting alone on a dark path. Suddenly "
              "______ . It was beautiful."},
             {"N_WORDS", "4"}});
  EXPECT_EQ(turn.text,
            "Here's another story: `An elderly man was sitting alone on a dark "
            "path. Suddenly ______ . It was beautiful.' Fill in the blank with "
            "4 words.");
}

TEST(RenderFinalTurn, NoPlaceholdersIsIdentity) {
  const TaskTemplate tmpl = load_template("FINAL:\nJust this.\n", "t");
  EXPECT_EQ(render_final_turn(tmpl, {}).text, "Just this.");
}

TEST(RenderFinalTurn, BindingMismatchNamesSlots) {
  const TaskTemplate tmpl = load_template_file(shipped("infill"));
  try {
    render_final_turn(tmpl, {{"STORY", "x"}, {"TONE", "sad"}});
    FAIL() << "expected a binding error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::binding);
    const std::string what = e.what();
    EXPECT_NE(what.find("N_WORDS"), std::string::npos) << what;
    EXPECT_NE(what.find("TONE"), std::string::npos) << what;
  }
}

TEST(RenderFinalTurn, SubstitutionIsSinglePassAndLiteral) {
  const TaskTemplate tmpl = load_template("FINAL:\n[{STORY}] {TONE}\n", "t");
  const Turn turn =
      render_final_turn(tmpl, {{"STORY", "{TONE} `quoted'"}, {"TONE", "sad"}});
  EXPECT_EQ(turn.text, "[{TONE} `quoted'] sad");
}

TEST(AssembleDialogPrompt, AppendsFinalTurn) {
  const TaskTemplate tmpl = load_template(
      "WRITER:\na\nASSISTANT:\nb\nWRITER:\nc\nASSISTANT:\nd\nFINAL:\n{STORY}\n",
      "t");
  const Turn final_turn = render_final_turn(tmpl, {{"STORY", "e"}});
  const ConversationContext context = assemble_dialog_prompt(tmpl, final_turn);
  ASSERT_EQ(context.turns.size(), 5u);
  EXPECT_EQ(context.turns.back(), final_turn);
  EXPECT_TRUE(std::equal(tmpl.staged_context.begin(),
                         tmpl.staged_context.end(), context.turns.begin()));
  EXPECT_EQ(assemble_dialog_prompt(tmpl, final_turn), context);
}

TEST(AssembleDialogPrompt, ContinuationIsSingleTurn) {
  const TaskTemplate tmpl = load_template_file(shipped("continuation"));
  const ConversationContext context = assemble_dialog_prompt(
      tmpl, render_final_turn(tmpl, {{"STORY", testing::kElderlyMan}}));
  EXPECT_EQ(context.turns.size(), 1u);
}

TEST(AssembleDialogPrompt, RejectsAssistantFinalTurn) {
  const TaskTemplate tmpl = load_template("FINAL:\nx\n", "t");
  EXPECT_ERRC(assemble_dialog_prompt(tmpl, {Role::assistant, "x"}),
              Errc::invalid_argument);
}

TEST(SerializeFlat, ContinuationIsRawStory) {
  const TaskTemplate tmpl = load_template_file(shipped("continuation"));
  EXPECT_EQ(serialize_flat(tmpl, {{"STORY", testing::kElderlyMan}}),
            testing::kElderlyMan);
}

TEST(SerializeFlat, InfillHasOneLinePerTurnPlusFinal) {
  // Count staged pairs straight from the file text.
  const std::string source = read_file(shipped("infill"));
  std::size_t writers = 0;
  std::istringstream lines(source);
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind("WRITER:", 0) == 0) ++writers;
  }
  ASSERT_GE(writers, 1u);

  const TaskTemplate tmpl = load_template_file(shipped("infill"));
  const std::string flat =
      serialize_flat(tmpl, {{"STORY", "A ______ b."}, {"N_WORDS", "2"}});
  const auto line_count =
      static_cast<std::size_t>(std::count(flat.begin(), flat.end(), '\n')) + 1;
  EXPECT_EQ(line_count, 2 * writers + 1);
  EXPECT_TRUE(flat.ends_with("Fill in the blank with 2 words."));
}

TEST(SerializeFlat, DegenerateTemplate) {
  const TaskTemplate tmpl = load_template("FINAL:\nX\n", "t");
  EXPECT_EQ(serialize_flat(tmpl, {}), "X");
}

TEST(PromptProperty, StagedPrefixIsBindingIndependent) {
  const TaskTemplate tmpl = load_template_file(shipped("infill"));
  std::mt19937_64 rng(7);
  const std::string reference =
      serialize_flat(tmpl, {{"STORY", "s ______ ."}, {"N_WORDS", "1"}});
  const std::string prefix =
      reference.substr(0, reference.rfind("Here's another story"));
  for (int i = 0; i < 200; ++i) {
    const std::string story =
        testing::encode(testing::random_text(rng, 30)) + " ______ .";
    const std::string words = std::to_string(i + 1);
    const SlotBinding binding{{"STORY", story}, {"N_WORDS", words}};
    const std::string flat = serialize_flat(tmpl, binding);
    ASSERT_TRUE(flat.starts_with(prefix));
    ASSERT_EQ(flat, serialize_flat(tmpl, binding));

    const Turn turn = render_final_turn(tmpl, binding);
    ASSERT_NE(turn.text.find(story), std::string::npos);
    ASSERT_NE(turn.text.find(words), std::string::npos);
    const ConversationContext context = assemble_dialog_prompt(tmpl, turn);
    ASSERT_TRUE(std::equal(tmpl.staged_context.begin(),
                           tmpl.staged_context.end(), context.turns.begin()));
  }
}

TEST(PromptProperty, PrintThenLoadRoundTrips) {
  for (const char* name :
       {"continuation", "infill", "elaborate", "rewrite", "custom"}) {
    const TaskTemplate tmpl = load_template_file(shipped(name));
    EXPECT_EQ(load_template(print_template(tmpl), tmpl.name), tmpl) << name;
  }

  // Random bodies over an alphabet that cannot form markers or comments.
  std::mt19937_64 rng(99);
  const std::string alphabet = "abc xyz.,'`\n{}";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> pairs(0, 4);
  std::uniform_int_distribution<int> len(1, 40);
  const auto body = [&] {
    std::string out = "w";
    for (int i = len(rng); i > 0; --i) out += alphabet[pick(rng)];
    return out;
  };
  for (int trial = 0; trial < 300; ++trial) {
    TaskTemplate tmpl;
    tmpl.name = "random";
    for (int p = pairs(rng); p > 0; --p) {
      tmpl.staged_context.push_back({Role::writer, body()});
      tmpl.staged_context.push_back({Role::assistant, body()});
    }
    tmpl.final_turn_pattern = body() + "{STORY}" + body();
    tmpl.required_slots = {"STORY"};
    ASSERT_EQ(load_template(print_template(tmpl), "random"), tmpl)
        << print_template(tmpl);
  }
}

}  // namespace
}  // namespace storyweave
