#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "storyweave/json_io.hpp"
#include "storyweave/session.hpp"
#include "properties.hpp"
#include "test_support.hpp"

namespace storyweave {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::kDoeStory;
using testing::kElderlyMan;

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("storyweave-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

class FailingBackend final : public Backend {
 public:
  explicit FailingBackend(Errc code) : code_(code) {}
  const BackendDescriptor& descriptor() const override { return descriptor_; }
  std::vector<Candidate> generate(const PromptRequest&, const GenerationParams&,
                                  std::stop_token) override {
    throw Error(code_, "backend unavailable");
  }

 private:
  Errc code_;
  BackendDescriptor descriptor_{"broken", WireFormat::dialog, "mock"};
};

SessionService make_service(std::optional<fs::path> data_dir = std::nullopt,
                            std::uint64_t seed = 1) {
  ServiceConfig config;
  config.data_dir = std::move(data_dir);
  config.id_seed = seed;
  config.default_params.seed = seed;
  return SessionService(testing::shipped_tasks(),
                        PostProcessor(testing::shipped_rules()), config);
}

std::string type_story(SessionService& service, const std::string& text) {
  const Session session = service.create_session();
  service.edit(session.session_id, Selection::caret(0), text, 0);
  return session.session_id;
}

TEST(SessionService, ContinuationLifecycle) {
  SessionService service = make_service();
  const Session created = service.create_session();
  EXPECT_TRUE(created.session_id.starts_with("s-"));
  EXPECT_EQ(created.doc.version(), 0u);
  EXPECT_EQ(created.backend.id, "mock");

  EXPECT_EQ(service.edit(created.session_id, Selection::caret(0), kElderlyMan,
                         0),
            1u);
  const Suggestion suggestion = service.suggest(
      created.session_id, TaskKind::continuation, std::nullopt, {});
  ASSERT_FALSE(suggestion.candidates.empty());
  EXPECT_EQ(service.get_session(created.session_id).doc.version(), 1u);

  const auto version =
      service.accept(created.session_id, suggestion.request_id, 0, 1);
  EXPECT_EQ(version, 2u);
  const std::string plain =
      service.export_story(created.session_id, ExportFormat::plain);
  EXPECT_EQ(plain, kElderlyMan + " " + suggestion.candidates[0].text);

  const json annotated = json::parse(
      service.export_story(created.session_id, ExportFormat::annotated));
  EXPECT_EQ(annotated["text"], plain);
  ASSERT_EQ(annotated["spans"].size(), 2u);
  EXPECT_EQ(annotated["spans"][0]["kind"], "human");
  EXPECT_EQ(annotated["spans"][0]["end"], kElderlyMan.size());
  EXPECT_EQ(annotated["spans"][1]["kind"], "model");
  EXPECT_EQ(annotated["spans"][1]["request_id"], suggestion.request_id);

  const auto records = service.log(created.session_id);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].accepted_index, 0u);
  EXPECT_EQ(records[0].doc_version_before, 1u);
  EXPECT_EQ(records[0].kind, TaskKind::continuation);
}

TEST(SessionService, SeededRunsAreDeterministic) {
  const auto run = [] {
    SessionService service = make_service(std::nullopt, 99);
    const std::string id = type_story(service, kElderlyMan);
    const Suggestion s =
        service.suggest(id, TaskKind::continuation, std::nullopt, {});
    service.accept(id, s.request_id, 0, 1);
    return std::pair{id, service.export_story(id, ExportFormat::annotated)};
  };
  EXPECT_EQ(run(), run());
}

TEST(SessionService, UnknownIdsAndBackends) {
  SessionService service = make_service();
  EXPECT_ERRC(service.get_session("s-nope"), Errc::not_found);
  EXPECT_ERRC(service.create_session("gpt"), Errc::invalid_argument);
  const std::string id = type_story(service, kElderlyMan);
  EXPECT_ERRC(service.accept(id, "r-missing", 0, 1), Errc::not_found);
  EXPECT_ERRC(service.edit(id, {0, 999}, "x", 1), Errc::range);
}

TEST(SessionService, AcceptingTwiceIsConsumed) {
  SessionService service = make_service();
  const std::string id = type_story(service, kElderlyMan);
  const Suggestion s =
      service.suggest(id, TaskKind::continuation, std::nullopt, {});
  const auto version = service.accept(id, s.request_id, 0, 1);
  EXPECT_ERRC(service.accept(id, s.request_id, 1, version),
              Errc::request_consumed);
  EXPECT_ERRC(service.accept(id, s.request_id, 0, version),
              Errc::request_consumed);
}

TEST(SessionService, BadCandidateIndexAndStaleVersions) {
  SessionService service = make_service();
  const std::string id = type_story(service, kDoeStory);
  const Selection sel =
      testing::find_selection(kDoeStory, "he saw a whitetail doe");
  const Suggestion s = service.suggest(id, TaskKind::infill, sel, {.n_words = 4});
  EXPECT_ERRC(service.accept(id, s.request_id, 99, 1), Errc::range);

  // A stale base_version is a conflict carrying the current version.
  try {
    service.accept(id, s.request_id, 0, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::conflict);
    EXPECT_EQ(e.current_version(), 1u);
  }

  // The document moved on after the suggestion was made.
  service.edit(id, Selection::caret(0), "Once. ", 1);
  EXPECT_ERRC(service.accept(id, s.request_id, 0, 2), Errc::stale_request);
  EXPECT_EQ(service.get_session(id).doc.version(), 2u);
}

TEST(SessionService, FailedSuggestionsAreNotLogged) {
  SessionService service = make_service();
  service.register_backend({"broken", WireFormat::dialog, "mock"},
                           std::make_shared<FailingBackend>(Errc::backend_timeout));
  const Session session = service.create_session("broken");
  service.edit(session.session_id, Selection::caret(0), kElderlyMan, 0);
  EXPECT_ERRC(service.suggest(session.session_id, TaskKind::continuation,
                              std::nullopt, {}),
              Errc::backend_timeout);
  EXPECT_ERRC(service.suggest(session.session_id, TaskKind::infill,
                              Selection::caret(3), {}),
              Errc::precondition);
  const Session after = service.get_session(session.session_id);
  EXPECT_TRUE(after.records.empty());
  EXPECT_EQ(after.doc.version(), 1u);
}

TEST(SessionService, RacingEditsYieldOneConflict) {
  SessionService service = make_service();
  const auto failure = testing::check_edit_race(service, 100);
  EXPECT_FALSE(failure) << *failure;
}

TEST(SessionService, ConcurrentSuggestionsAllGetLogged) {
  SessionService service = make_service();
  const std::string id = type_story(service, kElderlyMan);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      service.suggest(id, TaskKind::continuation, std::nullopt, {});
    });
  }
  for (auto& t : threads) t.join();
  const auto records = service.log(id);
  ASSERT_EQ(records.size(), 8u);
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.request_id);
  EXPECT_EQ(ids.size(), 8u);
}

TEST(SessionPersistence, SaveLoadRoundTrip) {
  TempDir dir;
  std::string id;
  Session before;
  {
    SessionService service = make_service(dir.path());
    id = type_story(service, kDoeStory);
    const Suggestion s = service.suggest(
        id, TaskKind::infill,
        testing::find_selection(kDoeStory, "he saw a whitetail doe"), {});
    service.accept(id, s.request_id, 1, 1);
    service.suggest(id, TaskKind::rewrite, std::nullopt, {.tone = "grim"});
    before = service.get_session(id);
  }
  SessionService restored = make_service(dir.path(), 2);
  EXPECT_EQ(restored.load_all(), std::vector<std::string>{id});
  EXPECT_EQ(restored.get_session(id), before);

  // One line per suggest and per accept.
  std::ifstream corpus(dir.path() / "interactions.jsonl");
  std::vector<std::string> events;
  for (std::string line; std::getline(corpus, line);) {
    events.push_back(json::parse(line)["event"]);
  }
  EXPECT_EQ(events,
            (std::vector<std::string>{"suggest", "accept", "suggest"}));
}

TEST(SessionPersistence, DamagedFilesAreIntegrityErrors) {
  TempDir dir;
  std::string id;
  {
    SessionService service = make_service(dir.path());
    id = type_story(service, kElderlyMan);
    const Suggestion s =
        service.suggest(id, TaskKind::continuation, std::nullopt, {});
    service.accept(id, s.request_id, 0, 1);
  }
  const fs::path file = dir.path() / "sessions" / (id + ".json");
  ASSERT_TRUE(fs::exists(file));
  std::string contents;
  {
    std::ifstream in(file);
    contents.assign(std::istreambuf_iterator<char>(in), {});
  }

  SessionService service = make_service(dir.path());
  {
    std::ofstream out(file, std::ios::trunc);
    out << contents.substr(0, contents.size() / 2);
  }
  EXPECT_ERRC(service.load_session(id), Errc::integrity);

  // Well-formed JSON whose model span points at a request never accepted.
  json doc = json::parse(contents);
  doc["records"][0]["accepted_index"] = nullptr;
  {
    std::ofstream out(file, std::ios::trunc);
    out << doc.dump();
  }
  EXPECT_ERRC(service.load_session(id), Errc::integrity);
  EXPECT_ERRC(service.load_session("../etc"), Errc::not_found);
  EXPECT_ERRC(service.load_session("s-absent"), Errc::not_found);
}

TEST(SessionProperty, ProvenanceIsConserved) {
  SessionService service = make_service(std::nullopt, 3);
  std::mt19937_64 rng(31337);
  const auto failure = testing::check_provenance_walks(service, rng, 60, 12);
  EXPECT_FALSE(failure) << *failure;
}

}  // namespace
}  // namespace storyweave
