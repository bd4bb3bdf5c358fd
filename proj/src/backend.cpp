#include "storyweave/backend.hpp"

#include <array>
#include <cctype>
#include <regex>

#include <httplib.h>

#include "storyweave/error.hpp"
#include "storyweave/utf8.hpp"

namespace storyweave {

using nlohmann::json;

void GenerationParams::validate() const {
  const auto positive = [](int value, const char* name) {
    if (value < 1) {
      throw Error(Errc::invalid_argument,
                  std::string(name) + " must be at least 1, got " +
                      std::to_string(value));
    }
  };
  positive(top_k, "top_k");
  positive(num_candidates, "num_candidates");
  positive(max_response_chars, "max_response_chars");
  positive(timeout_ms, "timeout_ms");
}

std::string_view format_name(WireFormat format) {
  return format == WireFormat::dialog ? "dialog" : "flat";
}

WireFormat parse_format(std::string_view name) {
  if (name == "dialog") return WireFormat::dialog;
  if (name == "flat") return WireFormat::flat;
  throw Error(Errc::invalid_argument,
              "unknown wire format '" + std::string(name) + "'");
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t hash = seed;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

json serialize_wire(const PromptRequest& req, WireFormat format,
                    const GenerationParams& params) {
  json payload;
  payload["format"] = format_name(format);
  if (format == WireFormat::dialog) {
    json turns = json::array();
    for (const auto& turn : req.context.turns) {
      turns.push_back({{"role", role_name(turn.role)}, {"text", turn.text}});
    }
    payload["turns"] = std::move(turns);
  } else {
    payload["prompt"] = req.flat_prompt;
  }
  payload["top_k"] = params.top_k;
  payload["num_candidates"] = params.num_candidates;
  payload["max_response_chars"] = params.max_response_chars;
  return payload;
}

WirePayload parse_wire(const json& payload) {
  try {
    WirePayload out;
    out.format = parse_format(payload.at("format").get<std::string>());
    if (out.format == WireFormat::dialog) {
      for (const auto& turn : payload.at("turns")) {
        out.turns.push_back({parse_role(turn.at("role").get<std::string>()),
                             turn.at("text").get<std::string>()});
      }
    } else {
      out.prompt = payload.at("prompt").get<std::string>();
    }
    out.top_k = payload.at("top_k").get<int>();
    out.num_candidates = payload.at("num_candidates").get<int>();
    out.max_response_chars = payload.at("max_response_chars").get<int>();
    return out;
  } catch (const json::exception& e) {
    throw Error(Errc::backend_protocol,
                std::string("malformed generation payload: ") + e.what());
  } catch (const Error& e) {
    throw Error(Errc::backend_protocol,
                std::string("malformed generation payload: ") + e.what());
  }
}

std::vector<std::string> parse_wire_response(int status,
                                             std::string_view body) {
  const json parsed = json::parse(body, nullptr, /*allow_exceptions=*/false);

  std::string message(body);
  std::string code;
  if (parsed.is_object() && parsed.contains("error")) {
    const json& error = parsed["error"];
    if (error.is_string()) {
      message = error.get<std::string>();
    } else if (error.is_object()) {
      message = error.value("message", message);
      code = error.value("code", "");
    }
  }
  if (status == 413 || code == "prompt_too_long") {
    throw Error(Errc::prompt_too_long, message);
  }
  if (status < 200 || status >= 300 || !code.empty() ||
      (parsed.is_object() && parsed.contains("error"))) {
    throw Error(Errc::backend_protocol, "backend returned HTTP " +
                                            std::to_string(status) + ": " +
                                            message);
  }

  if (parsed.is_discarded() || !parsed.is_object() ||
      !parsed.contains("candidates") || !parsed["candidates"].is_array()) {
    throw Error(Errc::backend_protocol,
                "malformed backend response: expected {\"candidates\": [...]}");
  }
  std::vector<std::string> out;
  for (const auto& item : parsed["candidates"]) {
    if (!item.is_string()) {
      throw Error(Errc::backend_protocol,
                  "malformed backend response: candidates must be strings");
    }
    out.push_back(item.get<std::string>());
  }
  if (out.empty()) {
    throw Error(Errc::backend_protocol, "backend returned no candidates");
  }
  return out;
}

namespace {

std::string truncate_chars(std::string text, int max_chars) {
  const auto limit = static_cast<std::size_t>(max_chars);
  if (utf8::length(text) > limit) {
    text.resize(utf8::byte_offset(text, limit));
  }
  return text;
}

std::vector<std::string> content_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  const auto flush = [&] {
    if (current.size() >= 4) words.push_back(current);
    current.clear();
  };
  for (const char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  return words;
}

constexpr std::array<std::string_view, 8> kSentenceFrames = {
    "The {w} stirred in the dark, and for a moment nobody moved.",
    "A cold wind carried the smell of {w} across the path.",
    "Somewhere beyond the trees, the {w} was waiting.",
    "He thought about the {w} and smiled for the first time in years.",
    "Nothing about the {w} was quite what it seemed.",
    "By morning the {w} had vanished without a trace.",
    "The silence around the {w} grew heavier with every step.",
    "Light spilled over the {w} like water from a broken jar.",
};

constexpr std::array<std::string_view, 8> kPhraseFrames = {
    "a {w} appeared from the shadows",
    "the {w} began to glow",
    "someone whispered about the {w}",
    "a quiet {w} drifted closer",
    "the old {w} fell silent",
    "a distant {w} called out",
    "every {w} turned to look",
    "the {w} shimmered and faded",
};

constexpr std::array<std::string_view, 4> kRewriteFrames = {
    "In a {t} telling, the {w} takes center stage and everything else "
    "falls away.",
    "Made more {t}, the scene lingers on the {w} a little longer.",
    "The {w} is still there, but now the whole moment feels {t}.",
    "Everything about the {w} becomes {t}, down to the last detail.",
};

std::string fill(std::string_view frame, std::string_view word,
                 std::string_view tone) {
  std::string out;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.substr(i, 3) == "{w}") {
      out += word;
      i += 2;
    } else if (frame.substr(i, 3) == "{t}") {
      out += tone;
      i += 2;
    } else {
      out += frame[i];
    }
  }
  return out;
}

}  // namespace

MockBackend::MockBackend(BackendDescriptor descriptor)
    : descriptor_(std::move(descriptor)) {}

std::vector<Candidate> MockBackend::generate(const PromptRequest& req,
                                             const GenerationParams& params,
                                             std::stop_token stop) {
  params.validate();
  if (stop.stop_requested()) {
    throw Error(Errc::cancelled, "generation cancelled");
  }
  const std::string prompt = serialize_wire(req, descriptor_.format).dump();
  const std::uint64_t seed = params.seed.value_or(0);
  const std::uint64_t base = fnv1a(std::to_string(seed), fnv1a(prompt));

  std::string_view source = req.story();
  if (req.kind == TaskKind::elaborate) {
    if (const auto it = req.binding.find(kSlotSelection);
        it != req.binding.end()) {
      source = it->second;
    }
  }
  std::vector<std::string> words = content_words(source);
  if (words.empty()) words.push_back("night");
  const std::string tone = req.tone.value_or("vivid");

  std::vector<Candidate> out;
  for (int i = 0; i < params.num_candidates; ++i) {
    const std::uint64_t h = fnv1a(std::to_string(i), base);
    const std::string& word = words[h % words.size()];
    std::string text;
    const auto pick = [&](const auto& frames) {
      const std::size_t n = frames.size();
      return frames[(base + static_cast<std::uint64_t>(i)) % n];
    };
    std::size_t cycle = 0;
    switch (req.kind) {
      case TaskKind::infill:
        text = fill(pick(kPhraseFrames), word, tone);
        cycle = static_cast<std::size_t>(i) / kPhraseFrames.size();
        break;
      case TaskKind::rewrite:
        text = fill(pick(kRewriteFrames), word, tone);
        cycle = static_cast<std::size_t>(i) / kRewriteFrames.size();
        break;
      default:
        text = fill(pick(kSentenceFrames), word, tone);
        cycle = static_cast<std::size_t>(i) / kSentenceFrames.size();
        break;
    }
    // Frames repeat after one full cycle; keep later candidates distinct.
    if (cycle > 0) text += " (take " + std::to_string(cycle + 1) + ")";
    out.push_back(Candidate::raw(truncate_chars(std::move(text),
                                                params.max_response_chars),
                                 descriptor_.id));
  }
  return out;
}

HttpBackend::HttpBackend(BackendDescriptor descriptor)
    : descriptor_(std::move(descriptor)) {
  static const std::regex kUrl(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch match;
  if (!std::regex_match(descriptor_.endpoint, match, kUrl)) {
    throw Error(Errc::invalid_argument,
                "backend endpoint must be an http:// URL or \"mock\", got '" +
                    descriptor_.endpoint + "'");
  }
  origin_ = match[1].str();
  path_ = match[2].matched ? match[2].str() : "/";
}

std::vector<Candidate> HttpBackend::generate(const PromptRequest& req,
                                             const GenerationParams& params,
                                             std::stop_token stop) {
  params.validate();
  const std::string body =
      serialize_wire(req, descriptor_.format, params).dump();

  httplib::Client client(origin_);
  const auto timeout = std::chrono::milliseconds(params.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  std::stop_callback on_stop(stop, [&client] { client.stop(); });
  if (stop.stop_requested()) {
    throw Error(Errc::cancelled, "generation cancelled");
  }
  const httplib::Result result = client.Post(path_, body, "application/json");
  if (stop.stop_requested()) {
    throw Error(Errc::cancelled, "generation cancelled");
  }
  if (!result) {
    throw Error(Errc::backend_timeout,
                "backend " + descriptor_.id + " at " + descriptor_.endpoint +
                    " did not answer within " +
                    std::to_string(params.timeout_ms) +
                    " ms: " + httplib::to_string(result.error()));
  }

  std::vector<std::string> texts =
      parse_wire_response(result->status, result->body);
  if (texts.size() > static_cast<std::size_t>(params.num_candidates)) {
    texts.resize(static_cast<std::size_t>(params.num_candidates));
  }
  std::vector<Candidate> out;
  out.reserve(texts.size());
  for (auto& text : texts) {
    if (!utf8::is_valid(text)) {
      throw Error(Errc::backend_protocol, "backend returned invalid UTF-8");
    }
    out.push_back(Candidate::raw(
        truncate_chars(std::move(text), params.max_response_chars),
        descriptor_.id));
  }
  return out;
}

std::unique_ptr<Backend> make_backend(BackendDescriptor descriptor) {
  if (descriptor.is_mock()) {
    return std::make_unique<MockBackend>(std::move(descriptor));
  }
  return std::make_unique<HttpBackend>(std::move(descriptor));
}

std::vector<Candidate> generate(const PromptRequest& req,
                                const GenerationParams& params,
                                const BackendDescriptor& backend) {
  return make_backend(backend)->generate(req, params);
}

}  // namespace storyweave
