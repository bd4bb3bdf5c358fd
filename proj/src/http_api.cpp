#include "storyweave/http_api.hpp"

#include <functional>

#include <httplib.h>

#include "storyweave/json_io.hpp"

namespace storyweave {

using nlohmann::json;

int http_status(Errc code) {
  switch (code) {
    case Errc::invalid_argument:
    case Errc::range:
    case Errc::parse:
    case Errc::binding:
      return 400;
    case Errc::precondition:
      return 422;
    case Errc::not_found:
      return 404;
    case Errc::conflict:
    case Errc::stale_request:
    case Errc::request_consumed:
      return 409;
    case Errc::prompt_too_long:
      return 413;
    case Errc::backend_protocol:
      return 502;
    case Errc::backend_timeout:
      return 504;
    case Errc::cancelled:
      return 499;
    case Errc::integrity:
      return 500;
  }
  return 500;
}

json error_body(const Error& error) {
  json body = {{"code", errc_name(error.code())}, {"message", error.what()}};
  if (const auto version = error.current_version()) {
    body["current_version"] = *version;
  }
  return {{"error", std::move(body)}};
}

json session_summary(const Session& session) {
  return {{"session_id", session.session_id},
          {"version", session.doc.version()},
          {"created_at", session.created_at},
          {"updated_at", session.updated_at},
          {"backend", session.backend},
          {"params", session.params},
          {"document", annotated_export(session.doc)},
          {"record_count", session.records.size()}};
}

namespace {

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

Handler guarded(Handler handler) {
  return [handler = std::move(handler)](const httplib::Request& req,
                                        httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      send_json(res, http_status(e.code()), error_body(e));
    } catch (const json::exception& e) {
      send_json(res, 400,
                error_body(Error(Errc::invalid_argument,
                                 std::string("bad request body: ") + e.what())));
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", {{"code", "internal"}, {"message", e.what()}}}});
    }
  };
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body);
  if (!body.is_object()) {
    throw Error(Errc::invalid_argument, "request body must be a JSON object");
  }
  return body;
}

template <typename T>
std::optional<T> optional_field(const json& body, const char* key) {
  if (!body.contains(key) || body[key].is_null()) return std::nullopt;
  return body[key].get<T>();
}

std::optional<Selection> selection_field(const json& body) {
  const auto start = optional_field<std::size_t>(body, "start");
  const auto end = optional_field<std::size_t>(body, "end");
  if (!start && !end) return std::nullopt;
  if (!start || !end) {
    throw Error(Errc::invalid_argument,
                "a selection needs both 'start' and 'end'");
  }
  return Selection{*start, *end};
}

constexpr const char* kId = "([A-Za-z0-9_-]+)";

std::string route(const char* suffix) {
  return std::string("/sessions/") + kId + suffix;
}

}  // namespace

void mount_routes(httplib::Server& server, SessionService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Post("/sessions", guarded([&service](const httplib::Request& req,
                                               httplib::Response& res) {
    const json body = parse_body(req);
    std::optional<GenerationParams> params;
    if (body.contains("params")) {
      params = params_from_json(body["params"],
                                service.config().default_params);
    }
    const Session session = service.create_session(
        optional_field<std::string>(body, "backend"), params);
    send_json(res, 201, session_summary(session));
  }));

  server.Get(route(""), guarded([&service](const httplib::Request& req,
                                           httplib::Response& res) {
    send_json(res, 200, session_summary(service.get_session(req.matches[1])));
  }));

  server.Post(route("/edit"), guarded([&service](const httplib::Request& req,
                                                 httplib::Response& res) {
    const json body = parse_body(req);
    const Selection sel{body.at("start").get<std::size_t>(),
                        body.at("end").get<std::size_t>()};
    const std::uint64_t version =
        service.edit(req.matches[1], sel, body.at("text").get<std::string>(),
                     body.at("base_version").get<std::uint64_t>());
    send_json(res, 200, {{"version", version}});
  }));

  server.Post(route("/suggest"), guarded([&service](const httplib::Request& req,
                                                    httplib::Response& res) {
    const json body = parse_body(req);
    TaskOptions options;
    options.n_words = optional_field<int>(body, "n_words");
    options.tone = optional_field<std::string>(body, "tone");
    options.instruction = optional_field<std::string>(body, "instruction");
    const Suggestion suggestion = service.suggest(
        req.matches[1], parse_task(body.at("kind").get<std::string>()),
        selection_field(body), options);
    json candidates = json::array();
    for (std::size_t i = 0; i < suggestion.candidates.size(); ++i) {
      json candidate = suggestion.candidates[i];
      candidate["index"] = i;
      candidates.push_back(std::move(candidate));
    }
    send_json(res, 200,
              {{"request_id", suggestion.request_id},
               {"candidates", std::move(candidates)}});
  }));

  server.Post(route("/accept"), guarded([&service](const httplib::Request& req,
                                                   httplib::Response& res) {
    const json body = parse_body(req);
    const std::uint64_t version = service.accept(
        req.matches[1], body.at("request_id").get<std::string>(),
        body.at("candidate_index").get<std::size_t>(),
        body.at("base_version").get<std::uint64_t>());
    send_json(res, 200, {{"version", version}});
  }));

  server.Get(route("/export"), guarded([&service](const httplib::Request& req,
                                                  httplib::Response& res) {
    const std::string name =
        req.has_param("format") ? req.get_param_value("format") : "plain";
    const ExportFormat format = parse_export_format(name);
    const std::string body = service.export_story(req.matches[1], format);
    res.status = 200;
    res.set_content(body, format == ExportFormat::plain
                              ? "text/plain; charset=utf-8"
                              : "application/json");
  }));

  server.Get(route("/log"), guarded([&service](const httplib::Request& req,
                                               httplib::Response& res) {
    send_json(res, 200, {{"records", service.log(req.matches[1])}});
  }));
}

}  // namespace storyweave
