#pragma once

// HTTP/JSON binding of AnnotationStore. Request and response schemas are
// documented in docs/api.md.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "revq/annotation/service.hpp"
#include "revq/annotations.hpp"
#include "revq/error.hpp"

namespace revq::annotation {

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::UnknownAnnotator:
    case ErrorCode::EmptyVideoSet:
    case ErrorCode::OffGridScore:
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError: return 400;
    case ErrorCode::OutOfOrder:
    case ErrorCode::SessionNotRating: return 409;
    default: return 500;
  }
}

inline void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, const Error& e) {
  send_json(res, http_status(e.code()), {{"error", std::string(to_string(e.code()))}, {"message", e.what()}});
}

inline std::string mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".mp4") return "video/mp4";
  if (ext == ".webm") return "video/webm";
  if (ext == ".y4m") return "video/x-yuv4mpeg";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

inline nlohmann::ordered_json session_json(const Session& s) {
  nlohmann::ordered_json j;
  j["session_id"] = s.id;
  j["annotator_id"] = s.annotator_id;
  j["kind"] = std::string(to_string(s.kind));
  j["state"] = std::string(to_string(s.state));
  j["cursor"] = s.cursor;
  j["total"] = s.playlist.size();
  j["round"] = s.round();
  j["rounds"] = s.round_count();
  j["round_length"] = s.round_length;
  if (s.state == SessionState::resting) j["unlock_at"] = s.unlock_at;
  j["gold_failed"] = s.gold_failed;
  return j;
}

/// Registers every endpoint on `server`. Handlers serialize through the store.
inline void register_routes(httplib::Server& server, AnnotationStore& store) {
  using httplib::Request;
  using httplib::Response;

  auto guarded = [](auto fn) {
    return [fn](const Request& req, Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const nlohmann::json::exception& e) {
        send_json(res, 400, {{"error", "ParseError"}, {"message", e.what()}});
      }
    };
  };

  server.Get("/health", [](const Request&, Response& res) { send_json(res, 200, {{"status", "ok"}}); });

  server.Post("/sessions", guarded([&store](const Request& req, Response& res) {
                const auto body = nlohmann::json::parse(req.body);
                const auto kind = session_kind_from_string(body.at("kind").get<std::string>());
                require(kind.has_value(), ErrorCode::InvalidArgument, "kind must be s720p, s1080p or s2k");
                const Session s = store.create_session(body.at("annotator_id").get<std::string>(), *kind,
                                                       body.value("seed", std::uint64_t{0}));
                send_json(res, 201, session_json(s));
              }));

  server.Post(R"(/sessions/([^/]+)/start)", guarded([&store](const Request& req, Response& res) {
                send_json(res, 200, session_json(store.start_rating(req.matches[1])));
              }));

  server.Get(R"(/sessions/([^/]+)/next)", guarded([&store](const Request& req, Response& res) {
               const Session s = store.session(req.matches[1]);
               auto j = session_json(s);
               if (s.state != SessionState::done && s.cursor < s.playlist.size()) {
                 const auto& item = s.playlist[s.cursor];
                 j["presentation_id"] = item.presentation_id;
                 j["video_id"] = item.source_video;
                 j["stream_url"] = "/videos/" + item.source_video;
               }
               send_json(res, 200, j);
             }));

  server.Post(R"(/sessions/([^/]+)/ratings)", guarded([&store](const Request& req, Response& res) {
                const auto body = nlohmann::json::parse(req.body);
                RatingSubmission sub;
                sub.presentation_id = body.at("presentation_id").get<std::string>();
                sub.oa_score = body.at("oa_score").get<double>();
                sub.ts_score = body.at("ts_score").get<double>();
                sub.client_timestamp = body.at("client_timestamp").get<double>();
                sub.replay_count = body.value("replay_count", 0);
                const Ack ack = store.submit_rating(req.matches[1], sub);
                nlohmann::ordered_json j;
                j["accepted"] = true;
                j["cursor"] = ack.cursor;
                j["state"] = std::string(to_string(ack.state));
                if (ack.state == SessionState::resting) j["unlock_at"] = ack.unlock_at;
                j["gold_failed"] = ack.gold_failed;
                send_json(res, 200, j);
              }));

  server.Get(R"(/videos/([^/]+))", guarded([&store](const Request& req, Response& res) {
               const std::string id = req.matches[1];
               const auto& files = store.config().video_files;
               const auto it = files.find(id);
               if (it == files.end()) {
                 send_json(res, 404, {{"error", "NotFound"}, {"message", "unknown video '" + id + "'"}});
                 return;
               }
               std::ifstream in(it->second, std::ios::binary);
               require(static_cast<bool>(in), ErrorCode::IoError, "cannot read video " + id);
               std::ostringstream bytes;
               bytes << in.rdbuf();
               res.set_header("Accept-Ranges", "bytes");
               res.set_content(bytes.str(), mime_type(it->second));  // Range headers are applied by the server
             }));

  server.Get("/export", guarded([&store](const Request& req, Response& res) {
               std::optional<SessionKind> kind;
               if (req.has_param("kind")) {
                 kind = session_kind_from_string(req.get_param_value("kind"));
                 require(kind.has_value(), ErrorCode::InvalidArgument, "unknown kind");
               }
               std::ostringstream out;
               write_ratings_csv(out, store.export_ratings(kind));
               res.set_content(out.str(), "text/csv");
             }));

  server.Get("/export/repeats", guarded([&store](const Request&, Response& res) {
               std::ostringstream out;
               out << "video_id,repeat_video_id\n";
               for (const auto& [a, b] : store.repeat_pairs()) out << csv::escape(a) << ',' << csv::escape(b) << '\n';
               res.set_content(out.str(), "text/csv");
             }));

  server.Get("/export/gold", guarded([&store](const Request&, Response& res) {
               std::ostringstream out;
               out << "video_id,oa,ts\n";
               for (const auto& [id, g] : store.config().gold) {
                 out << csv::escape(id) << ',' << csv::format_double(g.oa) << ',' << csv::format_double(g.ts) << '\n';
               }
               res.set_content(out.str(), "text/csv");
             }));
}

}  // namespace revq::annotation
