// Copyright 2026 The xaimos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xaimos/http_service.hpp"

#include <algorithm>

#include "xaimos/raster_io.hpp"

// After Eigen: the resolver header pulled in here defines a _res macro.
#include <httplib.h>

namespace xaimos {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("body must be a JSON object");
  return j;
}

ParticipantId path_id(const httplib::Request& req) { return std::stoll(req.matches[1].str()); }

std::string content_type_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const NotFoundError& e) {
      reply(res, 404, {{"error", e.what()}});
    } catch (const ValidationError& e) {
      reply(res, 409, {{"error", e.what()}});
    } catch (const json::exception& e) {
      reply(res, 400, {{"error", e.what()}});
    } catch (const std::invalid_argument& e) {
      reply(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}});
    }
  };
}

}  // namespace

HttpService::HttpService(SessionService& service, HttpOptions options)
    : service_(service), options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpService::~HttpService() { stop(); }

void HttpService::install_routes() {
  auto& s = *server_;

  s.Post("/participants", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    const auto reg = service_.register_participant(
        parse_group(body.at("group").get<std::string>()), body.at("age").get<int>(),
        body.at("ishihara_pass").get<bool>());
    json out = {{"participant_id", reg.participant_id}, {"eligible", reg.eligible}};
    if (!reg.eligible) out["reason"] = reg.reason;
    reply(res, 201, out);
  }));

  s.Post(R"(/sessions/(\d+)/begin)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto body = parse_body(req);
           const int idx = body.value("session_index", 0);
           reply(res, 200, to_json(service_.begin_session(path_id(req), idx)));
         }));

  s.Get(R"(/sessions/(\d+)/current)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          reply(res, 200, to_json(service_.next_stimulus(path_id(req))));
        }));

  s.Post(R"(/sessions/(\d+)/rating)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto body = parse_body(req);
           RatingSubmission sub;
           sub.participant_id = path_id(req);
           sub.stimulus_id = body.at("stimulus_id").get<StimulusId>();
           const auto& lk = body.at("likert");
           sub.likert = lk.is_string() ? static_cast<int>(parse_likert(lk.get<std::string>()))
                                       : lk.get<int>();
           sub.client_elapsed_ms = body.value("client_elapsed_ms", std::int64_t{0});
           const auto ack = service_.submit_rating(sub);
           reply(res, ack.accepted() ? 200 : 409,
                 {{"accepted", ack.accepted()}, {"outcome", std::string(to_string(ack.outcome))}});
         }));

  s.Post(R"(/sessions/(\d+)/interrupt)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto state = service_.interrupt_session(path_id(req));
           reply(res, state.pause_pending ? 202 : 200, to_json(state));
         }));

  s.Post(R"(/sessions/(\d+)/resume)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           reply(res, 200, to_json(service_.resume_session(path_id(req))));
         }));

  s.Get("/export", guarded([this](const httplib::Request&, httplib::Response& res) {
    const auto ds = service_.export_dataset();
    reply(res, 200,
          {{"participants_csv", participants_csv(ds)},
           {"stimuli_csv", stimuli_csv(ds)},
           {"scores_csv", scores_csv(ds)}});
  }));

  s.Get("/likert", guarded([](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& l : kLikertScale) {
      out.push_back({{"label", std::string(l.label)}, {"value", l.value}});
    }
    reply(res, 200, out);
  }));

  s.Get(R"(/stimuli/(\d+)/(image|overlay))",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          const auto id = std::stoll(req.matches[1].str());
          const auto& stimuli = service_.study().stimuli;
          const auto it = std::find_if(stimuli.begin(), stimuli.end(),
                                       [&](const StimulusRecord& r) { return r.stimulus_id == id; });
          if (it == stimuli.end()) throw NotFoundError("unknown stimulus " + std::to_string(id));
          const auto& rec = *it;
          const std::filesystem::path rel =
              req.matches[2].str() == "image" ? rec.image_path : rec.overlay_path;
          const auto full = rel.is_absolute() ? rel : options_.study_root / rel;
          if (!std::filesystem::exists(full)) {
            throw NotFoundError("missing file " + rel.string());
          }
          const auto bytes = raster_io::read_bytes(full);
          res.status = 200;
          res.set_content(std::string(bytes.begin(), bytes.end()), content_type_for(full));
        }));

  if (options_.static_dir) {
    if (!s.set_mount_point("/", options_.static_dir->string())) {
      throw IoError("static asset directory not found: " + options_.static_dir->string());
    }
  }
}

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = server_->bind_to_any_port(host);
    if (p < 0) throw IoError("cannot bind " + host);
    return p;
  }
  if (!server_->bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpService::serve() { server_->listen_after_bind(); }

void HttpService::stop() {
  if (server_) server_->stop();
}

bool HttpService::running() const { return server_->is_running(); }

}  // namespace xaimos
