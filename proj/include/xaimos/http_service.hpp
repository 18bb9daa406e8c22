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

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "xaimos/session.hpp"

namespace httplib {
class Server;
}

namespace xaimos {

struct HttpOptions {
  // Root against which stimulus image/overlay paths are resolved.
  std::filesystem::path study_root;
  // Static asset bundle for the rating client, mounted at "/".
  std::optional<std::filesystem::path> static_dir;
};

// JSON-over-HTTP front end for SessionService.
//   POST /participants             {group, age, ishihara_pass}
//   POST /sessions/{pid}/begin     {session_index}
//   GET  /sessions/{pid}/current
//   POST /sessions/{pid}/rating    {stimulus_id, likert, client_elapsed_ms}
//   POST /sessions/{pid}/interrupt
//   POST /sessions/{pid}/resume
//   GET  /export                   {participants_csv, stimuli_csv, scores_csv}
//   GET  /likert                   label/value table
//   GET  /stimuli/{sid}/image|overlay
class HttpService {
 public:
  HttpService(SessionService& service, HttpOptions options = {});
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Returns the bound port; port 0 picks a free one.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void serve();
  void stop();
  bool running() const;

 private:
  void install_routes();

  SessionService& service_;
  HttpOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace xaimos
