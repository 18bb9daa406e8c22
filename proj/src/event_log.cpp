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

#include "xaimos/event_log.hpp"

#include <sstream>

#include "xaimos/errors.hpp"

namespace xaimos {

void MemoryEventLog::append(const nlohmann::json& event) {
  std::lock_guard lock(mu_);
  events_.push_back(event);
}

std::vector<nlohmann::json> MemoryEventLog::read_all() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::size_t MemoryEventLog::size() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

std::vector<nlohmann::json> parse_event_lines(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const std::string line = text.substr(pos, terminated ? nl - pos : std::string::npos);
    pos = terminated ? nl + 1 : text.size();
    if (!terminated) break;
    if (line.empty()) continue;
    auto parsed = nlohmann::json::parse(line, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
      throw IoError("event log line " + std::to_string(line_no) + " is corrupt");
    }
    out.push_back(std::move(parsed));
  }
  return out;
}

FileEventLog::FileEventLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  // A torn tail from a crash is cut back to the last complete line so new
  // appends start on a fresh line.
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (!text.empty() && text.back() != '\n') {
      const auto last = text.rfind('\n');
      const auto keep = last == std::string::npos ? 0 : last + 1;
      std::filesystem::resize_file(path_, keep);
    }
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw IoError("cannot open event log " + path_.string());
}

void FileEventLog::append(const nlohmann::json& event) {
  std::lock_guard lock(mu_);
  out_ << event.dump() << '\n';
  out_.flush();
  if (!out_) throw IoError("write to event log " + path_.string() + " failed");
}

std::vector<nlohmann::json> FileEventLog::read_all() const {
  std::lock_guard lock(mu_);
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw IoError("cannot read event log " + path_.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_event_lines(ss.str());
}

}  // namespace xaimos
