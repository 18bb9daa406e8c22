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
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace xaimos {

// Append-only JSON Lines store. One object per line; a line is durable once
// its terminating newline is written.
class EventLog {
 public:
  virtual ~EventLog() = default;
  virtual void append(const nlohmann::json& event) = 0;
  virtual std::vector<nlohmann::json> read_all() const = 0;
};

class MemoryEventLog final : public EventLog {
 public:
  void append(const nlohmann::json& event) override;
  std::vector<nlohmann::json> read_all() const override;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<nlohmann::json> events_;
};

class FileEventLog final : public EventLog {
 public:
  explicit FileEventLog(std::filesystem::path path);
  void append(const nlohmann::json& event) override;
  std::vector<nlohmann::json> read_all() const override;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::ofstream out_;
};

// Parses JSON Lines text. An unterminated final line is a torn write and is
// dropped; a malformed terminated line throws IoError.
std::vector<nlohmann::json> parse_event_lines(const std::string& text);

}  // namespace xaimos
