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
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace xaimos::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;
  // 1-based line number in the source file for each row.
  std::vector<std::size_t> lines;
};

// RFC 4180 subset: comma separator, double-quote escaping, LF or CRLF.
Table parse(std::string_view text);
Table read_file(const std::filesystem::path& path);

// Reads `path` and checks the header matches `expected` exactly.
Table read_with_header(const std::filesystem::path& path, const Row& expected);

std::string escape(std::string_view field);
void write_row(std::ostream& os, const Row& row);
std::string to_string(const Row& header, const std::vector<Row>& rows);
void write_file(const std::filesystem::path& path, const Row& header,
                const std::vector<Row>& rows);

}  // namespace xaimos::csv
