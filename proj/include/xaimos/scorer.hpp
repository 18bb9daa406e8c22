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

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "xaimos/errors.hpp"
#include "xaimos/saliency.hpp"

namespace xaimos {

// SHA-256 (lowercase hex) of "XIMG", u32 width, height, channels
// (little-endian) and the 8-bit wire pixel values.
std::string content_hash(const Image& image);

struct ScorerEndpoint {
  enum class Mode { kWire, kCached };
  Mode mode = Mode::kCached;
  std::string address;                 // kWire: e.g. http://127.0.0.1:9000
  std::filesystem::path cache_path;    // kCached: CSV content_hash,target_class,score
  std::string target_class;
};

class TransportError : public IoError {
 public:
  using IoError::IoError;
};

struct TransportResponse {
  int status = 0;
  std::string body;
};

// One POST /score round trip carrying PNG-encoded images.
class Transport {
 public:
  virtual ~Transport() = default;
  // Throws TransportError when the endpoint is unreachable.
  virtual TransportResponse post_score(const std::string& address,
                                       const std::vector<std::string>& png_images,
                                       const std::string& target_class) = 0;
};

// cpp-httplib backed: multipart/form-data with fields image0..imageN-1
// (image/png) and target_class; reply is one decimal probability per line.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : timeout_(timeout) {}
  TransportResponse post_score(const std::string& address,
                               const std::vector<std::string>& png_images,
                               const std::string& target_class) override;

 private:
  std::chrono::milliseconds timeout_;
};

struct RetryPolicy {
  std::size_t batch_size = 32;
  int retries = 3;
  std::chrono::milliseconds initial_backoff{100};
  double backoff_multiplier = 2.0;
};

struct WireAttempt {
  std::size_t batch = 0;
  int attempt = 0;  // 0 = first try
  std::size_t images = 0;
  bool ok = false;
  std::chrono::milliseconds backoff{0};  // wait before the next attempt
  std::string error;
};

class WireScorer final : public Scorer {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  WireScorer(std::string address, Transport& transport, RetryPolicy policy = {},
             Sleeper sleep = {});

  std::vector<double> score(std::span<const Image> images,
                            const std::string& target_class) override;

  const std::vector<WireAttempt>& log() const { return log_; }

 private:
  std::string address_;
  Transport& transport_;
  RetryPolicy policy_;
  Sleeper sleep_;
  std::vector<WireAttempt> log_;
};

// Read-only lookup keyed by (content_hash, target_class). Never touches the
// network.
class CachedScorer final : public Scorer {
 public:
  explicit CachedScorer(const std::filesystem::path& cache_path);
  explicit CachedScorer(std::map<std::pair<std::string, std::string>, double> table)
      : table_(std::move(table)) {}

  std::vector<double> score(std::span<const Image> images,
                            const std::string& target_class) override;

 private:
  std::map<std::pair<std::string, std::string>, double> table_;
};

void write_score_cache(const std::filesystem::path& path,
                       const std::map<std::pair<std::string, std::string>, double>& table);

// Parses newline-delimited probabilities.
std::vector<double> parse_score_body(const std::string& body);

std::unique_ptr<Scorer> make_scorer(const ScorerEndpoint& endpoint, Transport& transport,
                                    RetryPolicy policy = {});

std::vector<double> score_batch(const ScorerEndpoint& endpoint, Transport& transport,
                                std::span<const Image> images);

}  // namespace xaimos
