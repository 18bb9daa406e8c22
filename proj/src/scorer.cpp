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

#include "xaimos/scorer.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "xaimos/csv.hpp"
#include "xaimos/raster_io.hpp"
#include "xaimos/text.hpp"

namespace xaimos {

std::string content_hash(const Image& image) {
  std::vector<std::uint8_t> header = {'X', 'I', 'M', 'G'};
  for (int v : {image.width, image.height, image.channels}) {
    for (int i = 0; i < 4; ++i) {
      header.push_back(static_cast<std::uint8_t>(static_cast<std::uint32_t>(v) >> (8 * i)));
    }
  }
  const auto pixels = raster_io::quantized_bytes(image);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, pixels.data(), pixels.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

TransportResponse HttpTransport::post_score(const std::string& address,
                                            const std::vector<std::string>& png_images,
                                            const std::string& target_class) {
  httplib::Client client(address);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  httplib::MultipartFormDataItems items;
  for (std::size_t i = 0; i < png_images.size(); ++i) {
    items.push_back({"image" + std::to_string(i), png_images[i],
                     "image" + std::to_string(i) + ".png", "image/png"});
  }
  items.push_back({"target_class", target_class, "", ""});
  auto res = client.Post("/score", items);
  if (!res) {
    throw TransportError("scorer unreachable at " + address + ": " +
                         httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

std::vector<double> parse_score_body(const std::string& body) {
  std::vector<double> out;
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(text::parse_double(line, "score"));
  }
  return out;
}

WireScorer::WireScorer(std::string address, Transport& transport, RetryPolicy policy,
                       Sleeper sleep)
    : address_(std::move(address)),
      transport_(transport),
      policy_(policy),
      sleep_(sleep ? std::move(sleep)
                   : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })) {
  if (policy_.batch_size == 0) throw ValidationError("batch size must be positive");
}

std::vector<double> WireScorer::score(std::span<const Image> images,
                                      const std::string& target_class) {
  std::vector<double> out;
  out.reserve(images.size());
  for (std::size_t start = 0, batch = 0; start < images.size();
       start += policy_.batch_size, ++batch) {
    const std::size_t end = std::min(images.size(), start + policy_.batch_size);
    std::vector<std::string> pngs;
    for (std::size_t i = start; i < end; ++i) {
      const auto bytes = raster_io::encode_png(images[i]);
      pngs.emplace_back(bytes.begin(), bytes.end());
    }
    auto backoff = policy_.initial_backoff;
    for (int attempt = 0;; ++attempt) {
      WireAttempt entry{batch, attempt, pngs.size(), false, {}, {}};
      try {
        const auto res = transport_.post_score(address_, pngs, target_class);
        if (res.status != 200) {
          throw TransportError("scorer returned HTTP " + std::to_string(res.status));
        }
        const auto scores = parse_score_body(res.body);
        if (scores.size() != pngs.size()) {
          throw TransportError("scorer returned " + std::to_string(scores.size()) +
                               " scores for " + std::to_string(pngs.size()) + " images");
        }
        entry.ok = true;
        log_.push_back(entry);
        out.insert(out.end(), scores.begin(), scores.end());
        break;
      } catch (const std::exception& e) {
        entry.error = e.what();
        if (attempt >= policy_.retries) {
          log_.push_back(entry);
          throw TransportError("scoring failed after " + std::to_string(attempt + 1) +
                               " attempts: " + e.what());
        }
        entry.backoff = backoff;
        log_.push_back(entry);
        sleep_(backoff);
        backoff = std::chrono::milliseconds(static_cast<std::int64_t>(
            static_cast<double>(backoff.count()) * policy_.backoff_multiplier));
      }
    }
  }
  return out;
}

namespace {
const csv::Row kCacheHeader{"content_hash", "target_class", "score"};
}

CachedScorer::CachedScorer(const std::filesystem::path& cache_path) {
  const auto t = csv::read_with_header(cache_path, kCacheHeader);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const double s = text::parse_double(row[2], "score");
    if (!table_.emplace(std::make_pair(row[0], row[1]), s).second) {
      throw ValidationError("score cache line " + std::to_string(t.lines[r]) +
                            ": duplicate key");
    }
  }
}

std::vector<double> CachedScorer::score(std::span<const Image> images,
                                        const std::string& target_class) {
  std::vector<double> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    const auto key = std::make_pair(content_hash(img), target_class);
    auto it = table_.find(key);
    if (it == table_.end()) {
      throw ValidationError("score cache miss for " + key.first + " / " + target_class);
    }
    out.push_back(it->second);
  }
  return out;
}

void write_score_cache(const std::filesystem::path& path,
                       const std::map<std::pair<std::string, std::string>, double>& table) {
  std::vector<csv::Row> rows;
  for (const auto& [key, s] : table) {
    rows.push_back({key.first, key.second, text::shortest(s)});
  }
  csv::write_file(path, kCacheHeader, rows);
}

std::unique_ptr<Scorer> make_scorer(const ScorerEndpoint& endpoint, Transport& transport,
                                    RetryPolicy policy) {
  if (endpoint.mode == ScorerEndpoint::Mode::kCached) {
    if (endpoint.cache_path.empty()) throw ValidationError("cached scorer needs a cache path");
    return std::make_unique<CachedScorer>(endpoint.cache_path);
  }
  if (endpoint.address.empty()) throw ValidationError("wire scorer needs an address");
  return std::make_unique<WireScorer>(endpoint.address, transport, policy);
}

std::vector<double> score_batch(const ScorerEndpoint& endpoint, Transport& transport,
                                std::span<const Image> images) {
  if (images.empty()) return {};
  auto scorer = make_scorer(endpoint, transport);
  return scorer->score(images, endpoint.target_class);
}

}  // namespace xaimos
