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

#include <cmath>
#include <cstdint>
#include <string>

namespace xaimos::oracle {

// Exact check of |x - index * 10^-4| <= 10^-4 / 2 with x = m * 2^e.
inline bool within_half_step(double x, std::int64_t index) {
  int e = 0;
  const double frac = std::frexp(x, &e);
  const auto m = static_cast<__int128>(std::ldexp(frac, 53));
  e -= 53;
  if (e > 0 || e < -100) return false;
  const __int128 scale = static_cast<__int128>(1) << -e;
  __int128 diff = m * 10000 - static_cast<__int128>(index) * scale;
  if (diff < 0) diff = -diff;
  return 2 * diff <= scale;
}

// The double nearest to index * 10^-4.
inline double lattice_value(std::int64_t index) {
  return std::stod(std::to_string(index) + "e-4");
}

}  // namespace xaimos::oracle
