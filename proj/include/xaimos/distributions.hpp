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

// Tail probabilities for the reference distributions of the rank tests.
// Accurate to well below 1e-10 absolute over the ranges the tests reach.

namespace xaimos::dist {

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Regularized incomplete beta function I_x(a, b).
double beta_i(double a, double b, double x);

// P(X > x) for X ~ chi-square(df).
double chi_square_upper_tail(double x, double df);

// P(|T| > |t|) for T ~ Student t(df).
double student_t_two_sided(double t, double df);

// P(Z > z) for Z ~ N(0, 1).
double normal_upper_tail(double z);

}  // namespace xaimos::dist
