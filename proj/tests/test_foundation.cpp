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

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "xaimos/csv.hpp"
#include "xaimos/distributions.hpp"
#include "xaimos/errors.hpp"
#include "xaimos/text.hpp"
#include "xaimos/time_util.hpp"

namespace xaimos {
namespace {

TEST(Csv, ParsesQuotedFieldsAndLineNumbers) {
  const auto t = csv::parse("a,b\n1,\"x,y\"\n\n2,\"say \"\"hi\"\"\"\r\n");
  ASSERT_EQ(t.header, (csv::Row{"a", "b"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0], (csv::Row{"1", "x,y"}));
  EXPECT_EQ(t.rows[1], (csv::Row{"2", "say \"hi\""}));
  EXPECT_EQ(t.lines[0], 2u);
  EXPECT_EQ(t.lines[1], 4u);
}

TEST(Csv, EmptyTrailingFieldIsKept) {
  const auto t = csv::parse("a,b,c\n1,,\n");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0], (csv::Row{"1", "", ""}));
}

TEST(Csv, EscapeRoundTrips) {
  const csv::Row header{"h1", "h2"};
  const std::vector<csv::Row> rows{{"plain", "with,comma"}, {"quote\"d", "line\nbreak"}};
  const auto t = csv::parse(csv::to_string(header, rows));
  EXPECT_EQ(t.header, header);
  EXPECT_EQ(t.rows, rows);
}

TEST(Csv, UnterminatedQuoteIsRejected) {
  EXPECT_THROW(csv::parse("a\n\"open\n"), ValidationError);
}

TEST(Csv, HeaderAndFieldCountAreChecked) {
  testing::TempDir dir;
  testing::write_file(dir / "x.csv", "a,b\n1,2\n3\n");
  EXPECT_THROW(csv::read_with_header(dir / "x.csv", {"a", "c"}), ValidationError);
  try {
    csv::read_with_header(dir / "x.csv", {"a", "b"});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(csv::read_file(dir / "missing.csv"), IoError);
}

TEST(Text, ParsesStrictly) {
  EXPECT_EQ(text::parse_int("42", "x"), 42);
  EXPECT_THROW(text::parse_int("4.2", "x"), ValidationError);
  EXPECT_THROW(text::parse_int("", "x"), ValidationError);
  EXPECT_DOUBLE_EQ(text::parse_double("0.25", "x"), 0.25);
  EXPECT_THROW(text::parse_double("nan", "x"), ValidationError);
  EXPECT_TRUE(text::parse_bool("true", "x"));
  EXPECT_FALSE(text::parse_bool("0", "x"));
  EXPECT_THROW(text::parse_bool("yes", "x"), ValidationError);
}

TEST(Text, Formatting) {
  EXPECT_EQ(text::fixed(0.44064, 4), "0.4406");
  EXPECT_EQ(text::fixed(-0.00001, 4), "0.0000");
  EXPECT_EQ(text::shortest(0.1), "0.1");
  EXPECT_EQ(text::shortest(20.0), "20.0");
  EXPECT_EQ(text::shortest(2.3334), "2.3334");
}

TEST(Time, Rfc3339RoundTrip) {
  const auto t = parse_rfc3339("2024-03-05T14:07:09.123Z");
  EXPECT_EQ(format_rfc3339(t), "2024-03-05T14:07:09.123Z");
  EXPECT_EQ(parse_rfc3339("2024-03-05T16:07:09.123+02:00"), t);
  EXPECT_EQ(format_rfc3339(parse_rfc3339("2024-03-05T14:07:09Z")), "2024-03-05T14:07:09.000Z");
  EXPECT_THROW(parse_rfc3339("2024-03-05 14:07"), ValidationError);
}

TEST(Time, SimulatedClockAdvances) {
  SimulatedClock clock(parse_rfc3339("2024-01-01T00:00:00Z"));
  clock.advance(Millis(1500));
  EXPECT_EQ(format_rfc3339(clock.now()), "2024-01-01T00:00:01.500Z");
}

struct TailRef {
  std::string dist;
  double df;
  double x;
  double tail;
};

std::vector<TailRef> tail_refs() {
  const auto t = csv::read_with_header(testing::test_dir() / "fixtures" / "tail_reference.csv",
                                       {"dist", "df", "x", "upper_tail"});
  std::vector<TailRef> out;
  for (const auto& r : t.rows) {
    out.push_back({r[0], std::stod(r[1]), std::stod(r[2]), std::stod(r[3])});
  }
  return out;
}

TEST(Distributions, MatchesHighPrecisionReferences) {
  const auto refs = tail_refs();
  ASSERT_GE(refs.size(), 30u);
  for (const auto& r : refs) {
    const double got = r.dist == "chi2" ? dist::chi_square_upper_tail(r.x, r.df)
                                        : dist::student_t_two_sided(r.x, r.df);
    EXPECT_NEAR(got, r.tail, 1e-10) << r.dist << " df=" << r.df << " x=" << r.x;
  }
}

TEST(Distributions, ClosedForms) {
  // df 2 chi-square tail is exp(-x/2); df 1 t is the Cauchy distribution.
  for (double x : {0.1, 1.0, 7.2, 30.0}) {
    EXPECT_NEAR(dist::chi_square_upper_tail(x, 2), std::exp(-x / 2), 1e-14);
    EXPECT_NEAR(dist::student_t_two_sided(x, 1), 1.0 - 2.0 * std::atan(x) / M_PI, 1e-14);
  }
  EXPECT_DOUBLE_EQ(dist::chi_square_upper_tail(0.0, 3), 1.0);
  EXPECT_DOUBLE_EQ(dist::student_t_two_sided(0.0, 3), 1.0);
  EXPECT_NEAR(dist::normal_upper_tail(1.959963984540054), 0.025, 1e-15);
}

TEST(Distributions, IncompleteFunctionsAreComplementary) {
  for (double a : {0.5, 1.0, 3.5, 20.0}) {
    for (double x : {0.01, 1.0, 5.0, 40.0}) {
      EXPECT_NEAR(dist::gamma_p(a, x) + dist::gamma_q(a, x), 1.0, 1e-14);
    }
  }
  // I_x(a, b) = 1 - I_{1-x}(b, a).
  for (double x : {0.1, 0.5, 0.93}) {
    EXPECT_NEAR(dist::beta_i(2.5, 0.5, x), 1.0 - dist::beta_i(0.5, 2.5, 1.0 - x), 1e-14);
  }
}

}  // namespace
}  // namespace xaimos
