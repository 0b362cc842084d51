#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "sparsequbo/qubo_io.hpp"
#include "support/instances.hpp"
#include "support/temp_dir.hpp"

namespace sq = sparsequbo;

namespace {

sq::QuboProblem parse(const std::string& text) {
  std::istringstream in(text);
  return sq::load_qubo_coo(in);
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const sq::ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "expected a parse error for:\n" << text;
  return 0;
}

void expect_same(const sq::QuboProblem& a, const sq::QuboProblem& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_NEAR(a.offset(), b.offset(), 1e-12);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.linear(i), b.linear(i), 1e-12);
  ASSERT_EQ(a.quadratic().size(), b.quadratic().size());
  for (std::size_t k = 0; k < a.quadratic().size(); ++k) {
    EXPECT_EQ(a.quadratic()[k].i, b.quadratic()[k].i);
    EXPECT_EQ(a.quadratic()[k].j, b.quadratic()[k].j);
    EXPECT_NEAR(a.quadratic()[k].value, b.quadratic()[k].value, 1e-12);
  }
}

}  // namespace

TEST(QuboCoo, SmallProblemRoundTrip) {
  sq::QuboProblem q(2, {0.1, 1.1}, {{0, 1, 0.5}});
  std::ostringstream out;
  sq::save_qubo_coo(q, out);
  EXPECT_EQ(out.str(), "p qubo 2 2 1\n0 0 0.1\n1 1 1.1\n0 1 0.5\n");
  EXPECT_EQ(parse(out.str()), q);
}

TEST(QuboCoo, DiagonalLineIsLinearTerm) {
  const auto q = parse("p qubo 1 1 0\n0 0 0.1\n");
  EXPECT_DOUBLE_EQ(q.linear(0), 0.1);
}

TEST(QuboCoo, CommentsBlankLinesAndLowerTriangleAccepted) {
  const auto q = parse("# generated\n\np qubo 3 1 1\n  # inner comment\n2 2 -1.5\n2 0 4\n");
  EXPECT_DOUBLE_EQ(q.linear(2), -1.5);
  EXPECT_DOUBLE_EQ(q.quadratic(0, 2), 4.0);
}

TEST(QuboCoo, OffsetCommentRoundTrips) {
  const auto q = sq::QuboProblem(2, {1.0, -1.0}, {{0, 1, 2.0}}, 12.625);
  std::ostringstream out;
  sq::save_qubo_coo(q, out);
  EXPECT_EQ(parse(out.str()).offset(), 12.625);
}

TEST(QuboCoo, MissingOffsetLoadsAsZero) {
  EXPECT_EQ(parse("p qubo 1 1 0\n0 0 3\n").offset(), 0.0);
}

TEST(QuboCoo, RandomProblemsRoundTripBelowTolerance) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto q = sq::testing::random_qubo(seed, 30, 0.4, 5.0);
    std::ostringstream out;
    sq::save_qubo_coo(q, out);
    expect_same(parse(out.str()), q);
  }
}

TEST(QuboCoo, IndexBeyondDeclaredSizeNamesLine) {
  EXPECT_EQ(error_line("p qubo 2 0 1\n2 1 0.5\n"), 2u);
}

TEST(QuboCoo, DuplicateEntriesRejected) {
  EXPECT_EQ(error_line("p qubo 2 0 1\n0 1 0.5\n1 0 0.5\n"), 3u);
  EXPECT_EQ(error_line("p qubo 2 2 0\n0 0 1\n0 0 2\n"), 3u);
}

TEST(QuboCoo, MalformedLinesRejected) {
  EXPECT_EQ(error_line("p qubo 2 1 0\nhello world\n"), 2u);
  EXPECT_EQ(error_line("p qubo 2 1 0\n0 0\n"), 2u);
  EXPECT_EQ(error_line("p qubo 2 1 0\n0 0 abc\n"), 2u);
  EXPECT_EQ(error_line("p qubo 2 1 0\n-1 0 1\n"), 2u);
  EXPECT_EQ(error_line("0 0 1\np qubo 1 1 0\n"), 1u);
  EXPECT_EQ(error_line("p qubo 2 0 0\np qubo 2 0 0\n"), 2u);
  EXPECT_EQ(error_line("p qubit 2 0 0\n"), 1u);
}

TEST(QuboCoo, HeaderCountsMustMatch) {
  EXPECT_THROW(parse("p qubo 2 2 0\n0 0 1\n"), sq::ParseError);
  EXPECT_THROW(parse("p qubo 2 0 1\n"), sq::ParseError);
  EXPECT_THROW(parse(""), sq::ParseError);
}

TEST(QuboJson, RoundTripAndDefaults) {
  const auto q = sq::testing::random_qubo(9, 12, 0.5, 2.0);
  expect_same(sq::qubo_from_json(sq::qubo_to_json(q)), q);
  const auto no_offset = sq::qubo_from_json(nlohmann::json::parse(R"({"n":2,"h":[1,2],"Q":[[1,0,3]]})"));
  EXPECT_EQ(no_offset.offset(), 0.0);
  EXPECT_DOUBLE_EQ(no_offset.quadratic(0, 1), 3.0);
}

TEST(QuboJson, MalformedRejected) {
  auto bad = [](const char* text) { return sq::qubo_from_json(nlohmann::json::parse(text)); };
  EXPECT_THROW(bad(R"({"n":2,"h":[1]})"), sq::ParseError);
  EXPECT_THROW(bad(R"({"n":2,"h":[1,2],"Q":[[0,2,1]]})"), sq::ParseError);
  EXPECT_THROW(bad(R"({"n":2,"h":[1,2],"Q":[[0,1,1],[1,0,1]]})"), sq::ParseError);
  EXPECT_THROW(bad(R"({"h":[1,2]})"), sq::ParseError);
}

TEST(QuboFiles, ExtensionSelectsFormat) {
  sq::testing::TempDir dir;
  const auto q = sq::testing::random_qubo(4, 9, 0.5, 1.0);
  sq::save_qubo(q, dir.path() / "p.coo");
  sq::save_qubo(q, dir.path() / "p.json");
  expect_same(sq::load_qubo(dir.path() / "p.coo"), q);
  expect_same(sq::load_qubo(dir.path() / "p.json"), q);
  EXPECT_EQ(sq::testing::slurp(dir.path() / "p.json").front(), '{');
  EXPECT_THROW(sq::load_qubo(dir.path() / "missing.coo"), sq::IoError);
}
