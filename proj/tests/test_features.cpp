#include <gtest/gtest.h>

#include <sstream>

#include "ccap/core/random.hpp"
#include "ccap/features/features.hpp"

using namespace ccap;
using namespace ccap::data;
using namespace ccap::features;

namespace {

FeatureMatrix matrix_of(std::vector<std::pair<std::string, std::vector<double>>> cols,
                        Encoding enc = Encoding::scaled) {
  FeatureMatrix m;
  const std::size_t n = cols.empty() ? 0 : cols[0].second.size();
  m.values = Matrix(n, 0);
  for (auto& [name, v] : cols) m.append_column({name, name, enc, {}, {}}, v);
  return m;
}

Table credit(const std::string& csv) {
  std::istringstream in("ID,MONTHS_BALANCE,STATUS\n" + csv);
  return read_csv(in, "ID", "credit.csv");
}

}  // namespace

TEST(Interactions, ElementwiseProduct) {
  auto m = add_interactions(matrix_of({{"a", {1, 2}}, {"b", {3, 4}}}), {{"a", "b"}});
  ASSERT_EQ(m.cols(), 3u);
  EXPECT_EQ(m.values.column(2), (std::vector<double>{3, 8}));
  EXPECT_EQ(m.meta[2].name, "inter:a*b");
  EXPECT_EQ(m.meta[2].parents, (std::vector<std::string>{"a", "b"}));
}

TEST(Interactions, SelfPairAndAnnihilator) {
  auto m = add_interactions(matrix_of({{"a", {-1, 2, 5}}, {"z", {0, 0, 0}}}), {{"a", "a"}, {"z", "a"}});
  EXPECT_EQ(m.values.column(2), (std::vector<double>{1, 4, 25}));
  EXPECT_EQ(m.values.column(3), (std::vector<double>{0, 0, 0}));
}

TEST(Interactions, UnknownColumnAborts) {
  EXPECT_THROW(add_interactions(matrix_of({{"a", {1}}}), {{"a", "nope"}}), DataError);
}

TEST(Interactions, MatchesBruteForceProduct) {
  Rng rng(17);
  FeatureMatrix m = matrix_of({{"a", {}}, {"b", {}}, {"c", {}}});
  m.values = Matrix(500, 3);
  for (auto& v : m.values.data()) v = rng.normal() * 10;
  auto out = add_interactions(m, {{"a", "b"}, {"c", "a"}});
  for (std::size_t r = 0; r < 500; ++r) {
    EXPECT_EQ(out.values(r, 3), m.values(r, 0) * m.values(r, 1));
    EXPECT_EQ(out.values(r, 4), m.values(r, 2) * m.values(r, 0));
  }
}

TEST(Polynomial, SquaresAndSkipsIndicators) {
  FeatureMatrix m = matrix_of({{"x", {-2, 0, 3}}});
  m.append_column({"g=M", "g", Encoding::onehot, "M", {}}, std::vector<double>{0, 1, 0});
  auto out = add_polynomial(m, 2);
  ASSERT_EQ(out.cols(), 3u);
  EXPECT_EQ(out.meta[2].name, "sq:x");
  EXPECT_EQ(out.values.column(2), (std::vector<double>{4, 0, 9}));
  EXPECT_EQ(add_polynomial(m, 1).cols(), 2u);
  EXPECT_THROW(add_polynomial(m, 3), UsageError);
}

TEST(Polynomial, WidthGrowsByEligibleCount) {
  FeatureMatrix m;
  m.values = Matrix(4, 0);
  for (int j = 0; j < 5; ++j) {
    m.append_column({"n" + std::to_string(j), "", Encoding::scaled, {}, {}}, std::vector<double>(4, j));
  }
  for (int j = 0; j < 3; ++j) {
    m.append_column({"c=" + std::to_string(j), "c", Encoding::onehot, {}, {}}, std::vector<double>(4, 0));
  }
  EXPECT_EQ(add_polynomial(m).cols(), m.cols() + 5);
}

TEST(Recipe, RowSubsettingCommutesWithEngineering) {
  Rng rng(2);
  FeatureMatrix m = matrix_of({{"AMT_INCOME_TOTAL", {}}, {"tsld", {}}, {"age", {}}});
  m.values = Matrix(120, 3);
  for (auto& v : m.values.data()) v = rng.normal();
  m.append_column({"g=F", "g", Encoding::onehot, "F", {}}, std::vector<double>(120, 1.0));
  FeatureRecipe recipe;
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < 120; r += 3) rows.push_back(r);
  auto a = apply_recipe(m, recipe).select_rows(rows);
  auto b = apply_recipe(m.select_rows(rows), recipe);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(engineered_columns(a).size(), 4u);  // one interaction + three squares
}

TEST(TimeSinceLastDefault, Examples) {
  TemporalConfig cfg;
  cfg.window = 24;
  auto a = time_since_last_default(credit("1,-5,3\n1,-2,0\n1,0,C\n"), cfg);
  EXPECT_EQ(a.at("1"), 5.0);
  auto b = time_since_last_default(credit("1,-3,0\n1,0,2\n"), cfg);
  EXPECT_EQ(b.at("1"), 0.0);
  auto c = time_since_last_default(credit("1,-3,0\n1,-1,X\n1,0,1\n"), cfg);
  EXPECT_EQ(c.at("1"), 25.0);
}

TEST(TimeSinceLastDefault, MatchesScanOracleAndStaysInRange) {
  Rng rng(33);
  const std::vector<std::string> tokens{"0", "1", "2", "3", "4", "5", "C", "X"};
  std::string csv;
  std::vector<double> oracle(300);
  TemporalConfig cfg;
  for (int id = 0; id < 300; ++id) {
    oracle[id] = cfg.window + 1;
    const auto len = 1 + rng.below(30);
    for (std::size_t m = 0; m < len; ++m) {
      const auto& tok = tokens[rng.below(tokens.size())];
      csv += std::to_string(id) + ",-" + std::to_string(m) + "," + tok + "\n";
      const bool bad = tok == "2" || tok == "3" || tok == "4" || tok == "5";
      if (bad && double(m) < cfg.window) oracle[id] = std::min(oracle[id], double(m));
    }
  }
  auto got = time_since_last_default(credit(csv), cfg);
  for (int id = 0; id < 300; ++id) {
    const double v = got.at(std::to_string(id));
    EXPECT_EQ(v, oracle[id]);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, cfg.window + 1.0);
  }
}

TEST(TimeSinceLastDefault, AttachUsesSentinelForUnknownIds) {
  Table app;
  app.add_column(Column::categorical("ID", {"1", "9"}, ColumnKind::identifier));
  auto out = attach_temporal(app, {{"1", 4.0}}, 18);
  EXPECT_EQ(*out.column("tsld").numbers[0], 4.0);
  EXPECT_EQ(*out.column("tsld").numbers[1], 19.0);
}
