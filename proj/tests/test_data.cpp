#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "ccap/core/random.hpp"
#include "ccap/data/encode.hpp"
#include "ccap/data/labels.hpp"
#include "ccap/data/merge.hpp"
#include "ccap/data/missing.hpp"
#include "ccap/data/profile.hpp"
#include "ccap/data/split.hpp"
#include "ccap/data/table.hpp"

using namespace ccap;
using namespace ccap::data;

namespace {

Table parse(const std::string& csv, const std::string& id = "ID") {
  std::istringstream in(csv);
  return read_csv(in, id, "test.csv");
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

Table id_table(const std::vector<std::string>& ids, const std::string& extra_name) {
  Table t;
  std::vector<std::optional<std::string>> id_cells(ids.begin(), ids.end());
  t.add_column(Column::categorical("ID", id_cells, ColumnKind::identifier));
  std::vector<std::optional<double>> extra;
  for (std::size_t i = 0; i < ids.size(); ++i) extra.push_back(double(i));
  t.add_column(Column::numeric(extra_name, extra));
  return t;
}

}  // namespace

TEST(LoadTables, EmptyCellBecomesMissingNumeric) {
  auto t = parse("ID,AMT_INCOME_TOTAL,CODE_GENDER\n1,100,M\n2,,F\n3,300,M\n");
  ASSERT_EQ(t.row_count(), 3u);
  const auto& income = t.column("AMT_INCOME_TOTAL");
  EXPECT_EQ(income.kind, ColumnKind::numeric);
  EXPECT_EQ(income.missing_count(), 1u);
  EXPECT_TRUE(income.missing(1));
  EXPECT_EQ(t.column("ID").kind, ColumnKind::identifier);
  EXPECT_EQ(t.column("CODE_GENDER").kind, ColumnKind::categorical);
}

TEST(LoadTables, HeaderOnlyFileGivesEmptyTable) {
  auto t = parse("ID,STATUS\n");
  EXPECT_EQ(t.row_count(), 0u);
  EXPECT_EQ(t.column_count(), 2u);
}

TEST(LoadTables, MixedStatusTokensAreCategorical) {
  auto t = parse("ID,STATUS\n1,0\n1,1\n2,C\n3,X\n");
  EXPECT_EQ(t.column("STATUS").kind, ColumnKind::categorical);
  auto numeric_only = parse("ID,STATUS\n1,0\n1,1\n");
  EXPECT_EQ(numeric_only.column("STATUS").kind, ColumnKind::numeric);
}

TEST(LoadTables, Errors) {
  EXPECT_THROW(parse("A,B\n1,2\n"), DataError);  // no ID column
  try {
    parse("ID,B\n1,2\n2\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_table("/nonexistent/file.csv", "ID"), DataError);
}

TEST(LoadTables, QuotedFields) {
  auto t = parse("ID,NAME_HOUSING_TYPE\n1,\"House / apartment, big\"\n");
  EXPECT_EQ(*t.column("NAME_HOUSING_TYPE").tokens[0], "House / apartment, big");
}

TEST(Merge, InnerJoinOnSharedIds) {
  auto app = id_table({"1", "2"}, "A");
  auto credit = id_table({"2", "3"}, "B");
  auto merged = merge_on_id(app, credit);
  ASSERT_EQ(merged.row_count(), 1u);
  EXPECT_EQ(*merged.column("ID").tokens[0], "2");
  EXPECT_EQ(merged.column_count(), 3u);
}

TEST(Merge, OneApplicationManyMonths) {
  auto app = id_table({"7"}, "A");
  auto credit = id_table(std::vector<std::string>(12, "7"), "B");
  EXPECT_EQ(merge_on_id(app, credit).row_count(), 12u);
  EXPECT_EQ(merged_row_count(app, credit), 12u);
}

TEST(Merge, Errors) {
  auto app = id_table({"1"}, "A");
  EXPECT_THROW(merge_on_id(app, id_table({"2"}, "B")), DataError);  // no shared IDs
  EXPECT_THROW(merge_on_id(app, id_table({"1"}, "A")), DataError);  // duplicate column
}

TEST(Merge, MatchesNestedLoopOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> a, b;
    const auto na = 1 + rng.below(50), nb = 1 + rng.below(50);
    for (std::size_t i = 0; i < na; ++i) a.push_back(std::to_string(rng.below(12)));
    for (std::size_t i = 0; i < nb; ++i) b.push_back(std::to_string(rng.below(12)));
    std::size_t oracle = 0;
    for (const auto& x : a) {
      for (const auto& y : b) oracle += x == y ? 1 : 0;
    }
    auto app = id_table(a, "A");
    auto credit = id_table(b, "B");
    if (oracle == 0) {
      EXPECT_THROW(merge_on_id(app, credit), DataError);
    } else {
      EXPECT_EQ(merge_on_id(app, credit).row_count(), oracle);
    }
    EXPECT_EQ(merged_row_count(app, credit), oracle);
  }
}

TEST(DeriveLabel, Examples) {
  auto good = parse("ID,MONTHS_BALANCE,STATUS\n1,-2,C\n1,-1,0\n1,0,0\n");
  EXPECT_EQ(derive_label(good, {}).labels[0], 0);
  auto bad = parse("ID,MONTHS_BALANCE,STATUS\n1,-2,0\n1,-1,1\n1,0,3\n");
  EXPECT_EQ(derive_label(bad, {}).labels[0], 1);
  auto unknown = parse("ID,MONTHS_BALANCE,STATUS\n1,0,Q\n");
  try {
    derive_label(unknown, {});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'Q'"), std::string::npos);
  }
}

TEST(DeriveLabel, PerformanceWindow) {
  auto t = parse("ID,MONTHS_BALANCE,STATUS\n1,-9,4\n1,0,0\n2,-1,2\n");
  LabelPolicy policy;
  policy.performance_months = 6;
  auto labels = derive_label(t, policy);
  EXPECT_EQ(labels.labels.values(), (std::vector<int>{0, 1}));
  auto obs = observation_window(t, policy);
  ASSERT_EQ(obs.row_count(), 1u);
  EXPECT_DOUBLE_EQ(*obs.column("MONTHS_BALANCE").numbers[0], -3.0);
}

TEST(DeriveLabel, AgreesWithLinearScanOracle) {
  const std::vector<std::string> alphabet{"0", "1", "2", "3", "4", "5", "C", "X"};
  Rng rng(5);
  std::vector<std::optional<std::string>> ids, statuses;
  std::vector<std::optional<double>> months;
  std::vector<std::vector<std::string>> history(1000);
  for (std::size_t id = 0; id < 1000; ++id) {
    const auto len = 1 + rng.below(24);
    for (std::size_t m = 0; m < len; ++m) {
      // Mostly benign tokens so both labels occur.
      const auto& tok = rng.uniform() < 0.97 ? alphabet[std::vector<int>{0, 1, 6, 7}[rng.below(4)]]
                                             : alphabet[2 + rng.below(4)];
      ids.push_back(std::to_string(id));
      statuses.push_back(tok);
      months.push_back(-double(m));
      history[id].push_back(tok);
    }
  }
  Table t;
  t.add_column(Column::categorical("ID", ids, ColumnKind::identifier));
  t.add_column(Column::numeric("MONTHS_BALANCE", months));
  t.add_column(Column::categorical("STATUS", statuses));
  auto got = derive_label(t, {});
  ASSERT_EQ(got.ids.size(), 1000u);
  std::size_t positives = 0;
  for (std::size_t id = 0; id < 1000; ++id) {
    int oracle = 0;
    for (const auto& tok : history[id]) {
      if (tok == "2" || tok == "3" || tok == "4" || tok == "5") oracle = 1;
    }
    positives += oracle;
    EXPECT_EQ(got.ids[id], std::to_string(id));
    EXPECT_EQ(got.labels[id], oracle) << "id " << id;
  }
  EXPECT_EQ(got.labels.positive_count(), positives);
}

TEST(DeriveLabel, PositiveCountOnHundredIds) {
  std::vector<std::optional<std::string>> ids, statuses;
  std::vector<std::optional<double>> months;
  for (int id = 0; id < 100; ++id) {
    for (int m = 0; m < 3; ++m) {
      ids.push_back(std::to_string(id));
      months.push_back(-m);
      statuses.push_back((id % 14 == 3 && m == 1) ? "2" : "0");
    }
  }
  Table t;
  t.add_column(Column::categorical("ID", ids, ColumnKind::identifier));
  t.add_column(Column::numeric("MONTHS_BALANCE", months));
  t.add_column(Column::categorical("STATUS", statuses));
  EXPECT_EQ(derive_label(t, {}).labels.positive_count(), 7u);  // ids 3, 17, ..., 87
}

TEST(DropHighMissing, ThresholdIsStrict) {
  // 10 rows: A has 3 missing (0.30), B has 4 missing (0.40), C none.
  std::vector<std::optional<double>> a(10, 1.0), b(10, 1.0), c(10, 1.0);
  for (int i = 0; i < 3; ++i) a[i] = std::nullopt;
  for (int i = 0; i < 4; ++i) b[i] = std::nullopt;
  Table t;
  t.add_column(Column::categorical("ID", std::vector<std::optional<std::string>>(10, "x"), ColumnKind::identifier));
  t.add_column(Column::numeric("A", a));
  t.add_column(Column::numeric("B", b));
  t.add_column(Column::numeric("C", c));
  auto r = drop_high_missing(t, 0.30);
  EXPECT_EQ(r.dropped, std::vector<std::string>{"B"});
  EXPECT_NE(r.table.find("A"), nullptr);
  EXPECT_NE(r.table.find("C"), nullptr);
  EXPECT_THROW(drop_high_missing(t, 0.0), UsageError);
}

TEST(DropHighMissing, OccupationLikeColumnIsDropped) {
  // 3086 of 10000 missing = 30.86 %.
  std::vector<std::optional<std::string>> occ(10000, "Laborers");
  for (int i = 0; i < 3086; ++i) occ[i] = std::nullopt;
  Table t;
  t.add_column(Column::categorical("OCCUPATION_TYPE", occ));
  EXPECT_EQ(drop_high_missing(t).dropped, std::vector<std::string>{"OCCUPATION_TYPE"});
}

TEST(Impute, MeanMedianMode) {
  Table t;
  t.add_column(Column::numeric("x", {1.0, std::nullopt, 3.0}));
  EXPECT_DOUBLE_EQ(*impute(t).column("x").numbers[1], 2.0);

  Table u;
  u.add_column(Column::numeric("x", {1.0, std::nullopt, 3.0, 100.0}));
  EXPECT_DOUBLE_EQ(*impute(u, NumericImpute::median).column("x").numbers[1], 3.0);

  Table v;
  v.add_column(Column::categorical("c", {"a", "a", "b", std::nullopt}));
  EXPECT_EQ(*impute(v).column("c").tokens[3], "a");

  Table tie;
  tie.add_column(Column::categorical("c", {"b", "a", std::nullopt}));
  EXPECT_EQ(*impute(tie).column("c").tokens[2], "a");
}

TEST(Impute, EntirelyMissingColumnAborts) {
  Table t;
  t.add_column(Column::numeric("x", {std::nullopt, std::nullopt}));
  EXPECT_THROW(impute(t), DataError);
}

TEST(Impute, StatisticsUseOnlyFitRows) {
  Table t;
  t.add_column(Column::numeric("x", {1.0, 3.0, std::nullopt, 1000.0}));
  const std::vector<std::size_t> fit{0, 1, 2};
  auto params = fit_imputer(t, fit);
  EXPECT_DOUBLE_EQ(params.fills[0].number, 2.0);
}

TEST(Standardize, HandComputedColumn) {
  FeatureMatrix m{Matrix(3, 1, {1.0, 2.0, 3.0}), {{"x", "x", Encoding::raw, {}, {}}}};
  auto s = standardize(m, iota_rows(3));
  const double z = 1.0 / std::sqrt(2.0 / 3.0);
  EXPECT_NEAR(s.matrix.values(0, 0), -z, 1e-12);
  EXPECT_NEAR(s.matrix.values(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(s.matrix.values(2, 0), z, 1e-12);
  EXPECT_NEAR(z, 1.224744871391589, 1e-12);
  EXPECT_EQ(s.matrix.meta[0].encoding, Encoding::scaled);
}

TEST(Standardize, ConstantColumnMapsToZeroAndIsFlagged) {
  FeatureMatrix m{Matrix(3, 1, {5.0, 5.0, 5.0}), {{"c", "c", Encoding::raw, {}, {}}}};
  auto s = standardize(m, iota_rows(3));
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(s.matrix.values(r, 0), 0.0);
  EXPECT_EQ(s.params.constant_columns(), std::vector<std::string>{"c"});
}

TEST(Standardize, MomentsAndIdempotence) {
  Rng rng(3);
  Matrix x(200, 4);
  for (auto& v : x.data()) v = rng.normal() * 7.0 + 3.0;
  FeatureMatrix m{x, {}};
  for (int j = 0; j < 4; ++j) m.meta.push_back({"c" + std::to_string(j), "", Encoding::raw, {}, {}});
  const auto fit = iota_rows(150);
  auto once = standardize(m, fit);
  for (std::size_t j = 0; j < 4; ++j) {
    double mean = 0, var = 0;
    for (auto r : fit) mean += once.matrix.values(r, j);
    mean /= 150;
    for (auto r : fit) var += std::pow(once.matrix.values(r, j) - mean, 2);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(var / 150, 1.0, 1e-9);
  }
  auto twice = standardize(once.matrix, fit);
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    EXPECT_NEAR(twice.matrix.values.data()[i], once.matrix.values.data()[i], 1e-12);
  }
}

TEST(OneHot, Definition) {
  Table t;
  t.add_column(Column::categorical("g", {"M", "F", "M"}));
  auto m = one_hot(t, iota_rows(3));
  ASSERT_EQ(m.cols(), 2u);
  EXPECT_EQ(m.meta[0].name, "g=F");
  EXPECT_EQ(m.values.column(0), (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(m.values.column(1), (std::vector<double>{1, 0, 1}));
}

TEST(OneHot, UnseenCategoryIsAllZero) {
  Table train;
  train.add_column(Column::categorical("g", {"M", "F"}));
  auto vocab = fit_vocabulary(train, iota_rows(2));
  Table test;
  test.add_column(Column::categorical("g", {"Z"}));
  auto m = transform_one_hot(test, vocab);
  EXPECT_EQ(m.values.row(0)[0], 0.0);
  EXPECT_EQ(m.values.row(0)[1], 0.0);
  EXPECT_EQ(category_ids(test, vocab)(0, 0), 2);
}

TEST(OneHot, WidthIsSumOfVocabularies) {
  Table t;
  t.add_column(Column::categorical("a", {"x", "y", "x", "y", "x"}));
  t.add_column(Column::categorical("b", {"p", "q", "r", "p", "q"}));
  t.add_column(Column::categorical("c", {"1a", "2a", "3a", "4a", "5a"}));
  for (int k = 0; k < 4; ++k) t.add_column(Column::numeric("n" + std::to_string(k), {1.0, 2.0, 3.0, 4.0, 5.0}));
  EXPECT_EQ(one_hot(t, iota_rows(5)).cols(), 14u);
}

TEST(OneHot, BlockRowSumsAreZeroOrOne) {
  Rng rng(9);
  std::vector<std::optional<std::string>> cells;
  for (int i = 0; i < 300; ++i) cells.push_back(std::string(1, char('a' + rng.below(6))));
  Table t;
  t.add_column(Column::categorical("g", cells));
  const auto fit = iota_rows(100);  // later rows may hold unseen categories
  auto m = one_hot(t, fit);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double s = 0;
    for (double v : m.values.row(r)) s += v;
    EXPECT_TRUE(s == 0.0 || s == 1.0);
  }
}

TEST(FitTransformSeparation, TestRowsNeverChangeFittedState) {
  auto make = [&](std::uint64_t seed) {
    Rng r(seed);
    std::vector<std::optional<double>> num;
    std::vector<std::optional<std::string>> cat;
    for (int i = 0; i < 60; ++i) {
      num.push_back(r.uniform() < 0.1 ? std::nullopt : std::optional<double>(r.normal()));
      cat.push_back(std::string(1, char('a' + r.below(5))));
    }
    Table t;
    t.add_column(Column::numeric("n", num));
    t.add_column(Column::categorical("c", cat));
    return t;
  };
  Table a = make(1);
  Table b = make(2);
  // Identical first 40 rows (train), different last 20 (test).
  Table mixed;
  {
    auto na = a.column("n").numbers;
    auto ca = a.column("c").tokens;
    for (std::size_t i = 40; i < 60; ++i) {
      na[i] = b.column("n").numbers[i];
      ca[i] = b.column("c").tokens[i];
    }
    mixed.add_column(Column::numeric("n", na));
    mixed.add_column(Column::categorical("c", ca));
  }
  const auto train = iota_rows(40);
  auto ia = fit_imputer(a, train), ib = fit_imputer(mixed, train);
  EXPECT_EQ(ia.fills[0].number, ib.fills[0].number);
  EXPECT_EQ(ia.fills[1].category, ib.fills[1].category);
  auto va = fit_vocabulary(a, train), vb = fit_vocabulary(mixed, train);
  EXPECT_EQ(va.entries[0].categories, vb.entries[0].categories);
  auto ma = transform_one_hot(apply_imputer(a, ia), va);
  auto mb = transform_one_hot(apply_imputer(mixed, ib), vb);
  auto sa = standardize(ma, train), sb = standardize(mb, train);
  ASSERT_EQ(sa.params.entries.size(), sb.params.entries.size());
  for (std::size_t j = 0; j < sa.params.entries.size(); ++j) {
    EXPECT_EQ(sa.params.entries[j].mean, sb.params.entries[j].mean);
    EXPECT_EQ(sa.params.entries[j].std, sb.params.entries[j].std);
  }
}

TEST(Split, CardinalityDeterminismAndSeeds) {
  auto s = split(10, 0.2, 1);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.test.size(), 2u);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  for (auto i : s.test) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), 10u);

  auto again = split(10, 0.2, 1);
  EXPECT_EQ(s.test, again.test);

  auto a = split(1000, 0.2, 1), b = split(1000, 0.2, 2);
  EXPECT_NE(a.test, b.test);
  EXPECT_THROW(split(1, 0.2, 1), DataError);
  EXPECT_THROW(split(10, 1.0, 1), UsageError);
}

TEST(Folds, EqualSizes) {
  auto plan = make_folds(100, 5, 3);
  for (int f = 0; f < 5; ++f) EXPECT_EQ(plan.rows_in(f).size(), 20u);
  auto small = make_folds(3, 2, 3);
  std::multiset<std::size_t> sizes{small.rows_in(0).size(), small.rows_in(1).size()};
  EXPECT_EQ(sizes, (std::multiset<std::size_t>{1, 2}));
}

TEST(Folds, StratifiedOnePositivePerFold) {
  Labels y({1, 0, 1, 0, 1, 0, 1, 0, 1, 0});
  auto plan = make_folds(y, 5, 8);
  EXPECT_TRUE(plan.stratified);
  for (int f = 0; f < 5; ++f) {
    auto rows = plan.rows_in(f);
    int pos = 0;
    for (auto r : rows) pos += y[r];
    EXPECT_EQ(pos, 1);
    EXPECT_EQ(rows.size(), 2u);
  }
}

TEST(Folds, InvariantsOnRandomLabels) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 20 + rng.below(200);
    const std::size_t k = 2 + rng.below(6);
    std::vector<int> v(n);
    for (auto& x : v) x = rng.uniform() < 0.2 ? 1 : 0;
    Labels y(v);
    auto plan = make_folds(y, k, trial);
    std::vector<std::size_t> sizes(k), pos(k);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_GE(plan.assignment[i], 0);
      ASSERT_LT(plan.assignment[i], int(k));
      ++sizes[plan.assignment[i]];
      pos[plan.assignment[i]] += y[i];
    }
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1u);
    if (plan.stratified) {
      for (std::size_t f = 0; f < k; ++f) {
        const double expected = double(y.positive_count()) * double(sizes[f]) / double(n);
        EXPECT_LE(std::abs(double(pos[f]) - expected), 1.0 + 1e-9);
      }
    }
    EXPECT_EQ(make_folds(y, k, trial).assignment, plan.assignment);
  }
}

TEST(Folds, FallsBackWhenTooFewPositives) {
  Labels y({1, 0, 0, 0, 0, 0});
  auto plan = make_folds(y, 3, 1);
  EXPECT_FALSE(plan.stratified);
  EXPECT_FALSE(plan.warnings.empty());
}

TEST(Profile, GroupsAndRates) {
  Table t;
  t.add_column(Column::categorical("g", {"M", "M", "F", "F"}));
  t.add_column(Column::categorical("h", {"a", "b", "c", "a"}));
  t.add_column(Column::numeric("n", {1.0, 2.0, 3.0, 4.0}));
  Labels y({1, 0, 0, 0});
  auto rows = profile(t, {"g"}, &y);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].group[0], "F");
  EXPECT_EQ(rows[0].count, 2u);
  EXPECT_DOUBLE_EQ(rows[1].label_rate, 0.5);
  EXPECT_THROW(profile(t, {"n"}), DataError);
  EXPECT_TRUE(profile(Table{}, {}).empty());
}

TEST(Profile, DistinctPairCount) {
  Table t;
  t.add_column(Column::categorical("g", {"M", "M", "M", "F", "F", "F", "M"}));
  t.add_column(Column::categorical("h", {"a", "b", "c", "a", "b", "c", "a"}));
  EXPECT_EQ(profile(t, {"g", "h"}).size(), 6u);
}
