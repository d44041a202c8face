#include <gtest/gtest.h>

#include <cmath>

#include "ccap/core/random.hpp"
#include "ccap/eval/report.hpp"

using namespace ccap;
using namespace ccap::eval;

namespace {

// O(n^2) pairwise statistic with ties counted half.
double pairwise_auc(const std::vector<int>& y, const std::vector<double>& s) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

struct Instance {
  std::vector<int> y;
  std::vector<double> s;
};

Instance random_instance(Rng& rng, std::size_t max_n = 100) {
  Instance in;
  const std::size_t n = 2 + rng.below(max_n - 1);
  const std::size_t levels = 1 + rng.below(12);  // few levels force ties
  for (std::size_t i = 0; i < n; ++i) {
    in.y.push_back(rng.uniform() < 0.4 ? 1 : 0);
    in.s.push_back(rng.uniform() < 0.5 ? double(rng.below(levels)) / double(levels) : rng.uniform());
  }
  in.y[0] = 1;
  in.y[1] = 0;
  return in;
}

}  // namespace

TEST(Confusion, Examples) {
  EXPECT_EQ(confusion(std::vector<int>{1, 0}, std::vector<double>{0.9, 0.1}), (ConfusionMatrix{1, 0, 1, 0}));
  auto all = confusion(std::vector<int>{1, 0, 0}, std::vector<double>{0.5, 0.5, 0.5});
  EXPECT_EQ(all.tp + all.fp, 3u);
  EXPECT_EQ(confusion(std::vector<int>{1, 1, 0, 0}, std::vector<double>{0.6, 0.4, 0.6, 0.4}),
            (ConfusionMatrix{1, 1, 1, 1}));
  EXPECT_THROW(confusion(std::vector<int>{1}, std::vector<double>{0.1, 0.2}), DataError);
  EXPECT_THROW(confusion(std::vector<int>{1}, std::vector<double>{0.1}, 1.0), UsageError);
}

TEST(Metrics, Examples) {
  auto m = classification_metrics({9, 1, 81, 9});
  EXPECT_DOUBLE_EQ(m.precision, 0.9);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_NEAR(m.f1, 0.6428571428571429, 1e-15);
  auto perfect = classification_metrics({4, 0, 6, 0});
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  EXPECT_EQ(perfect.kappa, 1.0);
  EXPECT_EQ(classification_metrics({25, 25, 25, 25}).kappa, 0.0);
}

TEST(Metrics, ConstantClassifierOnBalancedData) {
  std::vector<int> y{1, 1, 1, 0, 0, 0};
  std::vector<double> s(6, 0.9);
  auto m = classification_metrics(confusion(y, s));
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.kappa, 0.0);
}

TEST(Metrics, DegenerateCellsAreZeroAndFlagged) {
  auto m = classification_metrics({0, 0, 5, 5});
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_FALSE(m.precision_defined);
  EXPECT_FALSE(m.f1_defined);
  EXPECT_TRUE(m.recall_defined);
  EXPECT_TRUE(m.degenerate());
}

TEST(Metrics, ExhaustiveSmallSweepMatchesDirectFormulas) {
  for (int tp = 0; tp <= 3; ++tp) {
    for (int fp = 0; fp <= 3; ++fp) {
      for (int tn = 0; tn <= 3; ++tn) {
        for (int fn = 0; fn <= 3; ++fn) {
          const int n = tp + fp + tn + fn;
          if (n == 0) continue;
          auto m = classification_metrics({std::size_t(tp), std::size_t(fp), std::size_t(tn), std::size_t(fn)});
          const double p = tp + fp ? double(tp) / (tp + fp) : 0.0;
          const double r = tp + fn ? double(tp) / (tp + fn) : 0.0;
          const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
          const double po = double(tp + tn) / n;
          const double pe = (double(tp + fp) * (tp + fn) + double(fn + tn) * (fp + tn)) / (double(n) * n);
          const double k = pe < 1 ? (po - pe) / (1 - pe) : 0.0;
          EXPECT_NEAR(m.precision, p, 1e-15);
          EXPECT_NEAR(m.recall, r, 1e-15);
          EXPECT_NEAR(m.f1, f, 1e-15);
          EXPECT_NEAR(m.kappa, k, 1e-15);
          EXPECT_EQ(m.precision_defined, tp + fp > 0);
          EXPECT_EQ(m.recall_defined, tp + fn > 0);
          if (m.precision_defined && m.recall_defined && p + r > 0) {
            EXPECT_NEAR(m.f1, 2 * m.precision * m.recall / (m.precision + m.recall), 1e-12);
          }
          const bool both_classes = tp + fn > 0 && fp + tn > 0;
          if (both_classes) {
            EXPECT_EQ(m.kappa == 1.0, fp == 0 && fn == 0);
          }
        }
      }
    }
  }
}

TEST(Auc, Examples) {
  EXPECT_EQ(auc(std::vector<int>{1, 1, 0, 0}, std::vector<double>{0.9, 0.8, 0.2, 0.1}), 1.0);
  EXPECT_EQ(auc(std::vector<int>{0, 0, 1, 1}, std::vector<double>{0.9, 0.8, 0.2, 0.1}), 0.0);
  // Pairs (pos, neg): (.8,.8) tie = 1/2, (.8,.4) = 1, (.6,.8) = 0, (.6,.4) = 1.
  EXPECT_EQ(auc(std::vector<int>{1, 0, 1, 0}, std::vector<double>{0.8, 0.8, 0.6, 0.4}), 0.625);
  EXPECT_THROW(auc(std::vector<int>{1, 1}, std::vector<double>{0.2, 0.3}), DataError);
}

TEST(Auc, MatchesPairwiseOracle) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    auto in = random_instance(rng);
    EXPECT_NEAR(auc(in.y, in.s), pairwise_auc(in.y, in.s), 1e-12);
  }
}

TEST(Auc, InvariantUnderMonotoneTransformAndFlipsWithLabels) {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    auto in = random_instance(rng);
    std::vector<double> t;
    for (double v : in.s) t.push_back(std::exp(3 * v) - 7);
    std::vector<int> flipped;
    for (int v : in.y) flipped.push_back(1 - v);
    const double a = auc(in.y, in.s);
    EXPECT_EQ(auc(in.y, t), a);
    EXPECT_NEAR(auc(flipped, in.s), 1 - a, 1e-12);
  }
}

TEST(Curves, RocEndpointsMonotonicityAndArea) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    auto in = random_instance(rng);
    auto roc = curve_points(in.y, in.s, CurveKind::roc);
    EXPECT_EQ(roc.front().x, 0.0);
    EXPECT_EQ(roc.front().y, 0.0);
    EXPECT_EQ(roc.back().x, 1.0);
    EXPECT_EQ(roc.back().y, 1.0);
    for (std::size_t j = 1; j < roc.size(); ++j) {
      EXPECT_GE(roc[j].x, roc[j - 1].x);
      EXPECT_GE(roc[j].y, roc[j - 1].y);
      EXPECT_LT(roc[j].threshold, roc[j - 1].threshold);
    }
    EXPECT_NEAR(trapezoid_area(roc), auc(in.y, in.s), 1e-12);
  }
}

TEST(Curves, TwoDistinctScoresGiveThreeRocPoints) {
  auto roc = curve_points(std::vector<int>{1, 0, 1}, std::vector<double>{0.7, 0.2, 0.2}, CurveKind::roc);
  ASSERT_EQ(roc.size(), 3u);
  EXPECT_EQ(roc[1].x, 0.0);
  EXPECT_EQ(roc[1].y, 0.5);
}

TEST(Curves, PrFirstPointIsTopItemPrecision) {
  auto pr = curve_points(std::vector<int>{0, 1, 1}, std::vector<double>{0.9, 0.5, 0.1}, CurveKind::pr);
  ASSERT_EQ(pr.size(), 3u);
  EXPECT_EQ(pr[0].y, 0.0);
  EXPECT_EQ(pr[1].y, 0.5);
  EXPECT_EQ(pr[2].x, 1.0);
}

TEST(Recall, NonIncreasingInThreshold) {
  Rng rng(4);
  auto in = random_instance(rng);
  double prev = 2.0;
  for (int t = 1; t <= 99; ++t) {
    const auto m = classification_metrics(confusion(in.y, in.s, t / 100.0));
    EXPECT_LE(m.recall, prev);
    prev = m.recall;
  }
}

TEST(Report, RowJsonTableAndCurves) {
  std::vector<int> y{1, 0, 1, 0};
  std::vector<double> s{0.8, 0.8, 0.6, 0.4};
  EvalReport report;
  report.rows.push_back(evaluate_model("LR", y, s));
  report.rows.push_back(evaluate_model("Nothing", y, std::vector<double>{0.1, 0.1, 0.2, 0.3}));
  const auto& r = report.rows[0];
  EXPECT_EQ(r.auc, 0.625);
  EXPECT_EQ(r.confusion, (ConfusionMatrix{2, 1, 1, 0}));
  auto j = to_json(report);
  ASSERT_EQ(j["models"].size(), 2u);
  for (const char* key : {"precision", "recall", "f1", "auc", "kappa"}) {
    EXPECT_TRUE(j["models"][0].contains(key)) << key;
  }
  EXPECT_EQ(j["models"][1]["undefined_metrics"], nlohmann::ordered_json({"precision", "f1"}));
  const auto table = format_table(report);
  EXPECT_NE(table.find("F1-Score"), std::string::npos);
  EXPECT_NE(table.find("Kappa"), std::string::npos);
  EXPECT_NE(table.find("0.6250"), std::string::npos);
  EXPECT_EQ(format_curve(r.roc, CurveKind::roc).substr(0, 16), "fpr,tpr\n0,0\n0.5,");
  EXPECT_EQ(report.find("Nothing"), &report.rows[1]);
}
