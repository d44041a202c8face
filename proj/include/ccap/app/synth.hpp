#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ccap/core/error.hpp"
#include "ccap/core/random.hpp"
#include "ccap/data/table.hpp"

namespace ccap::app {

struct SynthConfig {
  std::size_t rows = 20000;
  double imbalance = 0.05;  // exact positive fraction, rounded to whole rows
  std::uint64_t seed = 42;
  int performance_months = 6;
};

struct SynthData {
  data::Table application;
  data::Table credit;
  std::vector<int> labels;  // planted label per application row
  std::vector<double> score;  // latent score before noise
};

namespace detail {

template <std::size_t N>
const char* pick(Rng& rng, const char* const (&names)[N], const double (&weights)[N]) {
  double u = rng.uniform();
  for (std::size_t i = 0; i + 1 < N; ++i) {
    if (u < weights[i]) return names[i];
    u -= weights[i];
  }
  return names[N - 1];
}

}  // namespace detail

// Applicant and monthly credit-status tables with a planted label. The latent
// score mixes two XORs (car/realty, gender/children), a recent-default x
// low-income gate, a squared age term and several step gates on employment,
// household and income; the top `imbalance` share of score + logistic noise is
// labelled bad.
inline SynthData synth(const SynthConfig& cfg) {
  if (cfg.rows < 100) throw UsageError("synth: rows must be at least 100");
  if (!(cfg.imbalance > 0.0 && cfg.imbalance < 0.5)) throw UsageError("synth: imbalance must be in (0, 0.5)");
  const int perf = std::max(cfg.performance_months, 1);
  const std::size_t n = cfg.rows;
  Rng rng(derive_seed(cfg.seed, SeedStream::synth, {0}));

  static const char* const genders[] = {"F", "M"};
  static const double gender_w[] = {0.67, 0.33};
  static const char* const income_types[] = {"Working", "Commercial associate", "Pensioner", "State servant",
                                             "Student"};
  static const double income_type_w[] = {0.515, 0.23, 0.17, 0.08, 0.005};
  static const char* const educations[] = {"Secondary / secondary special", "Higher education", "Incomplete higher",
                                           "Lower secondary", "Academic degree"};
  static const double education_w[] = {0.68, 0.27, 0.035, 0.012, 0.003};
  static const char* const families[] = {"Married", "Single / not married", "Civil marriage", "Separated", "Widow"};
  static const double family_w[] = {0.68, 0.13, 0.08, 0.06, 0.05};
  static const char* const housings[] = {"House / apartment", "With parents", "Municipal apartment",
                                         "Rented apartment", "Office apartment", "Co-op apartment"};
  static const double housing_w[] = {0.89, 0.048, 0.032, 0.016, 0.009, 0.005};
  static const char* const occupations[] = {"Laborers", "Core staff", "Sales staff", "Managers", "Drivers",
                                            "High skill tech staff", "Accountants", "Medicine staff"};
  static const double occupation_w[] = {0.25, 0.15, 0.14, 0.12, 0.09, 0.08, 0.07, 0.10};

  std::vector<std::optional<std::string>> id(n), gender(n), car(n), realty(n), income_type(n), education(n),
      family(n), housing(n), occupation(n);
  std::vector<std::optional<double>> children(n), income(n), days_birth(n), days_employed(n);
  std::vector<int> past_default(n, 0), recency(n, 0), history(n, 0);
  std::vector<double> score(n);

  for (std::size_t i = 0; i < n; ++i) {
    id[i] = std::to_string(5000001 + i);
    gender[i] = detail::pick(rng, genders, gender_w);
    const bool has_car = rng.uniform() < (*gender[i] == "M" ? 0.65 : 0.40);
    const bool has_realty = rng.uniform() < 0.5;
    car[i] = has_car ? "Y" : "N";
    realty[i] = has_realty ? "Y" : "N";

    const double u = rng.uniform();
    const int kids = u < 0.69 ? 0 : u < 0.89 ? 1 : u < 0.98 ? 2 : u < 0.995 ? 3 : 4;
    children[i] = double(kids);

    const double age = rng.uniform(21.0, 68.0);
    days_birth[i] = -std::floor(age * 365.25);
    income_type[i] = age >= 58.0 && rng.uniform() < 0.7 ? "Pensioner" : detail::pick(rng, income_types, income_type_w);
    const bool pensioner = *income_type[i] == "Pensioner";
    education[i] = detail::pick(rng, educations, education_w);
    family[i] = detail::pick(rng, families, family_w);
    housing[i] = detail::pick(rng, housings, housing_w);

    const double log_income = 12.0 + 0.45 * rng.normal() + (*education[i] == "Higher education" ? 0.2 : 0.0);
    const double income_value = std::round(std::exp(log_income) / 2250.0) * 2250.0;
    if (rng.uniform() >= 0.01) income[i] = std::max(income_value, 2250.0 * 10);
    const double z_income = (log_income - 12.0) / 0.45;

    double years_employed = 0.0;
    if (pensioner) {
      days_employed[i] = 365243.0;
    } else {
      years_employed = std::min(-6.0 * std::log(1.0 - rng.uniform()), age - 18.0);
      days_employed[i] = -std::floor(years_employed * 365.25) - 1.0;
    }
    if (!pensioner && rng.uniform() >= 0.09) occupation[i] = detail::pick(rng, occupations, occupation_w);

    // Defaults older than the performance window, `recency` months before
    // its start.
    past_default[i] = rng.uniform() < 0.22 ? 1 : 0;
    if (past_default[i]) recency[i] = int(rng.below(18));
    const int min_history = past_default[i] ? perf + recency[i] + 1 : 1;
    history[i] = std::max(min_history, 1 + int(rng.below(24)));

    const bool xor_assets = has_car != has_realty;
    const bool xor_household = (*gender[i] == "M") != (kids > 0);
    const bool recent_default = past_default[i] && recency[i] < 6;
    const bool short_job = !pensioner && years_employed < 1.0;
    const bool lone_parent = kids >= 2 && *family[i] != "Married" && *family[i] != "Civil marriage";
    const double a = (age - 44.0) / 13.0;
    const bool young_mid_income = a < 0.0 && std::abs(z_income) < 0.5;
    score[i] = 2.0 * xor_assets + 1.5 * xor_household + 2.0 * (recent_default && z_income < 0.0) +
               0.4 * (a * a - 0.33) + 1.5 * short_job + 1.0 * lone_parent + 1.0 * young_mid_income;
  }

  // Exactly k positives: the top-k of score plus logistic noise.
  const std::size_t k = std::size_t(std::llround(double(n) * cfg.imbalance));
  std::vector<double> noisy(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u;
    do {
      u = rng.uniform();
    } while (u <= 0.0);
    noisy[i] = score[i] + 0.6 * std::log(u / (1.0 - u));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return noisy[a] > noisy[b]; });
  std::vector<int> labels(n, 0);
  for (std::size_t r = 0; r < k; ++r) labels[order[r]] = 1;

  std::vector<std::optional<std::string>> credit_id, status;
  std::vector<std::optional<double>> months;
  static const char* const good[] = {"0", "C", "X", "1"};
  static const double good_w[] = {0.5, 0.3, 0.15, 0.05};
  static const char* const bad[] = {"2", "3", "4", "5"};
  static const double bad_w[] = {0.55, 0.2, 0.1, 0.15};
  for (std::size_t i = 0; i < n; ++i) {
    const int len = history[i];
    // Month of the planted bad token inside the performance window.
    const int bad_month = labels[i] ? -int(rng.below(std::uint64_t(std::min(perf, len)))) : 1;
    const int past_month = past_default[i] ? -(perf + recency[i]) : 1;
    for (int m = 0; m > -len; --m) {
      credit_id.push_back(id[i]);
      months.push_back(double(m));
      if (m == bad_month || m == past_month) {
        status.push_back(detail::pick(rng, bad, bad_w));
      } else {
        status.push_back(detail::pick(rng, good, good_w));
      }
    }
  }

  SynthData out;
  using data::Column;
  out.application.add_column(Column::categorical("ID", id, data::ColumnKind::identifier));
  out.application.add_column(Column::categorical("CODE_GENDER", gender));
  out.application.add_column(Column::categorical("FLAG_OWN_CAR", car));
  out.application.add_column(Column::categorical("FLAG_OWN_REALTY", realty));
  out.application.add_column(Column::numeric("CNT_CHILDREN", children));
  out.application.add_column(Column::numeric("AMT_INCOME_TOTAL", income));
  out.application.add_column(Column::categorical("NAME_INCOME_TYPE", income_type));
  out.application.add_column(Column::categorical("NAME_EDUCATION_TYPE", education));
  out.application.add_column(Column::categorical("NAME_FAMILY_STATUS", family));
  out.application.add_column(Column::categorical("NAME_HOUSING_TYPE", housing));
  out.application.add_column(Column::numeric("DAYS_BIRTH", days_birth));
  out.application.add_column(Column::numeric("DAYS_EMPLOYED", days_employed));
  out.application.add_column(Column::categorical("OCCUPATION_TYPE", occupation));
  out.credit.add_column(Column::categorical("ID", credit_id, data::ColumnKind::identifier));
  out.credit.add_column(Column::numeric("MONTHS_BALANCE", months));
  out.credit.add_column(Column::categorical("STATUS", status));
  out.labels = std::move(labels);
  out.score = std::move(score);
  return out;
}

}  // namespace ccap::app
