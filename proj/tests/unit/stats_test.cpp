#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"

#include "leafsev/errors.hpp"
#include "leafsev/stats.hpp"

using namespace leafsev;

namespace {

// Maclaurin series for erf; converges fast on |x| <= 3.
double erf_series(double x) {
  const double kTwoOverSqrtPi = 1.1283791670955126;
  double term = x;
  double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= -x * x / n;
    sum += term / (2 * n + 1);
    if (std::fabs(term) < 1e-18) break;
  }
  return kTwoOverSqrtPi * sum;
}

// Stirling series with argument shift; independent of the Lanczos fit used in
// the library.
double ln_gamma_stirling(double x) {
  double shift = 0.0;
  while (x < 20.0) {
    shift -= std::log(x);
    x += 1.0;
  }
  const double kHalfLog2Pi = 0.9189385332046727;
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = inv / 12.0;
  series -= inv * inv2 / 360.0;
  series += inv * inv2 * inv2 / 1260.0;
  series -= inv * inv2 * inv2 * inv2 / 1680.0;
  return shift + (x - 0.5) * std::log(x) - x + kHalfLog2Pi + series;
}

// Direct quadrature of the beta integrand under the x = sin^2(t) substitution,
// which removes both endpoint singularities for a, b >= 1/2:
//   I_x(a,b) = 2/B(a,b) * Int_0^asin(sqrt(x)) sin(t)^(2a-1) cos(t)^(2b-1) dt
double reg_inc_beta_quadrature(double a, double b, double x) {
  const double upper = std::asin(std::sqrt(x));
  const int n = 20000;
  const double h = upper / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {  // Simpson on each panel
    const double t0 = i * h, t2 = (i + 1) * h, t1 = 0.5 * (t0 + t2);
    auto f = [&](double t) {
      return std::pow(std::sin(t), 2.0 * a - 1.0) * std::pow(std::cos(t), 2.0 * b - 1.0);
    };
    sum += (f(t0) + 4.0 * f(t1) + f(t2)) * h / 6.0;
  }
  const double ln_beta = ln_gamma_stirling(a) + ln_gamma_stirling(b) - ln_gamma_stirling(a + b);
  return 2.0 * sum * std::exp(-ln_beta);
}

// Bisection inverse of the library's normal CDF; exact quantiles for building
// a sample that is as normal as a finite sample can be.
double normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("erf matches its Maclaurin series") {
  for (int i = 0; i <= 50; ++i) {
    const double x = -2.5 + 5.0 * i / 50.0;
    CHECK(erf_value(x) == doctest::Approx(erf_series(x)).epsilon(1e-10));
  }
  CHECK(erf_value(1.0) == doctest::Approx(0.8427007929497149).epsilon(1e-12));
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
}

TEST_CASE("ln_gamma matches a Stirling evaluation and exact factorials") {
  for (int i = 0; i <= 50; ++i) {
    const double x = 0.1 + i * 0.37;
    CHECK(ln_gamma(x) == doctest::Approx(ln_gamma_stirling(x)).epsilon(1e-10));
  }
  CHECK(ln_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(ln_gamma(5.0) == doctest::Approx(std::log(24.0)).epsilon(1e-13));
  CHECK(ln_gamma(0.5) == doctest::Approx(0.5 * std::log(M_PI)).epsilon(1e-13));
  CHECK_THROWS_AS(ln_gamma(0.0), std::invalid_argument);
  CHECK_THROWS_AS(ln_gamma(-1.0), std::invalid_argument);
}

TEST_CASE("regularized incomplete beta agrees with direct quadrature") {
  const double params[][2] = {{0.5, 0.5}, {1.0, 1.0}, {2.0, 3.0}, {3.0, 1.0},
                              {6.0, 0.5}, {0.5, 8.0}, {12.0, 12.0}};
  for (const auto& ab : params) {
    for (const double x : {0.05, 0.2, 0.5, 0.8, 0.95}) {
      const double expected = reg_inc_beta_quadrature(ab[0], ab[1], x);
      CHECK(reg_inc_beta(ab[0], ab[1], x) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
  CHECK(reg_inc_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-14));
  CHECK(reg_inc_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(reg_inc_beta(2.0, 3.0, 1.0) == 1.0);

  // Monotone in x.
  double prev = -1.0;
  for (int i = 0; i <= 20; ++i) {
    const double v = reg_inc_beta(2.5, 1.5, i / 20.0);
    CHECK(v >= prev);
    prev = v;
  }

  CHECK_THROWS_AS(reg_inc_beta(0.0, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(reg_inc_beta(1.0, 1.0, 1.5), std::invalid_argument);
}

TEST_CASE("t distribution: known quantile and round trips") {
  // Cauchy case has a closed form: cdf(t) = 1/2 + atan(t)/pi.
  for (const double t : {-3.0, -0.5, 0.0, 1.0, 7.0}) {
    CHECK(t_cdf(t, 1.0) == doctest::Approx(0.5 + std::atan(t) / M_PI).epsilon(1e-12));
  }
  CHECK(t_quantile(0.975, 1.0) == doctest::Approx(12.706204736).epsilon(1e-4));
  CHECK(t_quantile(0.975, 10.0) == doctest::Approx(2.2281388519649385).epsilon(1e-6));
  CHECK(t_quantile(0.5, 7.0) == doctest::Approx(0.0).epsilon(1e-9));

  for (const double df : {1.0, 4.0, 30.0}) {
    for (const double p : {0.01, 0.25, 0.6, 0.975, 0.999}) {
      CHECK(t_cdf(t_quantile(p, df), df) == doctest::Approx(p).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(t_quantile(0.0, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(t_quantile(1.0, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(t_cdf(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("F survival sanity") {
  CHECK(f_survival(0.0, 3.0, 10.0) == 1.0);
  CHECK(f_survival(-2.0, 3.0, 10.0) == 1.0);
  // F(1,df) equals t(df) squared: P(F > f) = 2 * P(T > sqrt(f)).
  for (const double f : {0.5, 1.0, 4.0}) {
    const double via_t = 2.0 * (1.0 - t_cdf(std::sqrt(f), 7.0));
    CHECK(f_survival(f, 1.0, 7.0) == doctest::Approx(via_t).epsilon(1e-10));
  }
}

TEST_CASE("anova: worked three-group table") {
  const std::vector<std::vector<double>> groups{{1, 2, 3}, {2, 3, 4}, {3, 4, 5}};
  const AnovaTable t = one_way_anova(groups);
  CHECK(t.df_between == 2);
  CHECK(t.df_within == 6);
  CHECK(t.ss_between == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(t.ss_within == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(t.ms_between == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(t.ms_within == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t.f == doctest::Approx(3.0).epsilon(1e-12));
  // With df (2, 6) the survival has a closed form: I_{1/2}(3, 1) = 1/8.
  CHECK(t.p == doctest::Approx(0.125).epsilon(1e-10));
}

TEST_CASE("anova: invariances and degeneracy") {
  const std::vector<std::vector<double>> groups{{4.2, 5.1, 4.9, 5.5},
                                                {6.0, 6.3, 5.8},
                                                {4.0, 4.4, 4.1, 4.6, 4.3}};
  const AnovaTable base = one_way_anova(groups);

  // Adding a constant to every observation changes nothing.
  auto shifted = groups;
  for (auto& g : shifted) {
    for (auto& x : g) x += 100.0;
  }
  const AnovaTable s = one_way_anova(shifted);
  CHECK(s.f == doctest::Approx(base.f).epsilon(1e-9));
  CHECK(s.p == doctest::Approx(base.p).epsilon(1e-9));

  // Scaling every observation leaves F alone (both SS scale together).
  auto scaled = groups;
  for (auto& g : scaled) {
    for (auto& x : g) x *= 3.5;
  }
  CHECK(one_way_anova(scaled).f == doctest::Approx(base.f).epsilon(1e-9));

  // Equal group means: no between-group signal at all.
  const AnovaTable flat = one_way_anova({{1.0, 3.0}, {0.0, 4.0}, {2.0 - 1.0, 2.0 + 1.0}});
  CHECK(flat.f == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(flat.p == 1.0);

  CHECK_THROWS_AS(one_way_anova({{1, 1, 1}, {1, 1, 1}}), DegenerateDataError);
  CHECK_THROWS_AS(one_way_anova({{1, 2, 3}}), std::invalid_argument);
  CHECK_THROWS_AS(one_way_anova({{1, 2}, {3}}), std::invalid_argument);
  CHECK_THROWS_AS(one_way_anova({}), std::invalid_argument);
}

TEST_CASE("studentized range: tabulated critical value") {
  // q_0.05(k=3, df=12) = 3.77 in standard tables, so the survival there is 5%.
  const double p = studentized_range_survival(3.77, 3, 12.0);
  CHECK(p > 0.045);
  CHECK(p < 0.055);
  CHECK(studentized_range_survival(0.0, 3, 12.0) == 1.0);
  CHECK(studentized_range_survival(-1.0, 3, 12.0) == 1.0);
  // Monotone decreasing in q.
  CHECK(studentized_range_survival(5.0, 3, 12.0) < p);
  CHECK_THROWS_AS(studentized_range_survival(1.0, 1, 12.0), std::invalid_argument);
  CHECK_THROWS_AS(studentized_range_survival(1.0, 3, 0.0), std::invalid_argument);
}

TEST_CASE("tukey: separated group stands out, equal groups do not") {
  const std::vector<std::vector<double>> groups{
      {5.0, 5.2, 4.8, 5.1, 4.9},
      {5.1, 5.0, 4.9, 5.2, 4.8},
      {9.0, 9.2, 8.8, 9.1, 8.9},
  };
  const std::vector<std::string> names{"ctrl", "water", "fungicide"};
  const auto results = tukey_hsd(groups, 0.05, &names);
  REQUIRE(results.size() == 3);

  for (const auto& r : results) {
    CHECK(r.kind == TestKind::kTukeyPair);
    const bool involves_third = r.label_a == "fungicide" || r.label_b == "fungicide";
    CHECK(r.significant == involves_third);
    if (involves_third) {
      CHECK(r.p < 0.001);
    } else {
      CHECK(r.p > 0.9);
    }
  }
  CHECK(results[0].label_a == "ctrl");
  CHECK(results[0].label_b == "water");

  // Default labels are positional.
  const auto anon = tukey_hsd(groups);
  CHECK(anon[0].label_a == "group1");
  CHECK(anon[2].label_b == "group3");

  CHECK_THROWS_AS(tukey_hsd(groups, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(tukey_hsd(groups, 1.0), std::invalid_argument);
  const std::vector<std::string> short_names{"a"};
  CHECK_THROWS_AS(tukey_hsd(groups, 0.05, &short_names), std::invalid_argument);
}

TEST_CASE("mean confidence interval") {
  // n=2: half-width is t_0.975(1) * s / sqrt(2) with s = sqrt(2), so 12.7062 * 1.
  const Interval ci = mean_ci({0.0, 2.0}, 0.95);
  CHECK(ci.confidence == 0.95);
  CHECK(ci.lower == doctest::Approx(1.0 - 12.706204736).epsilon(1e-4));
  CHECK(ci.upper == doctest::Approx(1.0 + 12.706204736).epsilon(1e-4));

  // Constant sample collapses to a point.
  const Interval flat = mean_ci({5.0, 5.0, 5.0}, 0.95);
  CHECK(flat.lower == 5.0);
  CHECK(flat.upper == 5.0);

  // Higher confidence nests the lower one.
  const std::vector<double> sample{3.1, 4.2, 2.8, 3.9, 3.5, 4.1};
  const Interval narrow = mean_ci(sample, 0.90);
  const Interval wide = mean_ci(sample, 0.99);
  CHECK(wide.lower < narrow.lower);
  CHECK(wide.upper > narrow.upper);
  CHECK(narrow.lower < mean_of(sample));
  CHECK(narrow.upper > mean_of(sample));

  CHECK_THROWS_AS(mean_ci({1.0}, 0.95), std::invalid_argument);
  CHECK_THROWS_AS(mean_ci(sample, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(mean_ci(sample, 1.0), std::invalid_argument);
}

TEST_CASE("two proportion z test") {
  // Equal proportions: no signal.
  const TestResult same = two_prop_z(5, 10, 5, 10);
  CHECK(same.statistic == 0.0);
  CHECK(same.p == 1.0);
  CHECK_FALSE(same.significant);

  // 8/10 vs 4/10: z = 0.4 / sqrt(0.6 * 0.4 * 0.2).
  const TestResult r = two_prop_z(8, 10, 4, 10);
  CHECK(r.kind == TestKind::kZProp);
  CHECK(r.statistic == doctest::Approx(1.8257418584).epsilon(1e-6));
  CHECK(r.p == doctest::Approx(0.0679).epsilon(1e-2));
  CHECK_FALSE(r.significant);

  // Swapping the samples negates z, same p.
  const TestResult sw = two_prop_z(4, 10, 8, 10);
  CHECK(sw.statistic == doctest::Approx(-r.statistic).epsilon(1e-12));
  CHECK(sw.p == doctest::Approx(r.p).epsilon(1e-12));

  // A crushing difference is significant.
  CHECK(two_prop_z(95, 100, 10, 100).significant);

  CHECK_THROWS_AS(two_prop_z(0, 10, 0, 10), DegenerateDataError);
  CHECK_THROWS_AS(two_prop_z(10, 10, 10, 10), DegenerateDataError);
  CHECK_THROWS_AS(two_prop_z(11, 10, 5, 10), std::invalid_argument);
  CHECK_THROWS_AS(two_prop_z(-1, 10, 5, 10), std::invalid_argument);
  CHECK_THROWS_AS(two_prop_z(1, 0, 5, 10), std::invalid_argument);
}

TEST_CASE("ks normality: clean normal sample passes") {
  // Exact plug-in quantiles: the empirical CDF hugs the fitted normal.
  std::vector<double> sample;
  const int n = 100;
  for (int i = 0; i < n; ++i) sample.push_back(normal_quantile((i + 0.5) / n));
  const TestResult r = ks_normality(sample);
  CHECK(r.kind == TestKind::kKs);
  CHECK(r.p > 0.2);
  CHECK_FALSE(r.significant);
  CHECK(r.note.find("estimated") != std::string::npos);
}

TEST_CASE("ks normality: gross outlier and the Monte Carlo option") {
  const std::vector<double> sample{0.0, 0.0, 0.0, 1000.0};
  // Asymptotic p: D = 0.4415, sqrt(4) * D = 0.883 lands near 0.42.
  const TestResult asym = ks_normality(sample);
  CHECK(asym.statistic == doctest::Approx(0.44149).epsilon(1e-3));
  CHECK(asym.p == doctest::Approx(0.41666).epsilon(1e-2));

  // The estimated-parameter null is much tighter; the same D is extreme there.
  KsOptions opts;
  opts.lilliefors = true;
  opts.mc_samples = 5000;
  const TestResult lil = ks_normality(sample, opts);
  CHECK(lil.statistic == doctest::Approx(asym.statistic).epsilon(1e-12));
  CHECK(lil.p < 0.05);
  CHECK(lil.significant);
  CHECK(lil.note.find("Monte Carlo") != std::string::npos);
}

TEST_CASE("ks normality: affine invariance and validation") {
  const std::vector<double> sample{1.2, 3.4, 0.7, 2.2, 5.1, 2.9, 1.8, 4.4};
  std::vector<double> moved = sample;
  for (auto& x : moved) x = 7.0 * x - 120.0;
  CHECK(ks_normality(moved).statistic ==
        doctest::Approx(ks_normality(sample).statistic).epsilon(1e-12));

  CHECK_THROWS_AS(ks_normality({1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(ks_normality({2.0, 2.0, 2.0, 2.0}), DegenerateDataError);
}

TEST_CASE("treatment csv parsing") {
  const TreatmentTable t = parse_treatment_csv(
      "control, drug_a ,drug_b\n"
      "1.5,2.5,3.5\n"
      "2.0,,4.0\n"
      "2.5,3.0,\n");
  REQUIRE(t.names.size() == 3);
  CHECK(t.names[1] == "drug_a");
  REQUIRE(t.groups.size() == 3);
  CHECK(t.groups[0] == std::vector<double>{1.5, 2.0, 2.5});
  CHECK(t.groups[1] == std::vector<double>{2.5, 3.0});
  CHECK(t.groups[2] == std::vector<double>{3.5, 4.0});

  // Blank row in the middle is skipped, not an error.
  const TreatmentTable mid = parse_treatment_csv("a,b\n1,2\n,\n3,4\n");
  CHECK(mid.groups[0] == std::vector<double>{1.0, 3.0});

  try {
    parse_treatment_csv("a,b\n1,2\n1,2,3\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("3 cells") != std::string::npos);
    CHECK(e.line() == 3);
  }

  CHECK_THROWS_AS(parse_treatment_csv("a,,c\n1,2,3\n"), ParseError);  // blank header
  CHECK_THROWS_AS(parse_treatment_csv("a,b\n1,oops\n"), ParseError);
  CHECK_THROWS_AS(parse_treatment_csv(""), ParseError);
}
