#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace leafsev {

// ---- special functions -----------------------------------------------------

double ln_gamma(double x);                            // x > 0
double reg_inc_beta(double a, double b, double x);    // a,b > 0, x in [0,1]
double erf_value(double x);
double normal_cdf(double x);

double t_cdf(double t, double df);
double t_quantile(double p, double df);               // p in (0,1), bisection on t_cdf
double f_survival(double f, double df1, double df2);  // P(F > f)

// P(Q > q) for the studentized range with k groups and df error degrees of
// freedom, by two-level numerical integration.
double studentized_range_survival(double q, int k, double df);

// ---- tests -----------------------------------------------------------------

struct AnovaTable {
  int df_between = 0;
  int df_within = 0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  double ms_between = 0.0;
  double ms_within = 0.0;
  double f = 0.0;
  double p = 1.0;
};

AnovaTable one_way_anova(const std::vector<std::vector<double>>& groups);

enum class TestKind { kZProp, kKs, kTukeyPair };

struct TestResult {
  TestKind kind = TestKind::kZProp;
  double statistic = 0.0;
  double p = 1.0;
  std::string label_a;  // pair labels for Tukey, sample label otherwise
  std::string label_b;
  bool significant = false;
  std::string note;
};

// One result per group pair; Tukey-Kramer standard error for unequal sizes.
std::vector<TestResult> tukey_hsd(const std::vector<std::vector<double>>& groups,
                                  double alpha = 0.05,
                                  const std::vector<std::string>* labels = nullptr);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double confidence = 0.0;
};

Interval mean_ci(const std::vector<double>& sample, double confidence);

TestResult two_prop_z(std::int64_t x1, std::int64_t n1, std::int64_t x2, std::int64_t n2);

struct KsOptions {
  // Default p-value is the asymptotic Kolmogorov series, which understates
  // divergence when mean/sd come from the sample itself; the Monte Carlo
  // correction accounts for that estimation.
  bool lilliefors = false;
  int mc_samples = 20000;
  std::uint64_t mc_seed = 12345;
};

TestResult ks_normality(const std::vector<double>& sample, const KsOptions& opts = {});

// ---- CSV input (one column per treatment, header row = names) ---------------

struct TreatmentTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> groups;  // per column, blanks skipped
};

TreatmentTable parse_treatment_csv(std::string_view text);

}  // namespace leafsev
