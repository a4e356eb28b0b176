#include "leafsev/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "leafsev/errors.hpp"

namespace leafsev {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

double phi_density(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

struct GaussLegendre {
  std::vector<double> node;    // on [-1, 1]
  std::vector<double> weight;
};

// Nodes by Newton iteration on the Legendre recurrence.
GaussLegendre gauss_legendre(int n) {
  GaussLegendre gl;
  gl.node.resize(n);
  gl.weight.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    gl.node[i] = -x;
    gl.node[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    gl.weight[i] = w;
    gl.weight[n - 1 - i] = w;
  }
  return gl;
}

const GaussLegendre& inner_rule() {
  static const GaussLegendre gl = gauss_legendre(64);
  return gl;
}

const GaussLegendre& outer_rule() {
  static const GaussLegendre gl = gauss_legendre(128);
  return gl;
}

// CDF of the range of k standard normals.
double range_cdf(double w, int k) {
  if (w <= 0.0) return 0.0;
  const GaussLegendre& gl = inner_rule();
  constexpr double kLo = -8.0;
  constexpr double kHi = 8.0;
  const double mid = 0.5 * (kHi + kLo);
  const double halfspan = 0.5 * (kHi - kLo);
  double sum = 0.0;
  for (std::size_t i = 0; i < gl.node.size(); ++i) {
    const double x = mid + halfspan * gl.node[i];
    const double span = normal_cdf(x + w) - normal_cdf(x);
    sum += gl.weight[i] * phi_density(x) * std::pow(span, k - 1);
  }
  return std::min(1.0, k * halfspan * sum);
}

double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double ks_statistic(const std::vector<double>& sorted, double mean, double sd) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf((sorted[i] - mean) / sd);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  return d;
}

double kolmogorov_survival(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct GroupStats {
  std::vector<double> means;
  std::vector<std::size_t> sizes;
};

GroupStats describe(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("anova: need at least two groups");
  GroupStats gs;
  for (const auto& g : groups) {
    if (g.size() < 2) throw std::invalid_argument("anova: each group needs at least two values");
    gs.means.push_back(sample_mean(g));
    gs.sizes.push_back(g.size());
  }
  return gs;
}

}  // namespace

double ln_gamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("ln_gamma: argument must be positive");
  // Lanczos approximation, g = 7.
  static const double kCoef[] = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7,
  };
  if (x < 0.5) {
    // Reflection keeps the series in its accurate range.
    return std::log(M_PI / std::sin(M_PI * x)) - ln_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double acc = kCoef[0];
  for (int i = 1; i < 9; ++i) acc += kCoef[i] / (z + i);
  const double t = z + 7.5;
  return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(acc);
}

double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("reg_inc_beta: a, b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("reg_inc_beta: x must be in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front =
      std::exp(a * std::log(x) + b * std::log1p(-x) - (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double erf_value(double x) { return std::erf(x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double t_cdf(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("t_cdf: df must be positive");
  const double x = df / (df + t * t);
  const double tail = 0.5 * reg_inc_beta(0.5 * df, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("t_quantile: p must be in (0, 1)");
  if (!(df > 0.0)) throw std::invalid_argument("t_quantile: df must be positive");
  if (p == 0.5) return 0.0;
  double lo = -1.0;
  double hi = 1.0;
  while (t_cdf(lo, df) > p && lo > -1e300) lo *= 2.0;
  while (t_cdf(hi, df) < p && hi < 1e300) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (t_cdf(mid, df) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double f_survival(double f, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) throw std::invalid_argument("f_survival: df must be positive");
  if (f <= 0.0) return 1.0;
  return reg_inc_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * f));
}

double studentized_range_survival(double q, int k, double df) {
  if (k < 2) throw std::invalid_argument("studentized_range_survival: k must be >= 2");
  if (!(df > 0.0)) throw std::invalid_argument("studentized_range_survival: df must be positive");
  if (q <= 0.0) return 1.0;

  // Outer variable is the pooled scale S = chi_df / sqrt(df); its density
  // concentrates near 1 with spread O(1/sqrt(df)).
  const double spread = 12.0 / std::sqrt(df);
  const double lo = std::max(0.0, 1.0 - spread);
  const double hi = 1.0 + spread;
  const double log_norm =
      std::log(2.0) + 0.5 * df * std::log(0.5 * df) - ln_gamma(0.5 * df);

  const GaussLegendre& gl = outer_rule();
  const double mid = 0.5 * (hi + lo);
  const double halfspan = 0.5 * (hi - lo);
  double cdf = 0.0;
  for (std::size_t i = 0; i < gl.node.size(); ++i) {
    const double s = mid + halfspan * gl.node[i];
    if (s <= 0.0) continue;
    const double log_density = log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
    cdf += gl.weight[i] * std::exp(log_density) * range_cdf(q * s, k);
  }
  cdf *= halfspan;
  return std::clamp(1.0 - cdf, 0.0, 1.0);
}

AnovaTable one_way_anova(const std::vector<std::vector<double>>& groups) {
  const GroupStats gs = describe(groups);

  double n_total = 0.0;
  double grand_sum = 0.0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    n_total += static_cast<double>(gs.sizes[i]);
    grand_sum += gs.means[i] * static_cast<double>(gs.sizes[i]);
  }
  const double grand = grand_sum / n_total;

  AnovaTable t;
  t.df_between = static_cast<int>(groups.size()) - 1;
  t.df_within = static_cast<int>(n_total) - static_cast<int>(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const double dm = gs.means[i] - grand;
    t.ss_between += static_cast<double>(gs.sizes[i]) * dm * dm;
    for (const double x : groups[i]) {
      const double d = x - gs.means[i];
      t.ss_within += d * d;
    }
  }
  if (t.ss_within <= 0.0) {
    throw DegenerateDataError("anova: zero within-group variance");
  }
  t.ms_between = t.ss_between / t.df_between;
  t.ms_within = t.ss_within / t.df_within;
  t.f = t.ms_between / t.ms_within;
  t.p = f_survival(t.f, t.df_between, t.df_within);
  return t;
}

std::vector<TestResult> tukey_hsd(const std::vector<std::vector<double>>& groups, double alpha,
                                  const std::vector<std::string>* labels) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("tukey_hsd: alpha must be in (0, 1)");
  if (labels && labels->size() != groups.size()) {
    throw std::invalid_argument("tukey_hsd: one label per group required");
  }
  const AnovaTable table = one_way_anova(groups);
  const GroupStats gs = describe(groups);
  const int k = static_cast<int>(groups.size());

  std::vector<TestResult> out;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      // Tukey-Kramer standard error handles unequal group sizes.
      const double se = std::sqrt(table.ms_within / 2.0 *
                                  (1.0 / static_cast<double>(gs.sizes[i]) +
                                   1.0 / static_cast<double>(gs.sizes[j])));
      TestResult r;
      r.kind = TestKind::kTukeyPair;
      r.statistic = std::fabs(gs.means[i] - gs.means[j]) / se;
      r.p = studentized_range_survival(r.statistic, k, table.df_within);
      r.label_a = labels ? (*labels)[i] : "group" + std::to_string(i + 1);
      r.label_b = labels ? (*labels)[j] : "group" + std::to_string(j + 1);
      r.significant = r.p < alpha;
      out.push_back(std::move(r));
    }
  }
  return out;
}

Interval mean_ci(const std::vector<double>& sample, double confidence) {
  if (sample.size() < 2) throw std::invalid_argument("mean_ci: need at least two values");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("mean_ci: confidence must be in (0, 1)");
  }
  const double n = static_cast<double>(sample.size());
  const double mean = sample_mean(sample);
  double ss = 0.0;
  for (const double x : sample) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) return Interval{mean, mean, confidence};
  const double t = t_quantile(0.5 * (1.0 + confidence), n - 1.0);
  const double half = t * sd / std::sqrt(n);
  return Interval{mean - half, mean + half, confidence};
}

TestResult two_prop_z(std::int64_t x1, std::int64_t n1, std::int64_t x2, std::int64_t n2) {
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("two_prop_z: sample sizes must be >= 1");
  if (x1 < 0 || x1 > n1 || x2 < 0 || x2 > n2) {
    throw std::invalid_argument("two_prop_z: counts must satisfy 0 <= x <= n");
  }
  const double pooled = static_cast<double>(x1 + x2) / static_cast<double>(n1 + n2);
  if (pooled == 0.0 || pooled == 1.0) {
    throw DegenerateDataError("two_prop_z: pooled proportion is 0 or 1");
  }
  const double p1 = static_cast<double>(x1) / static_cast<double>(n1);
  const double p2 = static_cast<double>(x2) / static_cast<double>(n2);
  const double se = std::sqrt(pooled * (1.0 - pooled) *
                              (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
  TestResult r;
  r.kind = TestKind::kZProp;
  r.statistic = (p1 - p2) / se;
  r.p = std::erfc(std::fabs(r.statistic) / kSqrt2);
  r.significant = r.p < 0.05;
  return r;
}

TestResult ks_normality(const std::vector<double>& sample, const KsOptions& opts) {
  if (sample.size() < 4) throw std::invalid_argument("ks_normality: need at least four values");
  const double n = static_cast<double>(sample.size());
  const double mean = sample_mean(sample);
  double ss = 0.0;
  for (const double x : sample) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) throw DegenerateDataError("ks_normality: zero sample variance");

  std::vector<double> sorted = sample;
  std::sort(sorted.begin(), sorted.end());
  const double d = ks_statistic(sorted, mean, sd);

  TestResult r;
  r.kind = TestKind::kKs;
  r.statistic = d;
  if (opts.lilliefors) {
    std::mt19937_64 rng(opts.mc_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> sim(sample.size());
    int at_least = 0;
    for (int rep = 0; rep < opts.mc_samples; ++rep) {
      for (double& v : sim) v = normal(rng);
      std::sort(sim.begin(), sim.end());
      const double m = sample_mean(sim);
      double s2 = 0.0;
      for (const double v : sim) s2 += (v - m) * (v - m);
      const double s = std::sqrt(s2 / (n - 1.0));
      if (ks_statistic(sim, m, s) >= d - 1e-15) ++at_least;
    }
    r.p = static_cast<double>(at_least + 1) / static_cast<double>(opts.mc_samples + 1);
    r.note = "parameters estimated; Monte Carlo null";
  } else {
    r.p = kolmogorov_survival(std::sqrt(n) * d);
    r.note = "parameters estimated";
  }
  r.significant = r.p < 0.05;
  return r;
}

TreatmentTable parse_treatment_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> cells;
  std::string cell;
  int line_no = 1;
  std::vector<int> row_lines;

  const auto trim = [](const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  const auto flush_row = [&]() {
    cells.push_back(trim(cell));
    cell.clear();
    bool all_blank = true;
    for (const auto& c : cells) {
      if (!c.empty()) all_blank = false;
    }
    if (!all_blank) {
      rows.push_back(cells);
      row_lines.push_back(line_no);
    }
    cells.clear();
  };

  for (const char c : text) {
    if (c == '\n') {
      flush_row();
      ++line_no;
    } else if (c == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  if (!cell.empty() || !cells.empty()) flush_row();

  if (rows.empty()) throw ParseError("CSV: no header row", 1);

  TreatmentTable table;
  table.names = rows[0];
  for (const auto& name : table.names) {
    if (name.empty()) throw ParseError("CSV: blank treatment name in header", row_lines[0]);
  }
  table.groups.resize(table.names.size());

  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != table.names.size()) {
      throw ParseError("CSV: row has " + std::to_string(rows[r].size()) + " cells, expected " +
                           std::to_string(table.names.size()),
                       row_lines[r]);
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const std::string& v = rows[r][c];
      if (v.empty()) continue;  // short columns leave trailing blanks
      try {
        std::size_t used = 0;
        const double parsed = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        table.groups[c].push_back(parsed);
      } catch (const std::exception&) {
        throw ParseError("CSV: '" + v + "' in column '" + table.names[c] + "' is not a number",
                         row_lines[r]);
      }
    }
  }
  return table;
}

}  // namespace leafsev
