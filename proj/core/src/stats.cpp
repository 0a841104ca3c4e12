#include "rhe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rhe {

namespace {

void check_pair(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.empty()) throw std::invalid_argument("metrics: empty input");
  if (predictions.size() != labels.size())
    throw std::invalid_argument("metrics: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(labels.size()) + " labels");
}

// Continued fraction for I_x(a,b), modified Lentz method.
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double f = d;
  for (int m = 1; m <= 500; ++m) {
    const int m2 = 2 * m;
    double num = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    f *= d * c;
    num = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    f *= delta;
    if (std::fabs(delta - 1.0) < eps) return f;
  }
  throw std::runtime_error("incomplete beta: continued fraction did not converge");
}

TTestResult finish(double t, double df, TTestVariant variant) {
  TTestResult r;
  r.t_statistic = t;
  r.degrees_of_freedom = df;
  r.p_value = two_tailed_p(t, df);
  r.variant = variant;
  return r;
}

}  // namespace

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  check_pair(predictions, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double f1_score(const std::vector<int>& predictions, const std::vector<int>& labels,
                int num_classes) {
  check_pair(predictions, labels);
  if (num_classes < 2) throw std::invalid_argument("metrics: num_classes must be >= 2");
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw std::invalid_argument("metrics: label " + std::to_string(labels[i]) +
                                  " outside [0," + std::to_string(num_classes) + ")");
    if (predictions[i] < 0 || predictions[i] >= num_classes)
      throw std::invalid_argument("metrics: prediction " + std::to_string(predictions[i]) +
                                  " outside [0," + std::to_string(num_classes) + ")");
  }

  double f1_sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const bool pred_c = predictions[i] == c, label_c = labels[i] == c;
      if (pred_c && label_c)
        ++tp;
      else if (pred_c)
        ++fp;
      else if (label_c)
        ++fn;
    }
    const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
    if (precision + recall > 0.0) f1_sum += 2.0 * precision * recall / (precision + recall);
  }
  return f1_sum / num_classes;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("incomplete beta: a and b must be positive");
  if (std::isnan(x)) throw std::invalid_argument("incomplete beta: x is NaN");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;

  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The continued fraction converges fast only on one side of the mean;
  // use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the other.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double two_tailed_p(double t_statistic, double degrees_of_freedom) {
  if (!(degrees_of_freedom > 0.0))
    throw std::invalid_argument("t-test: degrees of freedom must be positive");
  if (t_statistic == 0.0) return 1.0;
  const double t2 = t_statistic * t_statistic;
  const double x = degrees_of_freedom / (degrees_of_freedom + t2);
  return regularized_incomplete_beta(degrees_of_freedom / 2.0, 0.5, x);
}

TTestResult t_test(const std::vector<double>& sample_a, const std::vector<double>& sample_b,
                   TTestVariant variant) {
  if (sample_a.size() < 2 || sample_b.size() < 2)
    throw std::invalid_argument("t-test: each sample needs at least 2 values");
  const SummaryStat a = mean_sd(sample_a);
  const SummaryStat b = mean_sd(sample_b);
  return t_test_from_summary(a.mean, a.sd, static_cast<int>(sample_a.size()), b.mean, b.sd,
                             static_cast<int>(sample_b.size()), variant);
}

TTestResult t_test_from_summary(double mean_a, double sd_a, int n_a, double mean_b, double sd_b,
                                int n_b, TTestVariant variant) {
  if (n_a < 2 || n_b < 2) throw std::invalid_argument("t-test: each sample needs n >= 2");
  if (sd_a < 0.0 || sd_b < 0.0) throw std::invalid_argument("t-test: sd must be >= 0");

  const double diff = mean_a - mean_b;
  const double var_a = sd_a * sd_a, var_b = sd_b * sd_b;

  if (variant == TTestVariant::POOLED) {
    const double df = n_a + n_b - 2;
    const double pooled_var = ((n_a - 1) * var_a + (n_b - 1) * var_b) / df;
    if (pooled_var == 0.0) {
      if (diff == 0.0) return finish(0.0, df, variant);
      throw std::invalid_argument("t-test: zero pooled variance with differing means");
    }
    const double denom = std::sqrt(pooled_var) * std::sqrt(1.0 / n_a + 1.0 / n_b);
    return finish(diff / denom, df, variant);
  }

  const double se_a = var_a / n_a, se_b = var_b / n_b;
  const double se2 = se_a + se_b;
  if (se2 == 0.0) {
    if (diff == 0.0) return finish(0.0, static_cast<double>(n_a + n_b - 2), variant);
    throw std::invalid_argument("t-test: zero variance on both sides with differing means");
  }
  const double df = se2 * se2 / (se_a * se_a / (n_a - 1) + se_b * se_b / (n_b - 1));
  return finish(diff / std::sqrt(se2), df, variant);
}

SummaryStat mean_sd(const std::vector<double>& values) {
  if (values.size() < 2) throw std::invalid_argument("aggregate: need at least 2 values");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  const double mean = sum / static_cast<double>(sorted.size());
  double sq = 0.0;
  for (double v : sorted) sq += (v - mean) * (v - mean);
  SummaryStat s;
  s.mean = mean;
  s.sd = std::sqrt(sq / static_cast<double>(sorted.size() - 1));
  return s;
}

RunAggregate aggregate_runs(const std::vector<MetricSample>& samples) {
  if (samples.size() < 2) throw std::invalid_argument("aggregate: need at least 2 runs");
  std::vector<double> acc, f1;
  acc.reserve(samples.size());
  f1.reserve(samples.size());
  for (const auto& s : samples) {
    acc.push_back(s.accuracy);
    f1.push_back(s.f1);
  }
  return RunAggregate{mean_sd(acc), mean_sd(f1)};
}

}  // namespace rhe
