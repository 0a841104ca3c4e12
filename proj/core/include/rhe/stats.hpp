#pragma once

#include <cstdint>
#include <vector>

namespace rhe {

// Fraction of exact matches. Throws on empty or mismatched inputs.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// Macro-averaged F1 over num_classes classes. Per class, precision and
// recall come from the one-vs-rest confusion counts; a zero denominator
// anywhere makes that class contribute 0.
double f1_score(const std::vector<int>& predictions, const std::vector<int>& labels,
                int num_classes);

// Regularized incomplete beta function I_x(a,b), continued-fraction
// evaluation, absolute accuracy better than 1e-10.
double regularized_incomplete_beta(double a, double b, double x);

// Survival-based two-tailed p for a t statistic: I_x(df/2, 1/2) with
// x = df/(df + t^2).
double two_tailed_p(double t_statistic, double degrees_of_freedom);

enum class TTestVariant { POOLED, WELCH };

struct TTestResult {
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;
  TTestVariant variant = TTestVariant::POOLED;
};

// Unpaired two-tailed t-test. POOLED uses the pooled-variance Student
// statistic with df = n_a + n_b - 2; WELCH uses the Welch statistic with
// Welch-Satterthwaite df. Sample variance uses the n-1 denominator.
// Zero variance on both sides: equal means give t = 0, p = 1; differing
// means are a degenerate-variance error.
TTestResult t_test(const std::vector<double>& sample_a, const std::vector<double>& sample_b,
                   TTestVariant variant = TTestVariant::POOLED);

// Same test fed by summary statistics (mean, sample sd, n); n >= 2, sd >= 0.
TTestResult t_test_from_summary(double mean_a, double sd_a, int n_a, double mean_b, double sd_b,
                                int n_b, TTestVariant variant = TTestVariant::POOLED);

struct MetricSample {
  double accuracy = 0.0;
  double f1 = 0.0;
  std::uint64_t seed = 0;
};

struct SummaryStat {
  double mean = 0.0;
  double sd = 0.0;
};

// Mean and sample standard deviation (n-1). Values are summed in sorted
// order so the result is independent of input permutation. Requires >= 2
// values.
SummaryStat mean_sd(const std::vector<double>& values);

struct RunAggregate {
  SummaryStat accuracy;
  SummaryStat f1;
};

// Per-metric mean and sd over >= 2 runs.
RunAggregate aggregate_runs(const std::vector<MetricSample>& samples);

}  // namespace rhe
