#pragma once

#include <vector>

namespace marlsig::harness {

double mean(const std::vector<double>& x);
// Linear-interpolation quantile (type 7) of unsorted data; q in [0, 1].
double quantile(std::vector<double> x, double q);

struct Summary {
  int count = 0;
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

Summary summarize(const std::vector<double>& x);

struct RankSumResult {
  double u = 0.0;  // Mann-Whitney U of the first sample
  double z = 0.0;
  double p_value = 1.0;
};

// One-sided Wilcoxon rank-sum test of H1: x tends to exceed y. Normal approximation
// with tie-corrected variance and continuity correction.
RankSumResult wilcoxon_rank_sum_greater(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace marlsig::harness
