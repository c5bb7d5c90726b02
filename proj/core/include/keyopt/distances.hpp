#pragma once

#include <vector>

#include "keyopt/critic.hpp"
#include "keyopt/votes.hpp"

namespace keyopt {

// Exact first Wasserstein distance between two scalar samples with uniform
// weights. Equal sizes reduce to the mean absolute difference of the sorted
// samples; unequal sizes integrate |CDF_a - CDF_b| over the merged support.
double wasserstein1_exact(const std::vector<double>& a,
                          const std::vector<double>& b);

// W1 between two histograms that share a binning: sum over bins of
// |cumulative mass difference| * bin width.
double wasserstein1_hist(const Histogram& a, const Histogram& b);

enum class DivergenceKind { KullbackLeibler, JensenShannon, CrossEntropy };

// Divergence between two discrete mass vectors of equal length. Masses are
// smoothed by eps and renormalized before taking logs, so empty bins are
// safe. Natural log throughout.
double divergence(const std::vector<double>& p, const std::vector<double>& q,
                  DivergenceKind kind, double eps = 1e-12);
double divergence(const Histogram& a, const Histogram& b, DivergenceKind kind,
                  double eps = 1e-12);

}  // namespace keyopt
