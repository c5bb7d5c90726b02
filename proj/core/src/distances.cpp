#include "keyopt/distances.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "keyopt/errors.hpp"

namespace keyopt {
namespace {

std::vector<double> sorted_checked(const std::vector<double>& xs,
                                   const char* which) {
  if (xs.empty())
    fail(ErrorKind::InvalidArgument,
         std::string("empty sample for Wasserstein distance (") + which + ")");
  for (const double x : xs)
    if (!std::isfinite(x))
      fail(ErrorKind::NonFiniteValue,
           std::string("non-finite value in sample ") + which);
  std::vector<double> s = xs;
  std::sort(s.begin(), s.end());
  return s;
}

void check_same_binning(const Histogram& a, const Histogram& b) {
  if (a.bin_edges.size() != b.bin_edges.size())
    fail(ErrorKind::InvalidArgument, "histograms have different bin counts");
  for (std::size_t i = 0; i < a.bin_edges.size(); ++i)
    if (std::abs(a.bin_edges[i] - b.bin_edges[i]) > 1e-12)
      fail(ErrorKind::InvalidArgument, "histograms have different bin edges");
}

std::vector<double> smoothed(const std::vector<double>& m, double eps) {
  double total = 0.0;
  for (const double x : m) {
    if (!(x >= 0.0))
      fail(ErrorKind::InvalidArgument, "negative mass in divergence input");
    total += x;
  }
  total += eps * static_cast<double>(m.size());
  if (total <= 0.0)
    fail(ErrorKind::InvalidArgument, "zero total mass in divergence input");
  std::vector<double> p(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) p[i] = (m[i] + eps) / total;
  return p;
}

double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    s += p[i] * std::log(p[i] / q[i]);
  return s;
}

}  // namespace

double wasserstein1_exact(const std::vector<double>& a,
                          const std::vector<double>& b) {
  const std::vector<double> sa = sorted_checked(a, "a");
  const std::vector<double> sb = sorted_checked(b, "b");
  if (sa.size() == sb.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) s += std::abs(sa[i] - sb[i]);
    return s / static_cast<double>(sa.size());
  }
  // integrate |CDF_a - CDF_b| across the merged support
  const double wa = 1.0 / static_cast<double>(sa.size());
  const double wb = 1.0 / static_cast<double>(sb.size());
  std::size_t ia = 0, ib = 0;
  double fa = 0.0, fb = 0.0;
  double prev = std::min(sa.front(), sb.front());
  double total = 0.0;
  while (ia < sa.size() || ib < sb.size()) {
    double x;
    if (ib >= sb.size() || (ia < sa.size() && sa[ia] <= sb[ib]))
      x = sa[ia];
    else
      x = sb[ib];
    total += std::abs(fa - fb) * (x - prev);
    prev = x;
    while (ia < sa.size() && sa[ia] == x) {
      fa += wa;
      ++ia;
    }
    while (ib < sb.size() && sb[ib] == x) {
      fb += wb;
      ++ib;
    }
  }
  return total;
}

double wasserstein1_hist(const Histogram& a, const Histogram& b) {
  check_same_binning(a, b);
  double cum_a = 0.0, cum_b = 0.0, total = 0.0;
  for (std::size_t i = 0; i < a.mass.size(); ++i) {
    cum_a += a.mass[i];
    cum_b += b.mass[i];
    total += std::abs(cum_a - cum_b) * (a.bin_edges[i + 1] - a.bin_edges[i]);
  }
  return total;
}

double divergence(const std::vector<double>& p, const std::vector<double>& q,
                  DivergenceKind kind, double eps) {
  if (p.size() != q.size() || p.empty())
    fail(ErrorKind::InvalidArgument,
         "divergence needs two equal-length non-empty mass vectors");
  const std::vector<double> ps = smoothed(p, eps);
  const std::vector<double> qs = smoothed(q, eps);
  switch (kind) {
    case DivergenceKind::KullbackLeibler:
      return kl(ps, qs);
    case DivergenceKind::JensenShannon: {
      std::vector<double> m(ps.size());
      for (std::size_t i = 0; i < ps.size(); ++i) m[i] = 0.5 * (ps[i] + qs[i]);
      return 0.5 * kl(ps, m) + 0.5 * kl(qs, m);
    }
    case DivergenceKind::CrossEntropy: {
      double s = 0.0;
      for (std::size_t i = 0; i < ps.size(); ++i) s -= ps[i] * std::log(qs[i]);
      return s;
    }
  }
  fail(ErrorKind::InvalidArgument, "unknown divergence kind");
}

double divergence(const Histogram& a, const Histogram& b, DivergenceKind kind,
                  double eps) {
  check_same_binning(a, b);
  return divergence(a.mass, b.mass, kind, eps);
}

}  // namespace keyopt
