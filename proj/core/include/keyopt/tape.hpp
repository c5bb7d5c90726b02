#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace keyopt::ad {

// First-order reverse-mode tape over scalars. Local partials are evaluated
// at record time, so one reverse sweep yields exact gradients of any
// recorded output with respect to any recorded leaf. Besides unary/binary
// nodes there is a span node (n-ary weighted accumulation), which keeps dot
// products and reductions at one node each instead of one node per term.
class Tape;

struct TVar {
  Tape* tape = nullptr;
  std::uint32_t idx = 0;
};

class Tape {
 public:
  enum class Op : std::uint8_t { Leaf, Unary, Binary, Span };

  TVar leaf(double value) {
    nodes_.push_back({Op::Leaf, 0, 0, 0.0, 0.0});
    values_.push_back(value);
    return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }
  TVar constant(double value) { return leaf(value); }

  TVar unary(TVar a, double value, double partial) {
    nodes_.push_back({Op::Unary, a.idx, 0, partial, 0.0});
    values_.push_back(value);
    return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  TVar binary(TVar a, TVar b, double value, double pa, double pb) {
    nodes_.push_back({Op::Binary, a.idx, b.idx, pa, pb});
    values_.push_back(value);
    return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  // value = f(parents), with the given local partials
  TVar span(std::span<const TVar> parents, std::span<const double> partials,
            double value) {
    const auto offset = static_cast<std::uint32_t>(span_parents_.size());
    for (const auto& p : parents) span_parents_.push_back(p.idx);
    span_partials_.insert(span_partials_.end(), partials.begin(), partials.end());
    nodes_.push_back({Op::Span, offset, static_cast<std::uint32_t>(parents.size()),
                      0.0, 0.0});
    values_.push_back(value);
    return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  double value(TVar v) const { return values_[v.idx]; }
  std::size_t size() const { return nodes_.size(); }

  void clear() {
    nodes_.clear();
    values_.clear();
    span_parents_.clear();
    span_partials_.clear();
  }

  void reserve(std::size_t nodes) {
    nodes_.reserve(nodes);
    values_.reserve(nodes);
  }

  // Adjoints of `output` with respect to every node; read off the leaves.
  std::vector<double> gradient(TVar output) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    adj[output.idx] = 1.0;
    for (std::uint32_t i = output.idx + 1; i-- > 0;) {
      const double a = adj[i];
      if (a == 0.0) continue;
      const Node& n = nodes_[i];
      switch (n.op) {
        case Op::Leaf:
          break;
        case Op::Unary:
          adj[n.a] += a * n.da;
          break;
        case Op::Binary:
          adj[n.a] += a * n.da;
          adj[n.b] += a * n.db;
          break;
        case Op::Span:
          for (std::uint32_t t = 0; t < n.b; ++t)
            adj[span_parents_[n.a + t]] += a * span_partials_[n.a + t];
          break;
      }
    }
    return adj;
  }

 private:
  struct Node {
    Op op;
    std::uint32_t a, b;
    double da, db;
  };

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<std::uint32_t> span_parents_;
  std::vector<double> span_partials_;
};

inline double value(double x) { return x; }
inline double value(TVar v) { return v.tape->value(v); }

// arithmetic

inline TVar operator+(TVar a, TVar b) {
  return a.tape->binary(a, b, value(a) + value(b), 1.0, 1.0);
}
inline TVar operator-(TVar a, TVar b) {
  return a.tape->binary(a, b, value(a) - value(b), 1.0, -1.0);
}
inline TVar operator*(TVar a, TVar b) {
  return a.tape->binary(a, b, value(a) * value(b), value(b), value(a));
}
inline TVar operator/(TVar a, TVar b) {
  const double va = value(a), vb = value(b);
  return a.tape->binary(a, b, va / vb, 1.0 / vb, -va / (vb * vb));
}
inline TVar operator+(TVar a, double c) { return a.tape->unary(a, value(a) + c, 1.0); }
inline TVar operator+(double c, TVar a) { return a + c; }
inline TVar operator-(TVar a, double c) { return a + (-c); }
inline TVar operator-(double c, TVar a) { return a.tape->unary(a, c - value(a), -1.0); }
inline TVar operator*(TVar a, double c) { return a.tape->unary(a, value(a) * c, c); }
inline TVar operator*(double c, TVar a) { return a * c; }
inline TVar operator/(TVar a, double c) { return a * (1.0 / c); }
inline TVar operator/(double c, TVar a) {
  const double v = value(a);
  return a.tape->unary(a, c / v, -c / (v * v));
}
inline TVar operator-(TVar a) { return a * -1.0; }

// elementary functions; double overloads keep generic code compilable for
// a plain-double scalar type

inline TVar expv(TVar a) {
  const double e = std::exp(value(a));
  return a.tape->unary(a, e, e);
}
inline double expv(double a) { return std::exp(a); }

inline TVar logv(TVar a) { return a.tape->unary(a, std::log(value(a)), 1.0 / value(a)); }
inline double logv(double a) { return std::log(a); }

inline TVar sqrtv(TVar a) {
  const double s = std::sqrt(value(a));
  return a.tape->unary(a, s, 0.5 / s);
}
inline double sqrtv(double a) { return std::sqrt(a); }

inline TVar tanhv(TVar a) {
  const double t = std::tanh(value(a));
  return a.tape->unary(a, t, 1.0 - t * t);
}
inline double tanhv(double a) { return std::tanh(a); }

// |x| with subgradient 0 at the origin
inline TVar absv(TVar a) {
  const double v = value(a);
  return a.tape->unary(a, std::abs(v), v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
}
inline double absv(double a) { return std::abs(a); }

inline TVar recip(TVar a) {
  const double v = value(a);
  return a.tape->unary(a, 1.0 / v, -1.0 / (v * v));
}
inline double recip(double a) { return 1.0 / a; }

// max keeping the first argument on ties (deterministic subgradient)
inline TVar maxv(TVar a, TVar b) {
  return value(b) > value(a) ? b : a;
}
inline double maxv(double a, double b) { return b > a ? b : a; }

inline TVar leaky(TVar a, double slope) {
  const double v = value(a);
  const double s = v >= 0.0 ? 1.0 : slope;
  return a.tape->unary(a, v >= 0.0 ? v : slope * v, s);
}
inline double leaky(double a, double slope) { return a >= 0.0 ? a : slope * a; }

// reductions; the TVar versions record one span node

inline double vsum(std::span<const double> xs) {
  double s = 0.0;
  for (const double x : xs) s += x;
  return s;
}
inline TVar vsum(std::span<const TVar> xs) {
  double s = 0.0;
  std::vector<double> partials(xs.size(), 1.0);
  for (const auto& x : xs) s += value(x);
  return xs[0].tape->span(xs, partials, s);
}

inline double vdot(std::span<const double> w, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}
inline TVar vdot(std::span<const TVar> w, std::span<const TVar> x) {
  Tape* tape = w[0].tape;
  const std::size_t n = w.size();
  std::vector<TVar> parents(2 * n);
  std::vector<double> partials(2 * n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wv = value(w[i]), xv = value(x[i]);
    parents[2 * i] = w[i];
    parents[2 * i + 1] = x[i];
    partials[2 * i] = xv;
    partials[2 * i + 1] = wv;
    s += wv * xv;
  }
  return tape->span(parents, partials, s);
}

// dot of variable weights with constant features
inline double vdot(std::span<const double> w, const std::vector<double>& x) {
  return vdot(w, std::span<const double>(x));
}
inline TVar vdot(std::span<const TVar> w, const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += value(w[i]) * x[i];
  return w[0].tape->span(w, x, s);
}

// sum of squares scaled by `scale` (one span node)
inline double vsumsq(std::span<const double> xs, double scale) {
  double s = 0.0;
  for (const double x : xs) s += x * x;
  return s * scale;
}
inline TVar vsumsq(std::span<const TVar> xs, double scale) {
  std::vector<double> partials(xs.size());
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double v = value(xs[i]);
    partials[i] = 2.0 * scale * v;
    s += v * v;
  }
  return xs[0].tape->span(xs, partials, s * scale);
}

}  // namespace keyopt::ad
