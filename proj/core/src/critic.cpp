#include "keyopt/critic.hpp"

#include <cmath>
#include <string>

#include "keyopt/errors.hpp"
#include "keyopt/rng.hpp"
#include "keyopt/tape.hpp"

namespace keyopt {
namespace {

constexpr int H = CriticModel::kHidden;

// offsets into the flat parameter vector
constexpr std::size_t kW1 = 0;
constexpr std::size_t kB1 = kW1 + H;
constexpr std::size_t kG1 = kB1 + H;
constexpr std::size_t kO1 = kG1 + H;
constexpr std::size_t kW2 = kO1 + H;  // H x H, row per output unit
constexpr std::size_t kB2 = kW2 + H * H;
constexpr std::size_t kG2 = kB2 + H;
constexpr std::size_t kO2 = kG2 + H;
constexpr std::size_t kW3 = kO2 + H;
constexpr std::size_t kB3 = kW3 + H;
constexpr std::size_t kParamCount = kB3 + 1;

// value and input-derivative carried together through the network
template <class S>
struct Dual {
  S v;
  S d;
};

// Layer norm plus leaky ReLU over a pre-activation vector of duals,
// in place. gi/oi index the gain and offset blocks of p.
template <class S>
void norm_act_dual(const std::vector<S>& p, std::size_t gi, std::size_t oi,
                   std::vector<S>& av, std::vector<S>& ad) {
  using namespace ad;
  const double inv_n = 1.0 / H;
  S mean_v = vsum(std::span<const S>(av)) * inv_n;
  S mean_d = vsum(std::span<const S>(ad)) * inv_n;
  std::vector<S> cv(H), cd(H);
  for (int i = 0; i < H; ++i) {
    cv[i] = av[i] - mean_v;
    cd[i] = ad[i] - mean_d;
  }
  S var_v = vsumsq(std::span<const S>(cv), inv_n);
  S var_d = vdot(std::span<const S>(cv), std::span<const S>(cd)) * (2.0 * inv_n);
  S sigma = sqrtv(var_v + CriticModel::kNormEps);
  S inv = recip(sigma);
  S inv_d = -(var_d * 0.5) * inv * inv * inv;
  for (int i = 0; i < H; ++i) {
    S nv = cv[i] * inv * p[gi + i] + p[oi + i];
    S nd = (cd[i] * inv + cv[i] * inv_d) * p[gi + i];
    const double slope =
        value(nv) >= 0.0 ? 1.0 : CriticModel::kLeakySlope;
    av[i] = leaky(nv, CriticModel::kLeakySlope);
    ad[i] = nd * slope;
  }
}

template <class S>
Dual<S> forward_dual(const std::vector<S>& p, Dual<S> x) {
  using namespace ad;
  std::vector<S> av(H), dv(H);
  for (int i = 0; i < H; ++i) {
    av[i] = p[kW1 + i] * x.v + p[kB1 + i];
    dv[i] = p[kW1 + i] * x.d;
  }
  norm_act_dual(p, kG1, kO1, av, dv);

  std::vector<S> av2(H), dv2(H);
  for (int i = 0; i < H; ++i) {
    std::span<const S> row(p.data() + kW2 + static_cast<std::size_t>(i) * H, H);
    av2[i] = vdot(row, std::span<const S>(av)) + p[kB2 + i];
    dv2[i] = vdot(row, std::span<const S>(dv));
  }
  norm_act_dual(p, kG2, kO2, av2, dv2);

  std::span<const S> w3(p.data() + kW3, H);
  Dual<S> out;
  out.v = vdot(w3, std::span<const S>(av2)) + p[kB3];
  out.d = vdot(w3, std::span<const S>(dv2));
  return out;
}

// value-only forward, skips the derivative lanes
template <class S>
S forward_value(const std::vector<S>& p, S x) {
  using namespace ad;
  const double inv_n = 1.0 / H;
  std::vector<S> av(H);
  for (int i = 0; i < H; ++i) av[i] = p[kW1 + i] * x + p[kB1 + i];
  auto norm_act = [&](std::size_t gi, std::size_t oi, std::vector<S>& a) {
    S mean = vsum(std::span<const S>(a)) * inv_n;
    std::vector<S> c(H);
    for (int i = 0; i < H; ++i) c[i] = a[i] - mean;
    S sigma = sqrtv(vsumsq(std::span<const S>(c), inv_n) + CriticModel::kNormEps);
    S inv = recip(sigma);
    for (int i = 0; i < H; ++i)
      a[i] = leaky(c[i] * inv * p[gi + i] + p[oi + i], CriticModel::kLeakySlope);
  };
  norm_act(kG1, kO1, av);
  std::vector<S> av2(H);
  for (int i = 0; i < H; ++i) {
    std::span<const S> row(p.data() + kW2 + static_cast<std::size_t>(i) * H, H);
    av2[i] = vdot(row, std::span<const S>(av)) + p[kB2 + i];
  }
  norm_act(kG2, kO2, av2);
  return vdot(std::span<const S>(p.data() + kW3, H), std::span<const S>(av2)) +
         p[kB3];
}

std::vector<double> draw_interpolates(const std::vector<double>& a,
                                      const std::vector<double>& b, Rng& rng) {
  const std::size_t m = std::min(a.size(), b.size());
  std::vector<double> xs(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double xa = a[rng.index(a.size())];
    const double xb = b[rng.index(b.size())];
    const double u = rng.uniform();
    xs[i] = u * xa + (1.0 - u) * xb;
  }
  return xs;
}

void check_samples(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty())
    fail(ErrorKind::InvalidArgument, "critic distance needs non-empty samples");
}

}  // namespace

std::size_t CriticModel::param_count() { return kParamCount; }

CriticModel CriticModel::random_init(std::uint64_t seed) {
  CriticModel m;
  m.params.assign(kParamCount, 0.0);
  Rng rng(seed);
  const double s2 = 1.0 / std::sqrt(static_cast<double>(H));
  for (int i = 0; i < H; ++i) m.params[kW1 + i] = rng.normal();
  for (int i = 0; i < H * H; ++i) m.params[kW2 + i] = rng.normal() * s2;
  for (int i = 0; i < H; ++i) m.params[kW3 + i] = rng.normal() * s2;
  for (int i = 0; i < H; ++i) {
    m.params[kG1 + i] = 1.0;
    m.params[kG2 + i] = 1.0;
  }
  return m;
}

double CriticModel::forward(double x) const {
  return forward_value<double>(params, x);
}

std::pair<double, double> CriticModel::forward_with_input_grad(double x) const {
  Dual<double> out = forward_dual<double>(params, {x, 1.0});
  return {out.v, out.d};
}

CriticTerms critic_terms_for(const std::vector<double>& a,
                             const std::vector<double>& b,
                             const std::function<double(double)>& critic,
                             const std::function<double(double)>& critic_grad,
                             double lambda, std::uint64_t seed) {
  check_samples(a, b);
  CriticTerms t;
  double sa = 0.0, sb = 0.0;
  for (const double x : a) sa += critic(x);
  for (const double x : b) sb += critic(x);
  t.difference = sa / static_cast<double>(a.size()) -
                 sb / static_cast<double>(b.size());
  Rng rng(seed);
  const std::vector<double> xs = draw_interpolates(a, b, rng);
  double pen = 0.0;
  for (const double x : xs) {
    const double g = std::abs(critic_grad(x)) - 1.0;
    pen += g * g;
  }
  t.penalty = pen / static_cast<double>(xs.size());
  t.loss = t.difference + lambda * t.penalty;
  return t;
}

CriticTerms critic_wasserstein(const std::vector<double>& a,
                               const std::vector<double>& b,
                               const CriticModel& model, double lambda,
                               std::uint64_t seed) {
  return critic_terms_for(
      a, b, [&](double x) { return model.forward(x); },
      [&](double x) { return model.forward_with_input_grad(x).second; }, lambda,
      seed);
}

CriticTraining train_critic(const std::vector<double>& a,
                            const std::vector<double>& b, std::size_t steps,
                            double learning_rate, double lambda,
                            std::uint64_t seed) {
  check_samples(a, b);
  if (learning_rate <= 0.0)
    fail(ErrorKind::InvalidArgument, "critic learning rate must be positive");
  if (lambda < 0.0)
    fail(ErrorKind::InvalidArgument, "gradient penalty weight must be >= 0");

  CriticTraining out;
  out.model = CriticModel::random_init(seed);
  out.objective_trace.reserve(steps);
  Rng rng(Rng::derive(seed, 1));

  using ad::Tape;
  using ad::TVar;
  Tape tape;
  const std::size_t m = std::min(a.size(), b.size());
  for (std::size_t step = 0; step < steps; ++step) {
    tape.clear();
    std::vector<TVar> tp(kParamCount);
    for (std::size_t i = 0; i < kParamCount; ++i)
      tp[i] = tape.leaf(out.model.params[i]);

    std::vector<TVar> ya(a.size()), yb(b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      ya[i] = forward_value<TVar>(tp, tape.constant(a[i]));
    for (std::size_t i = 0; i < b.size(); ++i)
      yb[i] = forward_value<TVar>(tp, tape.constant(b[i]));
    TVar difference =
        ad::vsum(std::span<const TVar>(ya)) / static_cast<double>(a.size()) -
        ad::vsum(std::span<const TVar>(yb)) / static_cast<double>(b.size());

    std::vector<double> xs(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double xa = a[rng.index(a.size())];
      const double xb = b[rng.index(b.size())];
      const double u = rng.uniform();
      xs[i] = u * xa + (1.0 - u) * xb;
    }
    std::vector<TVar> pens(m);
    for (std::size_t i = 0; i < m; ++i) {
      Dual<TVar> x{tape.constant(xs[i]), tape.constant(1.0)};
      Dual<TVar> y = forward_dual<TVar>(tp, x);
      TVar g = ad::absv(y.d) - 1.0;
      pens[i] = g * g;
    }
    TVar penalty =
        ad::vsum(std::span<const TVar>(pens)) / static_cast<double>(m);

    TVar objective = difference - lambda * penalty;
    const double obj = ad::value(objective);
    if (!std::isfinite(obj))
      fail(ErrorKind::NonFiniteValue,
           "critic objective became non-finite at step " + std::to_string(step));
    out.objective_trace.push_back(obj);

    const std::vector<double> adj = tape.gradient(objective);
    for (std::size_t i = 0; i < kParamCount; ++i)
      out.model.params[i] += learning_rate * adj[tp[i].idx];
  }
  return out;
}

}  // namespace keyopt
