#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace keyopt {

// Scalar critic network, 1 -> 32 -> 32 -> 1. Both hidden layers use layer
// normalization (with learned gain and offset) followed by leaky ReLU.
// Parameters live in one flat vector so training and serialization stay
// simple.
struct CriticModel {
  static constexpr int kHidden = 32;
  static constexpr double kLeakySlope = 0.01;
  static constexpr double kNormEps = 1e-12;

  std::vector<double> params;

  static std::size_t param_count();
  static CriticModel random_init(std::uint64_t seed);

  double forward(double x) const;
  // (value, d value / d input)
  std::pair<double, double> forward_with_input_grad(double x) const;
};

struct CriticTerms {
  double loss = 0.0;        // difference + lambda * penalty
  double difference = 0.0;  // mean critic value on a minus mean on b
  double penalty = 0.0;     // mean (|D'(x)| - 1)^2 over interpolates
};

struct CriticTraining {
  CriticModel model;
  // critic objective (difference - lambda * penalty) after each step
  std::vector<double> objective_trace;
};

// Critic-based distance terms between two scalar samples. Interpolates are
// drawn with the given seed: for each of min(|a|,|b|) draws, one point from
// each sample plus a uniform mixing weight.
CriticTerms critic_wasserstein(const std::vector<double>& a,
                               const std::vector<double>& b,
                               const CriticModel& model, double lambda,
                               std::uint64_t seed);

// Same terms for an arbitrary scalar critic with known input derivative.
CriticTerms critic_terms_for(const std::vector<double>& a,
                             const std::vector<double>& b,
                             const std::function<double(double)>& critic,
                             const std::function<double(double)>& critic_grad,
                             double lambda, std::uint64_t seed);

// Gradient ascent on (difference - lambda * penalty) starting from a fresh
// random init; fresh interpolates every step. Deterministic in the seed.
CriticTraining train_critic(const std::vector<double>& a,
                            const std::vector<double>& b, std::size_t steps,
                            double learning_rate, double lambda,
                            std::uint64_t seed);

}  // namespace keyopt
