// End-to-end acceptance gate. Each criterion prints exactly one PASS/FAIL
// line; the exit code is the number of failures. Tolerances and runtime
// budgets are pinned here, next to the checks they govern.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "keyopt/critic.hpp"
#include "keyopt/distances.hpp"
#include "keyopt/geometry.hpp"
#include "keyopt/keygnet.hpp"
#include "keyopt/loss.hpp"
#include "keyopt/optimizer.hpp"
#include "keyopt/posesim.hpp"
#include "keyopt/rng.hpp"
#include "keyopt/sampling.hpp"
#include "keyopt/serialize.hpp"
#include "keyopt/votes.hpp"
#include "oracles.hpp"

using namespace keyopt;

namespace {

int g_failures = 0;

class Criterion {
 public:
  Criterion(int index, const char* name)
      : index_(index), name_(name), start_(std::chrono::steady_clock::now()) {}

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

  void check(bool ok, const std::string& why) {
    if (!ok && fail_reason_.empty()) fail_reason_ = why;
    passed_ &= ok;
  }

  void finish(const std::string& detail = "") {
    std::string tail = detail;
    if (!passed_ && !fail_reason_.empty())
      tail += (tail.empty() ? "" : "; ") + fail_reason_;
    std::printf("[%s] %2d %s%s%s%s (%.2fs)\n", passed_ ? "PASS" : "FAIL",
                index_, name_, tail.empty() ? "" : " [", tail.c_str(),
                tail.empty() ? "" : "]", elapsed());
    std::fflush(stdout);
    if (!passed_) ++g_failures;
  }

 private:
  int index_;
  const char* name_;
  std::chrono::steady_clock::time_point start_;
  bool passed_ = true;
  std::string fail_reason_;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::vector<double> random_samples(Rng& rng, std::size_t n, double lo,
                                   double hi) {
  std::vector<double> out(n);
  for (double& v : out) v = rng.uniform(lo, hi);
  return out;
}

// sum over keypoint pairs of the channel-averaged exact W1 between their
// vote channels; the quantity the searches minimize
double pairwise_w1_sum(const PointCloud& cloud, const KeypointSet& k,
                       VoteScheme scheme) {
  const VoteField field = compute_votes(cloud, k, scheme);
  const ScalarChannels ch = scalar_channels(field, axis_projections());
  double total = 0.0;
  for (std::size_t i = 0; i < k.n_k(); ++i)
    for (std::size_t j = i + 1; j < k.n_k(); ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < ch.n_channels; ++c)
        acc += wasserstein1_exact(ch.channel(i, c), ch.channel(j, c));
      total += acc / static_cast<double>(ch.n_channels);
    }
  return total;
}

// ---- 1: exact W1 against the LP transport oracle ---------------------

void criterion_w1_oracle() {
  Criterion c(1, "exact W1 matches the LP transport oracle");
  constexpr double kTol = 1e-9;
  constexpr double kBudgetSec = 10.0;
  Rng rng(101);
  double max_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t na = 1 + rng.index(8), nb = 1 + rng.index(8);
    const std::vector<double> a = random_samples(rng, na, -3.0, 3.0);
    const std::vector<double> b = random_samples(rng, nb, -3.0, 3.0);
    max_err = std::max(
        max_err, std::abs(wasserstein1_exact(a, b) - oracle::transport_lp_w1(a, b)));
  }
  c.check(max_err <= kTol, "max err " + num(max_err));
  c.check(c.elapsed() < kBudgetSec, "over the 10s budget");
  c.finish("200 pairs, max err " + num(max_err));
}

// ---- 2: metric axioms ------------------------------------------------

void criterion_metric_axioms() {
  Criterion c(2, "W1 obeys symmetry, identity, triangle inequality");
  constexpr double kTol = 1e-9;
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<double> a = random_samples(rng, 1 + rng.index(12), -2, 2);
    const std::vector<double> b = random_samples(rng, 1 + rng.index(12), -2, 2);
    const std::vector<double> x = random_samples(rng, 1 + rng.index(12), -2, 2);
    const double dab = wasserstein1_exact(a, b);
    const double dba = wasserstein1_exact(b, a);
    const double daa = wasserstein1_exact(a, a);
    const double dax = wasserstein1_exact(a, x);
    const double dxb = wasserstein1_exact(x, b);
    worst = std::max({worst, std::abs(dab - dba), daa, dab - (dax + dxb)});
  }
  c.check(worst <= kTol, "worst violation " + num(worst));
  c.finish("100 triples, worst violation " + num(worst));
}

// ---- 3: divergence anchors -------------------------------------------

void criterion_divergence_anchors() {
  Criterion c(3, "divergence anchor values");
  constexpr double kEps = 1e-12;
  const std::vector<double> p = {0.2, 0.3, 0.1, 0.4};

  const double kl_self = divergence(p, p, DivergenceKind::KullbackLeibler, kEps);
  c.check(std::abs(kl_self) <= 1e-15, "KL(P,P) = " + num(kl_self));

  const std::vector<double> one = {1.0, 0.0, 0.0, 0.0};
  const std::vector<double> other = {0.0, 1.0, 0.0, 0.0};
  const double js = divergence(one, other, DivergenceKind::JensenShannon, kEps);
  c.check(std::abs(js - std::log(2.0)) <= 1e-6,
          "JS(disjoint) = " + num(js));

  double entropy = 0.0;
  for (const double v : p) entropy -= v * std::log(v);
  const double ce = divergence(p, p, DivergenceKind::CrossEntropy, kEps);
  c.check(std::abs(ce - entropy) <= 1e-9, "CE(P,P) - H(P) = " + num(ce - entropy));

  c.finish("KL self " + num(kl_self) + ", JS disjoint " + num(js) +
           ", CE-H " + num(ce - entropy));
}

// ---- 4: critic ranking fidelity --------------------------------------

void criterion_critic_fidelity() {
  Criterion c(4, "trained critic ranks sample pairs like exact W1");
  constexpr std::size_t kSteps = 500;
  constexpr double kLr = 5e-3;
  constexpr double kLambda = 10.0;
  constexpr double kMinSpearman = 0.9;
  constexpr double kBudgetSec = 60.0;

  Rng rng(404);
  std::vector<double> exact, approx;
  for (int task = 0; task < 20; ++task) {
    const double mu = 0.2 + 0.2 * task;
    const double sa = rng.uniform(0.3, 1.0);
    const double sb = rng.uniform(0.3, 1.0);
    std::vector<double> a(32), b(32);
    for (double& v : a) v = rng.normal(0.0, sa);
    for (double& v : b) v = rng.normal(mu, sb);
    exact.push_back(wasserstein1_exact(a, b));
    const CriticTraining trained = train_critic(
        a, b, kSteps, kLr, kLambda, Rng::derive(4040, static_cast<std::uint64_t>(task)));
    // the witness sign is arbitrary (both D and -D satisfy the Lipschitz
    // surrogate), so the distance estimate is the magnitude
    approx.push_back(std::abs(
        critic_wasserstein(a, b, trained.model, kLambda,
                           Rng::derive(4041, static_cast<std::uint64_t>(task)))
            .difference));
  }
  const double rho = oracle::spearman(approx, exact);
  c.check(rho >= kMinSpearman, "spearman " + num(rho));
  c.check(c.elapsed() < kBudgetSec, "over the 60s budget");
  c.finish("20 tasks, spearman " + num(rho));
}

// ---- 5: gradients against finite differences -------------------------

void criterion_gradient_checks() {
  Criterion c(5, "analytic gradients match central finite differences");
  // The sorted-pairing similarity term is piecewise linear in the keypoint
  // coordinates; the keypoint stencil must stay narrower than the spacing
  // of its pairing switches or the difference quotient averages two pieces.
  constexpr double kKeypointH = 1e-6;
  constexpr double kEncoderH = 1e-5;
  constexpr double kLossRelTol = 1e-4;
  constexpr double kEncoderRelTol = 1e-3;

  // keypoint-space gradient of the combined loss, five random setups
  const VoteScheme schemes[] = {VoteScheme::Radial, VoteScheme::Offset,
                                VoteScheme::Vector, VoteScheme::Radial,
                                VoteScheme::Offset};
  int loss_checked = 0;
  bool loss_ok = true;
  for (int setup = 0; setup < 5; ++setup) {
    Rng rng(500 + static_cast<std::uint64_t>(setup) * 17);
    const Vec3 extents(rng.uniform(0.8, 2.0), rng.uniform(0.5, 1.5),
                       rng.uniform(0.3, 1.0));
    const ShapeKind kind = setup % 2 ? ShapeKind::Ellipsoid : ShapeKind::Box;
    const ObjectModel object = normalize_object(
        make_synthetic_object(kind, extents, 120, 900 + setup));
    const KeypointSet k = random_keypoints(object, RandomKeypointMode::Sphere,
                                           3 + setup % 2, 0.1, 77 + setup);
    LossConfig cfg;
    cfg.scheme = schemes[setup];
    const std::vector<ObjectModel> objects = {object};
    const std::vector<Vec3> grad = loss_gradient(k, objects, cfg);
    for (std::size_t j = 0; j < k.n_k(); ++j)
      for (int axis = 0; axis < 3; ++axis) {
        KeypointSet hi = k, lo = k;
        hi.coords[j][axis] += kKeypointH;
        lo.coords[j][axis] -= kKeypointH;
        const double fd = (combined_loss(hi, objects, cfg).total -
                           combined_loss(lo, objects, cfg).total) /
                          (2 * kKeypointH);
        loss_ok &= oracle::grad_close(grad[j][axis], fd, kLossRelTol);
        ++loss_checked;
      }
  }
  c.check(loss_ok, "keypoint gradient mismatch");

  // every encoder parameter, five random setups
  const struct {
    VoteScheme scheme;
    std::size_t hidden, nk, k;
    std::uint64_t seed;
  } setups[] = {
      {VoteScheme::Radial, 4, 3, 3, 3},
      {VoteScheme::Radial, 6, 4, 4, 5},
      {VoteScheme::Offset, 4, 3, 3, 7},
      {VoteScheme::Vector, 4, 3, 3, 11},
      {VoteScheme::Radial, 4, 3, 5, 13},
  };
  int enc_checked = 0;
  bool enc_ok = true;
  for (const auto& s : setups) {
    EncoderConfig arch;
    arch.k = s.k;
    arch.hidden = s.hidden;
    arch.n_keypoints = s.nk;
    const GraphEncoder enc = GraphEncoder::random_init(arch, s.seed);
    const ObjectModel object = normalize_object(
        make_synthetic_object(ShapeKind::Box, Vec3(1.5, 1, 0.6), 20, s.seed * 31));
    EncoderTrainConfig cfg;
    cfg.scheme = s.scheme;
    const auto [loss, grad] = encoder_loss_gradient(enc, object, 0.7, 0.3, cfg);
    enc_ok &= std::isfinite(loss) && grad.size() == enc.params.size();
    for (std::size_t i = 0; i < enc.params.size(); ++i) {
      GraphEncoder hi = enc, lo = enc;
      hi.params[i] += kEncoderH;
      lo.params[i] -= kEncoderH;
      const double fd =
          (encoder_loss_gradient(hi, object, 0.7, 0.3, cfg).first -
           encoder_loss_gradient(lo, object, 0.7, 0.3, cfg).first) /
          (2 * kEncoderH);
      enc_ok &= oracle::grad_close(grad[i], fd, kEncoderRelTol);
      ++enc_checked;
    }
  }
  c.check(enc_ok, "encoder parameter gradient mismatch");
  c.finish(std::to_string(loss_checked) + " keypoint partials, " +
           std::to_string(enc_checked) + " encoder partials");
}

// ---- 6: corner-search extremes on an elongated box -------------------

void criterion_corner_extremes() {
  Criterion c(6, "corner search extremes match enumeration; similar best votes");
  constexpr double kScoreTol = 1e-9;
  const ObjectModel model =
      make_synthetic_object(ShapeKind::Box, Vec3(2.0, 0.6, 0.4), 500, 3, "bar");
  const auto [best, worst] = exhaustive_corner_search(model, 3, VoteScheme::Radial);

  // independent enumeration: brute radial distances, CDF-sweep W1, straight
  // lexicographic scan with strict comparisons
  const ObjectModel normalized = normalize_object(model);
  const Aabb box = object_stats(normalized.cloud).bounds;
  std::vector<std::vector<double>> corner_votes(8);
  for (int corner = 0; corner < 8; ++corner)
    for (const Vec3& p : normalized.cloud.positions)
      corner_votes[corner].push_back((box.corner(corner) - p).norm());

  double best_score = 0.0, worst_score = 0.0;
  std::vector<int> best_corners, worst_corners;
  bool first = true;
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j)
      for (int k = j + 1; k < 8; ++k) {
        const double score =
            oracle::cdf_sweep_w1(corner_votes[i], corner_votes[j]) +
            oracle::cdf_sweep_w1(corner_votes[i], corner_votes[k]) +
            oracle::cdf_sweep_w1(corner_votes[j], corner_votes[k]);
        if (first || score < best_score) {
          best_score = score;
          best_corners = {i, j, k};
        }
        if (first || score > worst_score) {
          worst_score = score;
          worst_corners = {i, j, k};
        }
        first = false;
      }

  c.check(best.corners == best_corners, "best corner lists differ");
  c.check(worst.corners == worst_corners, "worst corner lists differ");
  c.check(std::abs(best.score - best_score) <= kScoreTol,
          "best score off by " + num(std::abs(best.score - best_score)));
  c.check(std::abs(worst.score - worst_score) <= kScoreTol,
          "worst score off by " + num(std::abs(worst.score - worst_score)));
  c.check(best.score < worst.score, "best not strictly below worst");

  // the best triple's per-keypoint vote histograms should sit at nearly the
  // same mean, the worst triple's at widely different ones
  const auto mean_variance = [&](const std::vector<int>& corners) {
    double lo = 1e300, hi = -1e300;
    for (const int corner : corners)
      for (const double v : corner_votes[corner]) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    std::vector<double> means;
    for (const int corner : corners) {
      const Histogram h = build_histogram(corner_votes[corner], 256, lo, hi);
      double mean = 0.0;
      for (std::size_t b = 0; b < h.bins(); ++b)
        mean += h.mass[b] * 0.5 * (h.bin_edges[b] + h.bin_edges[b + 1]);
      means.push_back(mean);
    }
    const double avg =
        std::accumulate(means.begin(), means.end(), 0.0) / means.size();
    double var = 0.0;
    for (const double m : means) var += (m - avg) * (m - avg);
    return var / means.size();
  };
  const double var_best = mean_variance(best.corners);
  const double var_worst = mean_variance(worst.corners);
  c.check(var_best < var_worst, "best variance " + num(var_best) +
                                    " not below worst " + num(var_worst));
  c.finish("best " + num(best.score) + " < worst " + num(worst.score) +
           ", mean variance " + num(var_best) + " vs " + num(var_worst));
}

// ---- 7: direct optimizer on the L-bracket ----------------------------

void criterion_optimizer_efficacy() {
  Criterion c(7, "direct optimizer cuts pairwise W1 while keeping separation");
  constexpr double kMinReduction = 0.30;
  constexpr double kMinSeparation = 0.2;
  constexpr double kBudgetSec = 120.0;

  const ObjectModel model = normalize_object(
      make_synthetic_object(ShapeKind::LBracket, Vec3(1.0, 1.0, 0.5), 600, 11));
  const KeypointSet init = fps_sample(model.cloud, 3, 0);
  const double before = pairwise_w1_sum(model.cloud, init, VoteScheme::Radial);

  OptimizeConfig cfg;
  cfg.steps = 200;
  cfg.lr = 0.05;
  cfg.min_separation = kMinSeparation;
  const SearchResult res = optimize_keypoints_direct(init, {model}, cfg);
  const double after =
      pairwise_w1_sum(model.cloud, res.keypoints, VoteScheme::Radial);

  const double reduction = 1.0 - after / before;
  c.check(reduction >= kMinReduction, "reduction " + num(reduction));
  const double min_dist = min_pairwise_distance(res.keypoints.coords);
  c.check(min_dist >= kMinSeparation, "min distance " + num(min_dist));
  bool monotone = true;
  for (std::size_t i = 1; i < res.trace.size(); ++i)
    monotone &= res.trace[i] <= res.trace[i - 1] + 1e-12;
  c.check(monotone, "trace not monotone");
  c.check(c.elapsed() < kBudgetSec, "over the 2min budget");
  c.finish("W1 sum " + num(before) + " -> " + num(after) + " (-" +
           num(reduction * 100.0) + "%), min dist " + num(min_dist));
}

// ---- 8: schedule anchors ---------------------------------------------

void criterion_schedule_anchors() {
  Criterion c(8, "loss weight and learning rate schedule anchors");
  c.check(weight_schedule(0) == std::pair(0.7, 0.3), "epoch 0 weights");
  c.check(weight_schedule(49) == std::pair(0.7, 0.3), "epoch 49 weights");
  c.check(weight_schedule(50) == std::pair(0.3, 0.7), "epoch 50 weights");
  EncoderTrainConfig cfg;
  c.check(encoder_learning_rate(cfg, 0) == 1e-3, "lr(0)");
  c.check(encoder_learning_rate(cfg, 50) == 1e-4, "lr(50)");
  c.check(encoder_learning_rate(cfg, 100) == 1e-5, "lr(100)");
  c.finish();
}

// ---- 9: pose chain ---------------------------------------------------

void criterion_pose_chain() {
  Criterion c(9, "pose chain recovers exact poses");
  Rng rng(909);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + rng.index(5);
    KeypointSet model_kps;
    for (std::size_t i = 0; i < n; ++i)
      model_kps.coords.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                    rng.uniform(-1, 1));
    const RigidTransform gt = random_rigid_transform(rng, 2.0);
    KeypointSet scene;
    for (const Vec3& k : model_kps.coords) scene.coords.push_back(gt.apply(k));
    const PoseEstimate est = horn_align(model_kps, scene);
    worst = std::max(worst,
                     (est.transform.rotation - gt.rotation).cwiseAbs().maxCoeff());
    worst = std::max(
        worst, (est.transform.translation - gt.translation).cwiseAbs().maxCoeff());
  }
  c.check(worst <= 1e-6, "alignment err " + num(worst));

  // noiseless simulated experiment, all three vote schemes
  const ObjectModel box =
      make_synthetic_object(ShapeKind::Box, Vec3(2, 1, 0.5), 300, 43);
  const ObjectModel norm = normalize_object(box);
  KeypointMethod method;
  method.name = "fps";
  KeypointSet inset = fps_sample(norm.cloud, 5, 0);
  for (Vec3& p : inset.coords) p *= 0.9;  // keep keypoints off the surface
  method.per_object = {inset};
  double max_add = 0.0;
  for (const VoteScheme scheme :
       {VoteScheme::Radial, VoteScheme::Offset, VoteScheme::Vector}) {
    ExperimentConfig cfg;
    cfg.scheme = scheme;
    cfg.trials = 5;
    cfg.seed = 47;
    const ExperimentReport rep = run_experiment({box}, {method}, cfg);
    for (const TrialRecord& rec : rep.records) {
      c.check(!rec.failed, "trial failed");
      max_add = std::max(max_add, rec.add);
    }
  }
  c.check(max_add < 1e-6, "noiseless add " + num(max_add));

  // pure translation: the displacement is the same at every point
  const Vec3 t(0.3, -0.4, 1.2);
  const RigidTransform shifted{Mat3::Identity(), t};
  const double add = add_distance(box, shifted, RigidTransform{}, false);
  c.check(std::abs(add - t.norm()) <= 1e-9,
          "translation add off by " + num(std::abs(add - t.norm())));

  c.finish("100 alignments (err " + num(worst) + "), noiseless add " +
           num(max_add));
}

// ---- 10: dispersion lowers rotation error ----------------------------

void criterion_dispersion_effect() {
  Criterion c(10, "dispersed keypoints cut rotation error under noise");
  constexpr double kBudgetSec = 60.0;
  const ObjectModel box =
      make_synthetic_object(ShapeKind::Box, Vec3(2, 1, 0.5), 400, 53);
  const ObjectModel norm = normalize_object(box);

  KeypointMethod collinear;
  collinear.name = "collinear";
  KeypointSet tight;
  tight.coords = {Vec3(-0.3, 0.001, 0), Vec3(0, -0.001, 0), Vec3(0.3, 0.002, 0)};
  collinear.per_object = {tight};
  KeypointMethod dispersed;
  dispersed.name = "dispersed";
  dispersed.per_object = {fps_sample(norm.cloud, 3, 0)};

  ExperimentConfig cfg;
  cfg.scheme = VoteScheme::Offset;
  cfg.noise_levels = {0.02};
  cfg.trials = 200;
  cfg.seed = 59;
  const ExperimentReport rep = run_experiment({box}, {collinear, dispersed}, cfg);
  const double coll = rep.aggregates[0].mean_rot_err_deg;
  const double disp = rep.aggregates[1].mean_rot_err_deg;
  c.check(disp < coll, "dispersed " + num(disp) + " not below " + num(coll));
  c.check(c.elapsed() < kBudgetSec, "over the 1min budget");
  c.finish("mean rotation error " + num(disp) + " vs " + num(coll) + " deg");
}

// ---- 11: encoder invariance and training descent ---------------------

void criterion_encoder_sanity() {
  Criterion c(11, "encoder permutation invariance and training descent");
  EncoderConfig arch;
  arch.k = 4;
  arch.hidden = 8;
  arch.n_keypoints = 3;
  const GraphEncoder enc = GraphEncoder::random_init(arch, 21);
  const ObjectModel object = normalize_object(
      make_synthetic_object(ShapeKind::Box, Vec3(1.5, 1, 0.6), 30, 23));
  PointCloud reversed;
  for (std::size_t i = object.cloud.size(); i-- > 0;)
    reversed.push_back(object.cloud.positions[i], object.cloud.colors[i]);

  const KeypointSet a = enc.forward(object.cloud);
  const KeypointSet b = enc.forward(reversed);
  double perm_diff = 0.0;
  for (std::size_t j = 0; j < a.n_k(); ++j)
    perm_diff = std::max(perm_diff, (a.coords[j] - b.coords[j]).norm());
  c.check(perm_diff == 0.0, "permutation diff " + num(perm_diff));

  EncoderTrainConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 5;
  const EncoderTraining run = train_encoder({object}, arch, cfg);
  c.check(run.loss_trace.size() == 50, "trace length");
  c.check(run.loss_trace.back() < run.loss_trace.front(),
          "loss " + num(run.loss_trace.front()) + " -> " +
              num(run.loss_trace.back()));
  c.finish("loss " + num(run.loss_trace.front()) + " -> " +
           num(run.loss_trace.back()));
}

// ---- 12: byte reproducibility ----------------------------------------

void criterion_determinism() {
  Criterion c(12, "seeded operations reproduce byte for byte");

  const auto battery = [] {
    std::string bytes;
    const ObjectModel box = make_synthetic_object(
        ShapeKind::LBracket, Vec3(1.2, 0.9, 0.4), 150, 5, "obj");
    bytes += cloud_to_ply(box.cloud);
    const ObjectModel norm = normalize_object(box);
    bytes += keypoints_to_json(
        random_keypoints(norm, RandomKeypointMode::Sphere, 4, 0.1, 9), {"obj"});
    bytes += keypoints_to_json(fps_sample(norm.cloud, 4, 1), {"obj"});

    Rng rng(33);
    const std::vector<double> a = random_samples(rng, 30, -1, 1);
    const std::vector<double> b = random_samples(rng, 30, 0, 2);
    const CriticTraining critic = train_critic(a, b, 50, 1e-3, 10.0, 3);
    for (const double v : critic.model.params) bytes += std::to_string(v) + ",";
    for (const double v : critic.objective_trace) bytes += std::to_string(v) + ";";

    EncoderConfig arch;
    arch.k = 3;
    arch.hidden = 4;
    arch.n_keypoints = 3;
    EncoderTrainConfig tcfg;
    tcfg.epochs = 2;
    tcfg.seed = 7;
    bytes += encoder_to_json(train_encoder({norm}, arch, tcfg).encoder);

    RansacConfig rcfg;
    rcfg.iterations = 20;
    rcfg.seed = 17;
    bytes += search_result_to_json(ransac_keypoint_search(box, 4, rcfg));

    KeypointMethod method;
    method.name = "fps";
    method.per_object = {fps_sample(norm.cloud, 4, 0)};
    ExperimentConfig ecfg;
    ecfg.scheme = VoteScheme::Radial;
    ecfg.noise_levels = {0.0, 0.05};
    ecfg.outlier_rate = 0.1;
    ecfg.outlier_spread = 0.4;
    ecfg.trials = 5;
    ecfg.seed = 19;
    const ExperimentReport rep = run_experiment({box}, {method}, ecfg);
    bytes += experiment_report_to_json(rep);
    bytes += experiment_report_to_csv(rep);
    return bytes;
  };

  const std::string first = battery();
  const std::string second = battery();
  c.check(first == second, "battery output differs between runs");
  c.finish(std::to_string(first.size()) + " bytes compared");
}

}  // namespace

int main() {
  criterion_w1_oracle();
  criterion_metric_axioms();
  criterion_divergence_anchors();
  criterion_critic_fidelity();
  criterion_gradient_checks();
  criterion_corner_extremes();
  criterion_optimizer_efficacy();
  criterion_schedule_anchors();
  criterion_pose_chain();
  criterion_dispersion_effect();
  criterion_encoder_sanity();
  criterion_determinism();

  std::printf("%d/12 criteria passed\n", 12 - g_failures);
  return g_failures;
}
