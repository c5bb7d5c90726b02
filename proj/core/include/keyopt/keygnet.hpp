#pragma once

#include <cstdint>
#include <vector>

#include "keyopt/geometry.hpp"
#include "keyopt/loss.hpp"

namespace keyopt {

// Exact nearest neighbors by index-ordered lists, self excluded, distance
// ties broken by lowest index.
struct KnnGraph {
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> neighbors;
};

KnnGraph build_knn_graph(const PointCloud& cloud, std::size_t k);

struct EncoderConfig {
  std::size_t k = 8;           // graph neighbors
  std::size_t hidden = 32;     // width of both edge-conv layers
  std::size_t n_keypoints = 8;
  bool use_color = false;      // node feature xyz or xyz+rgb
};

// Two edge-convolution layers over a dynamic nearest-neighbor graph, global
// max pool, affine head. Outputs pass through tanh scaled by 0.75, so every
// keypoint coordinate lies in [-0.75, 0.75] around the normalized object.
struct GraphEncoder {
  EncoderConfig arch;
  std::vector<double> params;  // flat, layout fixed by the implementation

  static GraphEncoder random_init(const EncoderConfig& arch,
                                  std::uint64_t seed);
  static std::size_t param_count(const EncoderConfig& arch);

  KeypointSet forward(const PointCloud& cloud) const;
};

// Intermediate activations, mainly for inspecting layer statistics.
struct EncoderTrace {
  std::vector<std::vector<double>> layer1;  // per node, hidden values
  std::vector<std::vector<double>> layer2;
  std::vector<double> pooled;
  KeypointSet output;
};

EncoderTrace encoder_forward_trace(const GraphEncoder& enc,
                                   const PointCloud& cloud);

struct EncoderTrainConfig {
  std::size_t epochs = 50;
  double lr0 = 1e-3;
  double lr_decay = 0.1;
  std::size_t decay_every = 50;
  std::size_t schedule_swap = 50;
  SimilarityKind similarity = SimilarityKind::ExactW1;
  VoteScheme scheme = VoteScheme::Radial;
  std::vector<Vec3> projections = axis_projections();
  double gamma = kDefaultGamma;
  std::uint64_t seed = 0;
};

struct EncoderTraining {
  GraphEncoder encoder;
  std::vector<double> loss_trace;  // mean combined loss per epoch
};

// Step-decayed learning rate: lr0 * decay^(epoch / decay_every).
double encoder_learning_rate(const EncoderTrainConfig& cfg, std::size_t epoch);

// Plain SGD over all parameters. One pass over the objects per epoch, in
// order, with reverse-mode gradients through the full forward pass and the
// combined loss; loss weights follow the epoch schedule.
EncoderTraining train_encoder(const std::vector<ObjectModel>& objects,
                              const EncoderConfig& arch,
                              const EncoderTrainConfig& cfg);

// Gradient of the combined loss at the current parameters for one object,
// plus the loss value. Exposed for finite-difference verification.
std::pair<double, std::vector<double>> encoder_loss_gradient(
    const GraphEncoder& enc, const ObjectModel& object, double alpha,
    double beta, const EncoderTrainConfig& cfg);

}  // namespace keyopt
