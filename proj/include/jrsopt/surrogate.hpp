// Copyright 2026 the jrsopt authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef JRSOPT_SURROGATE_HPP
#define JRSOPT_SURROGATE_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "jrsopt/mipcore.hpp"
#include "jrsopt/scenariogen.hpp"

namespace jrsopt::surr {

/// Fixed-shape input image for the classifier: one aggregate solar channel,
/// P and Q load channels per bus, then one schedule channel per EV slot up
/// to the capacity e_max. Channels for slots beyond the real EV count are
/// exactly zero, so one model serves any fleet size up to e_max.
struct FeatureMap {
  Eigen::MatrixXd values;  // (1 + 2 * buses + e_max) x |T|, unnormalized
  int e = 0;               // real EV count
  int e_max = 0;
};

/// Raw encoding. The solar channel is the sum of per-PV availability for
/// one scenario; each real EV's channel holds the scheduled node id at the
/// stop's timespan index and zero elsewhere.
FeatureMap encode_features(const Eigen::MatrixXd& pv_max_kw,
                           const Eigen::MatrixXd& load_p_kw,
                           const Eigen::MatrixXd& load_q_kvar,
                           const scen::JobSchedule& schedule, int ev_count,
                           int e_max);

/// 0/1 bits of length e_max * d_ev, EV-major; padded blocks stay zero.
using LabelVector = Eigen::VectorXd;

/// Reads the binary block of each EV from a single-scenario solution.
LabelVector extract_labels(const mip::Solution& solution,
                           const mip::VariableIndex& index, int e_max);

/// Per-channel min-max statistics fitted on the training split.
struct NormStats {
  Eigen::VectorXd lo, hi;
};

/// Mean prediction probability per true class over a validation set.
struct Thresholds {
  double p0 = 1.0;  // mean PP over label-0 positions
  double p1 = 1.0;  // mean PP over label-1 positions
};

struct LayerSpec {
  int c_in = 0, c_out = 0, kernel = 0;
};

/// Convolutions along the time axis with channel mixing, ReLU between, and
/// a dense head squashed per output. All weights live in one flat vector.
struct SurrogateModel {
  int e_max = 0;
  int d_ev = 0;
  int timesteps = 0;
  int channels = 0;             // input channels = 1 + 2 * buses + e_max
  std::vector<LayerSpec> conv;  // in order; dense head follows implicitly
  Eigen::VectorXd params;
  NormStats norm;
  Thresholds thresholds;

  int output_len() const { return e_max * d_ev; }
};

struct Sample {
  Eigen::MatrixXd features;  // channels x |T|, raw
  LabelVector labels;        // e_max * d_ev
  int e = 0;
  double solve_seconds = 0.0;  // labelling cost of this sample
};

struct Dataset {
  int e_max = 0, d_ev = 0, timesteps = 0, channels = 0;
  std::vector<Sample> samples;

  void validate() const;
};

struct TrainConfig {
  std::vector<int> conv_channels{32, 32, 16};
  std::vector<int> kernels{5, 5, 3};
  double learning_rate = 1e-3;
  double weight_decay = 0.0;  // decoupled L2 shrink per step
  int epochs = 60;
  int batch_size = 16;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  bool class_weighting = true;  // inverse class frequency on the BCE terms
};

struct TrainEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  SurrogateModel model;
  std::vector<TrainEpoch> history;
  std::vector<int> validation_indices;  // the held-out 10%
};

/// Deterministic in (dataset order, cfg.seed). Fits normalization on the
/// training split, weights classes by inverse frequency, and pads nothing:
/// positions beyond a sample's real EV block carry zero loss weight. When a
/// validation split exists, the returned parameters come from the epoch with
/// the lowest validation loss; the history still covers every epoch.
TrainResult train(const Dataset& dataset, const TrainConfig& cfg);

/// Normalizes, masks padded channels back to zero, runs the network.
/// Output length e_max * d_ev, every entry strictly inside (0, 1).
Eigen::VectorXd predict(const SurrogateModel& model, const FeatureMap& features);

/// First e * d_ev entries: the real EV blocks.
Eigen::VectorXd strip_padding(const Eigen::VectorXd& probs, int e, int d_ev);

/// Mean PP per class, Eq-of-the-mean form: ŷ where the label is one and
/// 1 - ŷ where it is zero, padded positions excluded.
Thresholds calibrate_from_predictions(const std::vector<Eigen::VectorXd>& probs,
                                      const std::vector<LabelVector>& labels,
                                      const std::vector<int>& real_evs, int d_ev);
Thresholds calibrate_thresholds(const SurrogateModel& model,
                                const Dataset& validation);

/// Fix to 1 when ŷ >= p1, else to 0 when 1 - ŷ >= p0, else leave free.
/// Keys are positions within `probs` (caller adds scenario offsets).
mip::PartialAssignment filter_predictions(const Eigen::VectorXd& probs,
                                          const Thresholds& thresholds);

/// Retry step: raise the fix-to-one bar by 0.1 (capped), leave p0 alone.
Thresholds bump_threshold(const Thresholds& thresholds);

/// Batch loss and, when grad is non-null, its analytic gradient in the
/// flat parameter vector. Exposed so finite differences can audit it.
double loss_and_gradient(const SurrogateModel& model,
                         const std::vector<const Sample*>& batch, double w0,
                         double w1, Eigen::VectorXd* grad);

/// Fresh model with seeded He-style weights (used by train and tests).
SurrogateModel init_model(int channels, int timesteps, int e_max, int d_ev,
                          const TrainConfig& cfg, std::uint64_t seed);

void save_model(const SurrogateModel& model, const std::string& path);
SurrogateModel load_model(const std::string& path);
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace jrsopt::surr

#endif  // JRSOPT_SURROGATE_HPP
