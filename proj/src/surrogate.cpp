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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "jrsopt/rng.hpp"
#include "jrsopt/surrogate.hpp"

namespace jrsopt::surr {

namespace {

// Flat parameter vector layout: conv (W, b) pairs in order, then the dense
// head's (W, b). W blocks are stored column-major.
struct Segment {
  long w_off = 0, w_rows = 0, w_cols = 0, b_off = 0;
  long end() const { return b_off + w_rows; }
};

struct ParamLayout {
  std::vector<Segment> conv;
  Segment dense;
  long total = 0;
};

ParamLayout layout_of(const std::vector<LayerSpec>& conv, int timesteps,
                      int out_len) {
  ParamLayout lay;
  long at = 0;
  for (const auto& spec : conv) {
    Segment seg;
    seg.w_rows = spec.c_out;
    seg.w_cols = static_cast<long>(spec.c_in) * spec.kernel;
    seg.w_off = at;
    seg.b_off = at + seg.w_rows * seg.w_cols;
    at = seg.end();
    lay.conv.push_back(seg);
  }
  int c_last = conv.empty() ? 0 : conv.back().c_out;
  lay.dense.w_rows = out_len;
  lay.dense.w_cols = static_cast<long>(c_last) * timesteps;
  lay.dense.w_off = at;
  lay.dense.b_off = at + lay.dense.w_rows * lay.dense.w_cols;
  lay.total = lay.dense.end();
  return lay;
}

using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
using MutMat = Eigen::Map<Eigen::MatrixXd>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using MutVec = Eigen::Map<Eigen::VectorXd>;

ConstMat w_of(const Eigen::VectorXd& params, const Segment& seg) {
  return {params.data() + seg.w_off, seg.w_rows, seg.w_cols};
}
ConstVec b_of(const Eigen::VectorXd& params, const Segment& seg) {
  return {params.data() + seg.b_off, seg.w_rows};
}
MutMat w_of(Eigen::VectorXd& params, const Segment& seg) {
  return {params.data() + seg.w_off, seg.w_rows, seg.w_cols};
}
MutVec b_of(Eigen::VectorXd& params, const Segment& seg) {
  return {params.data() + seg.b_off, seg.w_rows};
}

// Unrolls a (channels x T) image so one GEMM applies a same-padded
// convolution: column t stacks the kernel window around t per channel.
Eigen::MatrixXd im2col(const Eigen::MatrixXd& x, int kernel) {
  int c = static_cast<int>(x.rows());
  int T = static_cast<int>(x.cols());
  int pad = (kernel - 1) / 2;
  Eigen::MatrixXd col = Eigen::MatrixXd::Zero(static_cast<long>(c) * kernel, T);
  for (int t = 0; t < T; ++t)
    for (int dk = 0; dk < kernel; ++dk) {
      int src = t + dk - pad;
      if (src < 0 || src >= T) continue;
      col.block(static_cast<long>(dk) * c, t, c, 1) = x.col(src);
    }
  return col;
}

// Adjoint of im2col: scatter-adds window gradients back onto the image.
Eigen::MatrixXd col2im(const Eigen::MatrixXd& dcol, int channels, int kernel) {
  int T = static_cast<int>(dcol.cols());
  int pad = (kernel - 1) / 2;
  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(channels, T);
  for (int t = 0; t < T; ++t)
    for (int dk = 0; dk < kernel; ++dk) {
      int src = t + dk - pad;
      if (src < 0 || src >= T) continue;
      dx.col(src) += dcol.block(static_cast<long>(dk) * channels, t, channels, 1);
    }
  return dx;
}

// im2col stacks window offset blocks of `c_in` rows; weights expect the
// (channel, offset) pairing used by layout_of, which matches because W's
// columns are indexed dk * c_in + ci in both places.

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  return std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0);
}

int buses_of(const SurrogateModel& m) {
  return (m.channels - 1 - m.e_max) / 2;
}

// Normalizes per channel with the training-split min-max and zeroes the
// channels of EV slots beyond the sample's real count.
Eigen::MatrixXd prepare_input(const SurrogateModel& m,
                              const Eigen::MatrixXd& raw, int e) {
  if (raw.rows() != m.channels || raw.cols() != m.timesteps)
    throw std::invalid_argument("feature shape does not match the model");
  if (e < 0 || e > m.e_max)
    throw std::invalid_argument("EV count outside [0, e_max]");
  Eigen::MatrixXd x(raw.rows(), raw.cols());
  for (int c = 0; c < m.channels; ++c) {
    double lo = m.norm.lo[c], hi = m.norm.hi[c];
    if (hi - lo > 1e-12)
      x.row(c) = (raw.row(c).array() - lo) / (hi - lo);
    else
      x.row(c).setZero();
  }
  int first_pad = 1 + 2 * buses_of(m) + e;
  for (int c = first_pad; c < m.channels; ++c) x.row(c).setZero();
  return x;
}

struct ForwardCache {
  std::vector<Eigen::MatrixXd> cols;  // per conv layer
  std::vector<Eigen::MatrixXd> zs;    // pre-activation per conv layer
  Eigen::VectorXd flat;               // dense input
  Eigen::VectorXd logits;
};

void forward(const SurrogateModel& m, const ParamLayout& lay,
             const Eigen::MatrixXd& input, ForwardCache* cache) {
  Eigen::MatrixXd x = input;
  cache->cols.clear();
  cache->zs.clear();
  for (size_t l = 0; l < m.conv.size(); ++l) {
    Eigen::MatrixXd col = im2col(x, m.conv[l].kernel);
    Eigen::MatrixXd z =
        (w_of(m.params, lay.conv[l]) * col).colwise() + b_of(m.params, lay.conv[l]);
    x = z.cwiseMax(0.0);
    cache->cols.push_back(std::move(col));
    cache->zs.push_back(std::move(z));
  }
  cache->flat = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  cache->logits =
      w_of(m.params, lay.dense) * cache->flat + b_of(m.params, lay.dense);
}

void check_sizes(const SurrogateModel& m) {
  if (m.conv.empty()) throw std::invalid_argument("model has no layers");
  if (m.norm.lo.size() != m.channels || m.norm.hi.size() != m.channels)
    throw std::invalid_argument("normalization stats do not match channels");
}

}  // namespace

FeatureMap encode_features(const Eigen::MatrixXd& pv_max_kw,
                           const Eigen::MatrixXd& load_p_kw,
                           const Eigen::MatrixXd& load_q_kvar,
                           const scen::JobSchedule& schedule, int ev_count,
                           int e_max) {
  if (ev_count < 0 || ev_count > e_max)
    throw std::invalid_argument("EV count exceeds the padding capacity");
  if (load_p_kw.rows() != load_q_kvar.rows() ||
      load_p_kw.cols() != load_q_kvar.cols())
    throw std::invalid_argument("P and Q load shapes differ");
  int buses = static_cast<int>(load_p_kw.rows());
  int T = static_cast<int>(load_p_kw.cols());
  if (pv_max_kw.size() > 0 && pv_max_kw.cols() != T)
    throw std::invalid_argument("solar horizon differs from the load horizon");

  FeatureMap fm;
  fm.e = ev_count;
  fm.e_max = e_max;
  fm.values = Eigen::MatrixXd::Zero(1 + 2 * buses + e_max, T);
  if (pv_max_kw.rows() > 0) fm.values.row(0) = pv_max_kw.colwise().sum();
  fm.values.middleRows(1, buses) = load_p_kw;
  fm.values.middleRows(1 + buses, buses) = load_q_kvar;
  for (const auto& stop : schedule.stops) {
    if (stop.ev < 0 || stop.ev >= ev_count)
      throw std::invalid_argument("schedule references EV " +
                                  std::to_string(stop.ev) +
                                  " outside the encoded fleet");
    if (stop.timespan < 0 || stop.timespan >= T)
      throw std::invalid_argument("schedule stop outside the horizon");
    fm.values(1 + 2 * buses + stop.ev, stop.timespan) =
        static_cast<double>(stop.node);
  }
  return fm;
}

LabelVector extract_labels(const mip::Solution& solution,
                           const mip::VariableIndex& index, int e_max) {
  if (index.scenario_count() != 1)
    throw std::invalid_argument("labels need a single-scenario solve");
  if (!mip::has_values(solution.status))
    throw std::invalid_argument("solution carries no values");
  if (solution.values.size() != index.total())
    throw std::invalid_argument("solution does not match the variable layout");
  if (index.ev_count() > e_max)
    throw std::invalid_argument("EV count exceeds the padding capacity");

  int d_ev = index.ev_stride();
  LabelVector bits = LabelVector::Zero(static_cast<long>(e_max) * d_ev);
  for (int k = 0; k < index.ev_count(); ++k)
    for (int j = 0; j < d_ev; ++j) {
      double v = solution.values[static_cast<long>(k) * d_ev + j];
      bits[static_cast<long>(k) * d_ev + j] = std::round(v) != 0.0 ? 1.0 : 0.0;
    }
  return bits;
}

void Dataset::validate() const {
  if (e_max <= 0 || d_ev <= 0 || timesteps <= 0 || channels <= 0)
    throw std::invalid_argument("dataset header fields must be positive");
  for (const auto& s : samples) {
    if (s.features.rows() != channels || s.features.cols() != timesteps)
      throw std::invalid_argument("sample feature shape mismatch");
    if (s.labels.size() != static_cast<long>(e_max) * d_ev)
      throw std::invalid_argument("sample label length mismatch");
    if (s.e < 0 || s.e > e_max)
      throw std::invalid_argument("sample EV count outside [0, e_max]");
    if (!s.features.allFinite())
      throw std::invalid_argument("sample features must be finite");
    for (long j = 0; j < s.labels.size(); ++j)
      if (s.labels[j] != 0.0 && s.labels[j] != 1.0)
        throw std::invalid_argument("labels must be 0/1 bits");
    for (long j = static_cast<long>(s.e) * d_ev; j < s.labels.size(); ++j)
      if (s.labels[j] != 0.0)
        throw std::invalid_argument("padded label block must be zero");
  }
}

SurrogateModel init_model(int channels, int timesteps, int e_max, int d_ev,
                          const TrainConfig& cfg, std::uint64_t seed) {
  if (cfg.conv_channels.empty() ||
      cfg.conv_channels.size() != cfg.kernels.size())
    throw std::invalid_argument("conv widths and kernels must pair up");
  SurrogateModel m;
  m.e_max = e_max;
  m.d_ev = d_ev;
  m.timesteps = timesteps;
  m.channels = channels;
  int c_in = channels;
  for (size_t l = 0; l < cfg.conv_channels.size(); ++l) {
    if (cfg.kernels[l] < 1 || cfg.kernels[l] % 2 == 0)
      throw std::invalid_argument("kernels must be odd for same padding");
    m.conv.push_back({c_in, cfg.conv_channels[l], cfg.kernels[l]});
    c_in = cfg.conv_channels[l];
  }
  auto lay = layout_of(m.conv, timesteps, e_max * d_ev);
  m.params = Eigen::VectorXd::Zero(lay.total);
  Rng gen(seed);
  for (size_t l = 0; l < lay.conv.size(); ++l) {
    double sd = std::sqrt(2.0 / static_cast<double>(lay.conv[l].w_cols));
    auto w = w_of(m.params, lay.conv[l]);
    for (long i = 0; i < w.size(); ++i) w.data()[i] = sd * gen.normal();
  }
  double sd = std::sqrt(2.0 / static_cast<double>(std::max(1L, lay.dense.w_cols)));
  auto wd = w_of(m.params, lay.dense);
  for (long i = 0; i < wd.size(); ++i) wd.data()[i] = sd * gen.normal();
  m.norm.lo = Eigen::VectorXd::Zero(channels);
  m.norm.hi = Eigen::VectorXd::Ones(channels);
  return m;
}

double loss_and_gradient(const SurrogateModel& model,
                         const std::vector<const Sample*>& batch, double w0,
                         double w1, Eigen::VectorXd* grad) {
  check_sizes(model);
  auto lay = layout_of(model.conv, model.timesteps, model.output_len());
  if (grad) grad->setZero(lay.total);

  double masked_total = 0.0;
  for (const Sample* s : batch)
    masked_total += static_cast<double>(s->e) * model.d_ev;
  if (masked_total == 0.0) return 0.0;

  double loss = 0.0;
  ForwardCache cache;
  for (const Sample* s : batch) {
    Eigen::MatrixXd input = prepare_input(model, s->features, s->e);
    forward(model, lay, input, &cache);

    long masked = static_cast<long>(s->e) * model.d_ev;
    Eigen::VectorXd dz = Eigen::VectorXd::Zero(cache.logits.size());
    for (long j = 0; j < masked; ++j) {
      double z = cache.logits[j];
      double y = s->labels[j];
      double w = y == 1.0 ? w1 : w0;
      loss += w * (y == 1.0 ? softplus(-z) : softplus(z));
      if (grad) dz[j] = w * (sigmoid(z) - y);
    }
    if (!grad) continue;

    dz /= masked_total;
    w_of(*grad, lay.dense).noalias() += dz * cache.flat.transpose();
    b_of(*grad, lay.dense) += dz;
    Eigen::VectorXd dflat = w_of(model.params, lay.dense).transpose() * dz;

    int c_last = model.conv.back().c_out;
    Eigen::MatrixXd dx =
        Eigen::Map<const Eigen::MatrixXd>(dflat.data(), c_last, model.timesteps);
    for (int l = static_cast<int>(model.conv.size()) - 1; l >= 0; --l) {
      Eigen::MatrixXd dzc =
          dx.cwiseProduct((cache.zs[static_cast<size_t>(l)].array() > 0.0)
                              .cast<double>()
                              .matrix());
      w_of(*grad, lay.conv[static_cast<size_t>(l)]).noalias() +=
          dzc * cache.cols[static_cast<size_t>(l)].transpose();
      b_of(*grad, lay.conv[static_cast<size_t>(l)]) += dzc.rowwise().sum();
      if (l > 0) {
        Eigen::MatrixXd dcol =
            w_of(model.params, lay.conv[static_cast<size_t>(l)]).transpose() * dzc;
        dx = col2im(dcol, model.conv[static_cast<size_t>(l)].c_in,
                    model.conv[static_cast<size_t>(l)].kernel);
      }
    }
  }
  return loss / masked_total;
}

TrainResult train(const Dataset& dataset, const TrainConfig& cfg) {
  dataset.validate();
  if (dataset.samples.empty())
    throw std::invalid_argument("cannot train on an empty dataset");

  long n = static_cast<long>(dataset.samples.size());
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng gen(cfg.seed);
  auto shuffle = [](std::vector<int>& v, Rng& r) {
    for (size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1],
                v[static_cast<size_t>(r.uniform_int(0, static_cast<int>(i) - 1))]);
  };
  auto split_rng = gen.fork("split");
  shuffle(order, split_rng);
  long n_val = n > 1 ? std::max<long>(1, std::lround(cfg.validation_fraction *
                                                     static_cast<double>(n)))
                     : 0;
  std::vector<int> val_idx(order.begin(), order.begin() + n_val);
  std::vector<int> train_idx(order.begin() + n_val, order.end());
  std::sort(val_idx.begin(), val_idx.end());

  // Per-channel min-max over the training split only.
  SurrogateModel model =
      init_model(dataset.channels, dataset.timesteps, dataset.e_max,
                 dataset.d_ev, cfg, gen.fork("init").next());
  model.norm.lo = Eigen::VectorXd::Constant(dataset.channels,
                                            std::numeric_limits<double>::max());
  model.norm.hi = Eigen::VectorXd::Constant(
      dataset.channels, std::numeric_limits<double>::lowest());
  for (int i : train_idx) {
    const auto& f = dataset.samples[static_cast<size_t>(i)].features;
    model.norm.lo = model.norm.lo.cwiseMin(f.rowwise().minCoeff());
    model.norm.hi = model.norm.hi.cwiseMax(f.rowwise().maxCoeff());
  }

  // Inverse-frequency class weights over the real (unpadded) label bits.
  double n1 = 0.0, n0 = 0.0;
  for (int i : train_idx) {
    const auto& s = dataset.samples[static_cast<size_t>(i)];
    long masked = static_cast<long>(s.e) * dataset.d_ev;
    double ones = s.labels.head(masked).sum();
    n1 += ones;
    n0 += static_cast<double>(masked) - ones;
  }
  double w0 = 1.0, w1 = 1.0;
  if (cfg.class_weighting) {
    double total = n0 + n1;
    w0 = n0 > 0.0 ? total / (2.0 * n0) : 1.0;
    w1 = n1 > 0.0 ? total / (2.0 * n1) : 1.0;
  }

  auto lay = layout_of(model.conv, model.timesteps, model.output_len());
  Eigen::VectorXd grad(lay.total), madam = Eigen::VectorXd::Zero(lay.total),
                  vadam = Eigen::VectorXd::Zero(lay.total);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long step = 0;

  auto batch_loss = [&](const std::vector<int>& idx, Eigen::VectorXd* g) {
    std::vector<const Sample*> batch;
    batch.reserve(idx.size());
    for (int i : idx) batch.push_back(&dataset.samples[static_cast<size_t>(i)]);
    return loss_and_gradient(model, batch, w0, w1, g);
  };

  TrainResult result;
  auto epoch_rng = gen.fork("epochs");
  Eigen::VectorXd best_params;
  double best_val = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(train_idx, epoch_rng);
    for (size_t at = 0; at < train_idx.size();
         at += static_cast<size_t>(cfg.batch_size)) {
      std::vector<int> idx(
          train_idx.begin() + static_cast<long>(at),
          train_idx.begin() +
              static_cast<long>(std::min(at + static_cast<size_t>(cfg.batch_size),
                                         train_idx.size())));
      batch_loss(idx, &grad);
      ++step;
      madam = b1 * madam + (1.0 - b1) * grad;
      vadam = b2 * vadam + (1.0 - b2) * grad.cwiseProduct(grad);
      double corr1 = 1.0 - std::pow(b1, static_cast<double>(step));
      double corr2 = 1.0 - std::pow(b2, static_cast<double>(step));
      model.params -=
          (cfg.learning_rate / corr1) *
          (madam.array() / ((vadam.array() / corr2).sqrt() + eps)).matrix();
      if (cfg.weight_decay > 0.0)
        model.params *= 1.0 - cfg.learning_rate * cfg.weight_decay;
    }
    TrainEpoch te;
    te.epoch = epoch;
    te.train_loss = batch_loss(train_idx, nullptr);
    te.val_loss = val_idx.empty() ? 0.0 : batch_loss(val_idx, nullptr);
    result.history.push_back(te);
    if (!val_idx.empty() && te.val_loss < best_val) {
      best_val = te.val_loss;
      best_params = model.params;
    }
  }

  // Hand back the best-generalizing epoch, not whatever the loop ended on.
  if (best_params.size() > 0) model.params = std::move(best_params);
  result.model = std::move(model);
  result.validation_indices = std::move(val_idx);
  return result;
}

Eigen::VectorXd predict(const SurrogateModel& model, const FeatureMap& features) {
  check_sizes(model);
  if (features.e_max != model.e_max)
    throw std::invalid_argument("feature padding capacity differs from model");
  auto lay = layout_of(model.conv, model.timesteps, model.output_len());
  Eigen::MatrixXd input = prepare_input(model, features.values, features.e);
  ForwardCache cache;
  forward(model, lay, input, &cache);
  Eigen::VectorXd probs(cache.logits.size());
  for (long j = 0; j < probs.size(); ++j)
    probs[j] = sigmoid(std::clamp(cache.logits[j], -30.0, 30.0));
  return probs;
}

Eigen::VectorXd strip_padding(const Eigen::VectorXd& probs, int e, int d_ev) {
  long keep = static_cast<long>(e) * d_ev;
  if (keep > probs.size())
    throw std::invalid_argument("cannot strip more than the vector holds");
  return probs.head(keep);
}

Thresholds calibrate_from_predictions(const std::vector<Eigen::VectorXd>& probs,
                                      const std::vector<LabelVector>& labels,
                                      const std::vector<int>& real_evs,
                                      int d_ev) {
  if (probs.size() != labels.size() || probs.size() != real_evs.size())
    throw std::invalid_argument("prediction, label, and EV lists must align");
  double sum0 = 0.0, sum1 = 0.0;
  long count0 = 0, count1 = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    long masked = static_cast<long>(real_evs[i]) * d_ev;
    if (masked > probs[i].size() || masked > labels[i].size())
      throw std::invalid_argument("masked region exceeds the vectors");
    for (long j = 0; j < masked; ++j) {
      if (labels[i][j] == 1.0) {
        sum1 += probs[i][j];
        ++count1;
      } else {
        sum0 += 1.0 - probs[i][j];
        ++count0;
      }
    }
  }
  if (count0 == 0 || count1 == 0)
    throw std::invalid_argument("calibration needs both classes present");
  return {sum0 / static_cast<double>(count0), sum1 / static_cast<double>(count1)};
}

Thresholds calibrate_thresholds(const SurrogateModel& model,
                                const Dataset& validation) {
  validation.validate();
  if (validation.e_max != model.e_max || validation.d_ev != model.d_ev)
    throw std::invalid_argument("validation layout differs from the model");
  std::vector<Eigen::VectorXd> probs;
  std::vector<LabelVector> labels;
  std::vector<int> evs;
  for (const auto& s : validation.samples) {
    FeatureMap fm{s.features, s.e, model.e_max};
    probs.push_back(predict(model, fm));
    labels.push_back(s.labels);
    evs.push_back(s.e);
  }
  return calibrate_from_predictions(probs, labels, evs, model.d_ev);
}

mip::PartialAssignment filter_predictions(const Eigen::VectorXd& probs,
                                          const Thresholds& thresholds) {
  if (thresholds.p0 < 0.0 || thresholds.p0 > 1.0 || thresholds.p1 < 0.0 ||
      thresholds.p1 > 1.0)
    throw std::invalid_argument("thresholds must lie in [0, 1]");
  mip::PartialAssignment out;
  for (long j = 0; j < probs.size(); ++j) {
    if (probs[j] >= thresholds.p1)
      out[static_cast<int>(j)] = 1;
    else if (1.0 - probs[j] >= thresholds.p0)
      out[static_cast<int>(j)] = 0;
  }
  return out;
}

Thresholds bump_threshold(const Thresholds& thresholds) {
  return {thresholds.p0, std::min(1.0, thresholds.p1 + 0.1)};
}

namespace {

constexpr char kModelMagic[9] = "JRSSURM1";
constexpr char kDataMagic[9] = "JRSSURD1";

void put_i64(std::ostream& out, std::int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_vec(std::ostream& out, const Eigen::VectorXd& v) {
  put_i64(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * v.size()));
}
std::int64_t get_i64(std::istream& in) {
  std::int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("truncated binary file");
  return v;
}
double get_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("truncated binary file");
  return v;
}
Eigen::VectorXd get_vec(std::istream& in) {
  std::int64_t n = get_i64(in);
  if (n < 0 || n > (1LL << 32)) throw std::runtime_error("corrupt vector length");
  Eigen::VectorXd v(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double) * n));
  if (!in) throw std::runtime_error("truncated binary file");
  return v;
}

}  // namespace

void save_model(const SurrogateModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kModelMagic, 8);
  put_i64(out, model.e_max);
  put_i64(out, model.d_ev);
  put_i64(out, model.timesteps);
  put_i64(out, model.channels);
  put_i64(out, static_cast<std::int64_t>(model.conv.size()));
  for (const auto& l : model.conv) {
    put_i64(out, l.c_in);
    put_i64(out, l.c_out);
    put_i64(out, l.kernel);
  }
  put_vec(out, model.params);
  put_vec(out, model.norm.lo);
  put_vec(out, model.norm.hi);
  put_f64(out, model.thresholds.p0);
  put_f64(out, model.thresholds.p1);
  if (!out) throw std::runtime_error("write failed: " + path);
}

SurrogateModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kModelMagic, 8) != 0)
    throw std::runtime_error("not a surrogate model file: " + path);
  SurrogateModel m;
  m.e_max = static_cast<int>(get_i64(in));
  m.d_ev = static_cast<int>(get_i64(in));
  m.timesteps = static_cast<int>(get_i64(in));
  m.channels = static_cast<int>(get_i64(in));
  std::int64_t layers = get_i64(in);
  for (std::int64_t l = 0; l < layers; ++l) {
    LayerSpec spec;
    spec.c_in = static_cast<int>(get_i64(in));
    spec.c_out = static_cast<int>(get_i64(in));
    spec.kernel = static_cast<int>(get_i64(in));
    m.conv.push_back(spec);
  }
  m.params = get_vec(in);
  m.norm.lo = get_vec(in);
  m.norm.hi = get_vec(in);
  m.thresholds.p0 = get_f64(in);
  m.thresholds.p1 = get_f64(in);
  auto lay = layout_of(m.conv, m.timesteps, m.output_len());
  if (m.params.size() != lay.total)
    throw std::runtime_error("model parameter vector has the wrong size");
  return m;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  dataset.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kDataMagic, 8);
  put_i64(out, dataset.e_max);
  put_i64(out, dataset.d_ev);
  put_i64(out, dataset.timesteps);
  put_i64(out, dataset.channels);
  put_i64(out, static_cast<std::int64_t>(dataset.samples.size()));
  for (const auto& s : dataset.samples) {
    put_i64(out, s.e);
    put_f64(out, s.solve_seconds);
    out.write(reinterpret_cast<const char*>(s.features.data()),
              static_cast<std::streamsize>(sizeof(double) * s.features.size()));
    for (long j = 0; j < s.labels.size(); ++j)
      out.put(s.labels[j] == 1.0 ? '\1' : '\0');
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kDataMagic, 8) != 0)
    throw std::runtime_error("not a dataset file: " + path);
  Dataset ds;
  ds.e_max = static_cast<int>(get_i64(in));
  ds.d_ev = static_cast<int>(get_i64(in));
  ds.timesteps = static_cast<int>(get_i64(in));
  ds.channels = static_cast<int>(get_i64(in));
  std::int64_t count = get_i64(in);
  for (std::int64_t i = 0; i < count; ++i) {
    Sample s;
    s.e = static_cast<int>(get_i64(in));
    s.solve_seconds = get_f64(in);
    s.features.resize(ds.channels, ds.timesteps);
    in.read(reinterpret_cast<char*>(s.features.data()),
            static_cast<std::streamsize>(sizeof(double) * s.features.size()));
    s.labels.resize(static_cast<long>(ds.e_max) * ds.d_ev);
    for (long j = 0; j < s.labels.size(); ++j) {
      int ch = in.get();
      if (ch == EOF) throw std::runtime_error("truncated dataset file");
      s.labels[j] = ch ? 1.0 : 0.0;
    }
    ds.samples.push_back(std::move(s));
  }
  if (!in) throw std::runtime_error("truncated dataset file");
  ds.validate();
  return ds;
}

}  // namespace jrsopt::surr
