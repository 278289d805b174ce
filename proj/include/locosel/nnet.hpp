#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "locosel/common.hpp"
#include "locosel/datagen.hpp"
#include "locosel/heightfield.hpp"

namespace locosel {

enum class HeadKind { Sigmoid, Linear };

const char* to_string(HeadKind kind);
HeadKind parse_head_kind(const std::string& text);
/// Viability datasets train sigmoid heads; CoT datasets train linear heads.
HeadKind head_kind_for(DatasetKind kind);

namespace cnn {

inline constexpr int kConv1 = 4;
inline constexpr int kConv2 = 8;
inline constexpr int kConv3 = 8;
inline constexpr int kHidden = 128;
inline constexpr int kPoolRows = kHfRows / 2;  // 15
inline constexpr int kPoolCols = kHfCols / 2;  // 5
inline constexpr int kPixels = kHfRows * kHfCols;
inline constexpr int kPooled = kPoolRows * kPoolCols;
inline constexpr int kFlat = kConv3 * kPooled;  // 600

}  // namespace cnn

/// conv(4) -> conv(8) -> maxpool(2) -> conv(8) -> fc(128) -> fc(128) -> head.
/// Conv weights are stored as out_channels x (in_channels * 9), with the
/// kernel index in_channel * 9 + kernel_row * 3 + kernel_col.
template <typename Scalar>
struct CnnModel {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  HeadKind head_kind = HeadKind::Sigmoid;
  Matrix conv1_w = Matrix::Zero(cnn::kConv1, 9);
  Vector conv1_b = Vector::Zero(cnn::kConv1);
  Matrix conv2_w = Matrix::Zero(cnn::kConv2, cnn::kConv1 * 9);
  Vector conv2_b = Vector::Zero(cnn::kConv2);
  Matrix conv3_w = Matrix::Zero(cnn::kConv3, cnn::kConv2 * 9);
  Vector conv3_b = Vector::Zero(cnn::kConv3);
  Matrix fc1_w = Matrix::Zero(cnn::kHidden, cnn::kFlat);
  Vector fc1_b = Vector::Zero(cnn::kHidden);
  Matrix fc2_w = Matrix::Zero(cnn::kHidden, cnn::kHidden);
  Vector fc2_b = Vector::Zero(cnn::kHidden);
  Matrix head_w = Matrix::Zero(1, cnn::kHidden);
  Vector head_b = Vector::Zero(1);

  /// Visits every parameter tensor in file order: f(name, tensor).
  template <typename F>
  void for_each(F&& f) {
    f("conv1.weight", conv1_w);
    f("conv1.bias", conv1_b);
    f("conv2.weight", conv2_w);
    f("conv2.bias", conv2_b);
    f("conv3.weight", conv3_w);
    f("conv3.bias", conv3_b);
    f("fc1.weight", fc1_w);
    f("fc1.bias", fc1_b);
    f("fc2.weight", fc2_w);
    f("fc2.bias", fc2_b);
    f("head.weight", head_w);
    f("head.bias", head_b);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<CnnModel*>(this)->for_each(
        [&](const char* name, auto& t) { f(name, std::as_const(t)); });
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](const char*, const auto& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
  }

  /// Same-shaped model with every parameter zero (gradient / velocity buffer).
  CnnModel zeros_like() const {
    CnnModel z;
    z.head_kind = head_kind;
    return z;
  }

  template <typename Other>
  CnnModel<Other> cast() const {
    CnnModel<Other> out;
    out.head_kind = head_kind;
    out.conv1_w = conv1_w.template cast<Other>();
    out.conv1_b = conv1_b.template cast<Other>();
    out.conv2_w = conv2_w.template cast<Other>();
    out.conv2_b = conv2_b.template cast<Other>();
    out.conv3_w = conv3_w.template cast<Other>();
    out.conv3_b = conv3_b.template cast<Other>();
    out.fc1_w = fc1_w.template cast<Other>();
    out.fc1_b = fc1_b.template cast<Other>();
    out.fc2_w = fc2_w.template cast<Other>();
    out.fc2_b = fc2_b.template cast<Other>();
    out.head_w = head_w.template cast<Other>();
    out.head_b = head_b.template cast<Other>();
    return out;
  }

  friend bool operator==(const CnnModel& a, const CnnModel& b) {
    return a.head_kind == b.head_kind && a.conv1_w == b.conv1_w && a.conv1_b == b.conv1_b &&
           a.conv2_w == b.conv2_w && a.conv2_b == b.conv2_b && a.conv3_w == b.conv3_w &&
           a.conv3_b == b.conv3_b && a.fc1_w == b.fc1_w && a.fc1_b == b.fc1_b &&
           a.fc2_w == b.fc2_w && a.fc2_b == b.fc2_b && a.head_w == b.head_w &&
           a.head_b == b.head_b;
  }
};

/// Production precision.
using Model = CnnModel<float>;

struct Prediction {
  double value = 0.0;
  int skill_id = 0;
};

/// He-uniform weights, bound sqrt(6 / fan_in), on ReLU layers; the head uses
/// sqrt(1 / fan_in). Biases zero.
template <typename Scalar>
CnnModel<Scalar> init_model(HeadKind head_kind, std::uint64_t seed) {
  CnnModel<Scalar> m;
  m.head_kind = head_kind;
  Rng rng(seed);
  auto fill = [&](auto& w, double gain = 6.0) {
    const double bound = std::sqrt(gain / static_cast<double>(w.cols()));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        w(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
  };
  fill(m.conv1_w);
  fill(m.conv2_w);
  fill(m.conv3_w);
  fill(m.fc1_w);
  fill(m.fc2_w);
  fill(m.head_w, 1.0);
  return m;
}

namespace cnn {

/// Activations for a batch. Conv activations are channels x (batch * pixels)
/// with column index sample * pixels + row * width + col.
template <typename Scalar>
struct Activations {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::Index batch = 0;
  Matrix cols1, a1, cols2, a2, pooled, cols3, a3, flat, h1, h2, out;
  std::vector<Eigen::Index> pool_arg;
};

template <typename Scalar, typename Derived>
void im2col(const Eigen::MatrixBase<Derived>& act, Eigen::Index batch, int height, int width,
            Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& cols) {
  const Eigen::Index channels = act.rows();
  const Eigen::Index pixels = height * width;
  cols.setZero(channels * 9, batch * pixels);
  for (Eigen::Index b = 0; b < batch; ++b)
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        const Eigen::Index col = b * pixels + r * width + c;
        for (int dr = -1; dr <= 1; ++dr) {
          const int rr = r + dr;
          if (rr < 0 || rr >= height) continue;
          for (int dc = -1; dc <= 1; ++dc) {
            const int cc = c + dc;
            if (cc < 0 || cc >= width) continue;
            const Eigen::Index src = b * pixels + rr * width + cc;
            const int k = (dr + 1) * 3 + (dc + 1);
            for (Eigen::Index ch = 0; ch < channels; ++ch) cols(ch * 9 + k, col) = act(ch, src);
          }
        }
      }
}

template <typename Scalar>
void col2im(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& dcols, Eigen::Index channels,
            Eigen::Index batch, int height, int width,
            Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& dact) {
  const Eigen::Index pixels = height * width;
  dact.setZero(channels, batch * pixels);
  for (Eigen::Index b = 0; b < batch; ++b)
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        const Eigen::Index col = b * pixels + r * width + c;
        for (int dr = -1; dr <= 1; ++dr) {
          const int rr = r + dr;
          if (rr < 0 || rr >= height) continue;
          for (int dc = -1; dc <= 1; ++dc) {
            const int cc = c + dc;
            if (cc < 0 || cc >= width) continue;
            const Eigen::Index dst = b * pixels + rr * width + cc;
            const int k = (dr + 1) * 3 + (dc + 1);
            for (Eigen::Index ch = 0; ch < channels; ++ch) dact(ch, dst) += dcols(ch * 9 + k, col);
          }
        }
      }
}

/// Kept strictly inside (0, 1) even where the scalar type saturates.
template <typename Scalar>
Scalar sigmoid(Scalar x) {
  const Scalar y = x >= Scalar(0) ? Scalar(1) / (Scalar(1) + std::exp(-x))
                                  : std::exp(x) / (Scalar(1) + std::exp(x));
  constexpr Scalar lo = std::numeric_limits<Scalar>::min();
  constexpr Scalar hi = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / Scalar(2);
  return std::clamp(y, lo, hi);
}

/// Full forward pass over a batch; `input` is 1 x (batch * 341).
template <typename Scalar>
void forward_batch(const CnnModel<Scalar>& m,
                   const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& input,
                   Activations<Scalar>& act) {
  const Eigen::Index batch = input.cols() / kPixels;
  if (input.rows() != 1 || input.cols() != batch * kPixels || batch == 0)
    throw Error(Errc::ShapeMismatch, "input must be 1 x (batch * 341)");
  act.batch = batch;

  im2col<Scalar>(input, batch, kHfRows, kHfCols, act.cols1);
  act.a1.noalias() = m.conv1_w * act.cols1;
  act.a1 = (act.a1.colwise() + m.conv1_b).cwiseMax(Scalar(0));

  im2col<Scalar>(act.a1, batch, kHfRows, kHfCols, act.cols2);
  act.a2.noalias() = m.conv2_w * act.cols2;
  act.a2 = (act.a2.colwise() + m.conv2_b).cwiseMax(Scalar(0));

  act.pooled.resize(kConv2, batch * kPooled);
  act.pool_arg.resize(static_cast<std::size_t>(kConv2 * batch * kPooled));
  for (Eigen::Index ch = 0; ch < kConv2; ++ch)
    for (Eigen::Index b = 0; b < batch; ++b)
      for (int pr = 0; pr < kPoolRows; ++pr)
        for (int pc = 0; pc < kPoolCols; ++pc) {
          Eigen::Index best = b * kPixels + (2 * pr) * kHfCols + 2 * pc;
          for (int dr = 0; dr < 2; ++dr)
            for (int dc = 0; dc < 2; ++dc) {
              const Eigen::Index src = b * kPixels + (2 * pr + dr) * kHfCols + (2 * pc + dc);
              if (act.a2(ch, src) > act.a2(ch, best)) best = src;
            }
          const Eigen::Index dst = b * kPooled + pr * kPoolCols + pc;
          act.pooled(ch, dst) = act.a2(ch, best);
          act.pool_arg[static_cast<std::size_t>(ch * batch * kPooled + dst)] = best;
        }

  im2col<Scalar>(act.pooled, batch, kPoolRows, kPoolCols, act.cols3);
  act.a3.noalias() = m.conv3_w * act.cols3;
  act.a3 = (act.a3.colwise() + m.conv3_b).cwiseMax(Scalar(0));

  act.flat.resize(kFlat, batch);
  for (Eigen::Index b = 0; b < batch; ++b)
    for (Eigen::Index ch = 0; ch < kConv3; ++ch)
      act.flat.col(b).segment(ch * kPooled, kPooled) =
          act.a3.row(ch).segment(b * kPooled, kPooled).transpose();

  act.h1.noalias() = m.fc1_w * act.flat;
  act.h1 = (act.h1.colwise() + m.fc1_b).cwiseMax(Scalar(0));
  act.h2.noalias() = m.fc2_w * act.h1;
  act.h2 = (act.h2.colwise() + m.fc2_b).cwiseMax(Scalar(0));
  act.out.noalias() = m.head_w * act.h2;
  act.out.array() += m.head_b(0);
  if (m.head_kind == HeadKind::Sigmoid)
    act.out = act.out.unaryExpr([](Scalar x) { return sigmoid(x); });
}

/// Accumulates d(loss)/d(params) given d(loss)/d(out) (1 x batch).
template <typename Scalar>
void backward_batch(const CnnModel<Scalar>& m, const Activations<Scalar>& act,
                    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& dout,
                    CnnModel<Scalar>& grad) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index batch = act.batch;
  auto relu_mask = [](const Matrix& post) {
    return post.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); });
  };

  Matrix dlogit = dout;
  if (m.head_kind == HeadKind::Sigmoid)
    dlogit = dout.cwiseProduct(act.out.unaryExpr([](Scalar y) { return y * (Scalar(1) - y); }));

  grad.head_w.noalias() += dlogit * act.h2.transpose();
  grad.head_b(0) += dlogit.sum();
  Matrix dh2 = (m.head_w.transpose() * dlogit).cwiseProduct(relu_mask(act.h2));
  grad.fc2_w.noalias() += dh2 * act.h1.transpose();
  grad.fc2_b += dh2.rowwise().sum();
  Matrix dh1 = (m.fc2_w.transpose() * dh2).cwiseProduct(relu_mask(act.h1));
  grad.fc1_w.noalias() += dh1 * act.flat.transpose();
  grad.fc1_b += dh1.rowwise().sum();
  const Matrix dflat = m.fc1_w.transpose() * dh1;

  Matrix da3(kConv3, batch * kPooled);
  for (Eigen::Index b = 0; b < batch; ++b)
    for (Eigen::Index ch = 0; ch < kConv3; ++ch)
      da3.row(ch).segment(b * kPooled, kPooled) =
          dflat.col(b).segment(ch * kPooled, kPooled).transpose();
  const Matrix dz3 = da3.cwiseProduct(relu_mask(act.a3));
  grad.conv3_w.noalias() += dz3 * act.cols3.transpose();
  grad.conv3_b += dz3.rowwise().sum();
  const Matrix dcols3 = m.conv3_w.transpose() * dz3;
  Matrix dpooled;
  col2im<Scalar>(dcols3, kConv2, batch, kPoolRows, kPoolCols, dpooled);

  Matrix da2 = Matrix::Zero(kConv2, batch * kPixels);
  for (Eigen::Index ch = 0; ch < kConv2; ++ch)
    for (Eigen::Index j = 0; j < batch * kPooled; ++j)
      da2(ch, act.pool_arg[static_cast<std::size_t>(ch * batch * kPooled + j)]) += dpooled(ch, j);
  const Matrix dz2 = da2.cwiseProduct(relu_mask(act.a2));
  grad.conv2_w.noalias() += dz2 * act.cols2.transpose();
  grad.conv2_b += dz2.rowwise().sum();
  const Matrix dcols2 = m.conv2_w.transpose() * dz2;
  Matrix da1;
  col2im<Scalar>(dcols2, kConv1, batch, kHfRows, kHfCols, da1);
  const Matrix dz1 = da1.cwiseProduct(relu_mask(act.a1));
  grad.conv1_w.noalias() += dz1 * act.cols1.transpose();
  grad.conv1_b += dz1.rowwise().sum();
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pack_inputs(
    std::span<const HeightGrid* const> grids) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> input(
      1, static_cast<Eigen::Index>(grids.size()) * kPixels);
  for (std::size_t b = 0; b < grids.size(); ++b) {
    const HeightGrid& g = *grids[b];
    for (int i = 0; i < kPixels; ++i)
      input(0, static_cast<Eigen::Index>(b) * kPixels + i) = static_cast<Scalar>(g.data()[i]);
  }
  return input;
}

}  // namespace cnn

/// Raw network outputs (sigmoid already applied for viability heads).
template <typename Scalar>
std::vector<double> predict_raw(const CnnModel<Scalar>& model,
                                std::span<const HeightGrid* const> grids) {
  cnn::Activations<Scalar> act;
  cnn::forward_batch(model, cnn::pack_inputs<Scalar>(grids), act);
  std::vector<double> out(grids.size());
  for (std::size_t b = 0; b < grids.size(); ++b) out[b] = static_cast<double>(act.out(0, static_cast<Eigen::Index>(b)));
  return out;
}

/// Prediction for one heightfield; linear heads are clamped to >= 0.
template <typename Scalar>
Prediction forward(const CnnModel<Scalar>& model, const HeightGrid& hf, int skill_id = 0) {
  const HeightGrid* ptr = &hf;
  double value = predict_raw(model, std::span<const HeightGrid* const>(&ptr, 1))[0];
  if (model.head_kind == HeadKind::Linear) value = std::max(value, 0.0);
  return {value, skill_id};
}

template <typename Scalar>
Prediction forward(const CnnModel<Scalar>& model, const Heightfield& hf, int skill_id = 0) {
  if (hf.any_occluded())
    throw Error(Errc::ShapeMismatch, "heightfield must be forward-filled before inference");
  return forward(model, hf.values, skill_id);
}

template <typename Scalar>
struct LossAndGrad {
  double loss = 0.0;
  CnnModel<Scalar> grad;
};

/// Mean squared error over the batch and its exact gradient.
template <typename Scalar>
LossAndGrad<Scalar> loss_and_grad(const CnnModel<Scalar>& model,
                                  std::span<const HeightGrid* const> grids,
                                  std::span<const double> labels) {
  if (grids.empty()) throw Error(Errc::ShapeMismatch, "empty batch");
  if (grids.size() != labels.size())
    throw Error(Errc::ShapeMismatch, "batch has " + std::to_string(grids.size()) +
                                         " inputs but " + std::to_string(labels.size()) + " labels");
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  cnn::Activations<Scalar> act;
  cnn::forward_batch(model, cnn::pack_inputs<Scalar>(grids), act);
  const auto batch = static_cast<Eigen::Index>(grids.size());
  Matrix dout(1, batch);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const double err = static_cast<double>(act.out(0, b)) - labels[static_cast<std::size_t>(b)];
    loss += err * err;
    dout(0, b) = static_cast<Scalar>(2.0 * err / static_cast<double>(batch));
  }
  LossAndGrad<Scalar> out{loss / static_cast<double>(batch), model.zeros_like()};
  cnn::backward_batch(model, act, dout, out.grad);
  return out;
}

struct TrainConfig {
  double learning_rate = 0.005;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::size_t epochs = 60;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_mse = 0.0;
  double test_mse = 0.0;
};

template <typename Scalar>
struct TrainResult {
  CnnModel<Scalar> model;
  std::vector<EpochStats> history;
};

/// MSE of the raw outputs over the listed samples (batched, in index order).
template <typename Scalar>
double evaluate_mse(const CnnModel<Scalar>& model, const Dataset& ds,
                    const std::vector<std::size_t>& indices, std::size_t batch_size = 256) {
  if (indices.empty()) return 0.0;
  double sum = 0.0;
  std::vector<const HeightGrid*> grids;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t end = std::min(indices.size(), start + batch_size);
    grids.clear();
    for (std::size_t k = start; k < end; ++k) grids.push_back(&ds.samples[indices[k]].heightfield);
    const auto out = predict_raw(model, std::span<const HeightGrid* const>(grids));
    for (std::size_t k = start; k < end; ++k) {
      const double err = out[k - start] - ds.samples[indices[k]].label;
      sum += err * err;
    }
  }
  return sum / static_cast<double>(indices.size());
}

/// Mini-batch SGD with momentum: v <- momentum * v - lr * grad; w <- w + v.
/// The training order of epoch e is a shuffle seeded by (cfg.seed, e).
template <typename Scalar>
TrainResult<Scalar> train(CnnModel<Scalar> model, const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  if (head_kind_for(ds.kind) != model.head_kind)
    throw Error(Errc::HeadKindMismatch, std::string("a ") + to_string(model.head_kind) +
                                            " head cannot train on a " + to_string(ds.kind) +
                                            " dataset");
  TrainResult<Scalar> result;
  CnnModel<Scalar> velocity = model.zeros_like();
  std::vector<std::size_t> order = ds.train;
  std::vector<const HeightGrid*> grids;
  std::vector<double> labels;
  const auto lr = static_cast<Scalar>(cfg.learning_rate);
  const auto mu = static_cast<Scalar>(cfg.momentum);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, 0xe70c, epoch));
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      grids.clear();
      labels.clear();
      for (std::size_t k = start; k < end; ++k) {
        grids.push_back(&ds.samples[order[k]].heightfield);
        labels.push_back(ds.samples[order[k]].label);
      }
      auto lg = loss_and_grad(model, std::span<const HeightGrid* const>(grids),
                              std::span<const double>(labels));
      // Parallel walk over (model, velocity, grad) in identical tensor order.
      std::vector<Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>> w, v, g;
      auto collect = [](auto& into) {
        return [&into](const char*, auto& t) { into.emplace_back(t.data(), t.size()); };
      };
      model.for_each(collect(w));
      velocity.for_each(collect(v));
      lg.grad.for_each(collect(g));
      for (std::size_t t = 0; t < w.size(); ++t) {
        v[t] = mu * v[t] - lr * g[t];
        w[t] += v[t];
      }
    }
    result.history.push_back(
        {epoch + 1, evaluate_mse(model, ds, ds.train), evaluate_mse(model, ds, ds.test)});
  }
  result.model = std::move(model);
  return result;
}

std::string history_csv(const std::vector<EpochStats>& history);

inline constexpr int kModelFormatVersion = 1;

template <typename Scalar>
std::string serialize_model(const CnnModel<Scalar>& model);
template <typename Scalar>
CnnModel<Scalar> parse_model(std::string_view text);
template <typename Scalar>
void save_model(const CnnModel<Scalar>& model, const std::string& path);
template <typename Scalar>
CnnModel<Scalar> load_model(const std::string& path);

extern template std::string serialize_model<float>(const CnnModel<float>&);
extern template std::string serialize_model<double>(const CnnModel<double>&);
extern template CnnModel<float> parse_model<float>(std::string_view);
extern template CnnModel<double> parse_model<double>(std::string_view);
extern template void save_model<float>(const CnnModel<float>&, const std::string&);
extern template void save_model<double>(const CnnModel<double>&, const std::string&);
extern template CnnModel<float> load_model<float>(const std::string&);
extern template CnnModel<double> load_model<double>(const std::string&);

}  // namespace locosel
