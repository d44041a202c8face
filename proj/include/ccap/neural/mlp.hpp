#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ccap/core/matrix.hpp"
#include "ccap/core/random.hpp"
#include "ccap/data/labels.hpp"
#include "ccap/learners/common.hpp"

namespace ccap::neural {

using data::Labels;
using learners::sigmoid;

struct EmbeddingSpec {
  std::size_t cardinality = 0;
  std::size_t width = 0;
};

inline std::size_t default_embedding_width(std::size_t cardinality) {
  return std::min<std::size_t>(8, (cardinality + 1) / 2);
}

struct MlpSpec {
  std::vector<std::size_t> hidden{64, 32, 16};
  double learning_rate = 1e-3;
  int epochs = 30;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  std::vector<EmbeddingSpec> embeddings;  // one per categorical input column
};

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;
};

// ReLU hidden layers followed by one sigmoid output unit. The network input
// is the dense vector followed by the embedding rows of each categorical id.
struct MlpModel {
  MlpSpec spec;
  std::size_t dense_width = 0;
  std::vector<Matrix> embeddings;  // cardinality x width
  std::vector<DenseLayer> layers;
  std::vector<double> loss_history;  // mean training loss per epoch

  std::size_t input_width() const {
    std::size_t w = dense_width;
    for (const auto& e : embeddings) w += e.cols();
    return w;
  }
};

inline std::vector<double> relu(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
  return out;
}

// Every trainable array, in a fixed order: embedding tables, then each
// layer's weights and biases.
inline std::vector<std::span<double>> parameter_blocks(MlpModel& m) {
  std::vector<std::span<double>> out;
  for (auto& e : m.embeddings) out.emplace_back(e.data());
  for (auto& l : m.layers) {
    out.emplace_back(l.w);
    out.emplace_back(l.b);
  }
  return out;
}

inline std::size_t parameter_count(const MlpModel& m) {
  std::size_t n = 0;
  for (const auto& e : m.embeddings) n += e.data().size();
  for (const auto& l : m.layers) n += l.w.size() + l.b.size();
  return n;
}

inline MlpModel init_mlp(const MlpSpec& spec, std::size_t dense_width) {
  for (auto h : spec.hidden) {
    if (h == 0) throw UsageError("hidden layer sizes must be at least 1");
  }
  MlpModel m;
  m.spec = spec;
  m.dense_width = dense_width;
  Rng rng(spec.seed);
  for (const auto& e : spec.embeddings) {
    if (e.cardinality == 0 || e.width == 0) throw UsageError("embedding cardinality and width must be at least 1");
    Matrix table(e.cardinality, e.width);
    const double scale = 1.0 / std::sqrt(double(e.width));
    for (auto& v : table.data()) v = rng.uniform(-scale, scale);
    m.embeddings.push_back(std::move(table));
  }
  std::size_t in = m.input_width();
  if (in == 0) throw UsageError("network has no inputs");
  std::vector<std::size_t> widths = spec.hidden;
  widths.push_back(1);
  for (std::size_t out : widths) {
    DenseLayer l{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
    const double scale = 1.0 / std::sqrt(double(in));
    for (auto& v : l.w) v = rng.uniform(-scale, scale);
    m.layers.push_back(std::move(l));
    in = out;
  }
  return m;
}

// Pre- and post-activation values of one forward pass.
struct ForwardCache {
  std::vector<std::vector<double>> inputs;  // inputs[l] feeds layer l
  std::vector<std::vector<double>> pre;     // pre[l] = W_l inputs[l] + b_l
};

inline void check_ids(const MlpModel& m, std::span<const std::int32_t> ids) {
  if (ids.size() != m.embeddings.size()) {
    throw DataError("expected " + std::to_string(m.embeddings.size()) + " categorical ids, got " +
                    std::to_string(ids.size()));
  }
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] < 0 || static_cast<std::size_t>(ids[k]) >= m.embeddings[k].rows()) {
      throw DataError("category id " + std::to_string(ids[k]) + " out of range for embedding " +
                      std::to_string(k));
    }
  }
}

// Output logit z; the probability is sigmoid(z).
inline double forward_logit(const MlpModel& m, std::span<const double> dense, std::span<const std::int32_t> ids,
                            ForwardCache* cache = nullptr) {
  if (dense.size() != m.dense_width) {
    throw DataError("expected dense width " + std::to_string(m.dense_width) + ", got " +
                    std::to_string(dense.size()));
  }
  check_ids(m, ids);
  std::vector<double> a(dense.begin(), dense.end());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    auto row = m.embeddings[k].row(static_cast<std::size_t>(ids[k]));
    a.insert(a.end(), row.begin(), row.end());
  }
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& layer = m.layers[l];
    std::vector<double> z(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      z[o] = layer.b[o] + dot(std::span<const double>(layer.w).subspan(o * layer.in, layer.in), a);
    }
    if (cache) {
      cache->inputs.push_back(a);
      cache->pre.push_back(z);
    }
    a = l + 1 < m.layers.size() ? relu(z) : std::move(z);
  }
  return a[0];
}

inline double forward(const MlpModel& m, std::span<const double> dense, std::span<const std::int32_t> ids) {
  return sigmoid(forward_logit(m, dense, ids));
}

inline std::vector<double> predict_proba(const MlpModel& m, const Matrix& dense, const IdMatrix& ids) {
  std::vector<double> out(dense.rows());
  const bool has_ids = !m.embeddings.empty();
  if (has_ids && ids.rows() != dense.rows()) throw DataError("dense and id row counts differ");
  for (std::size_t i = 0; i < dense.rows(); ++i) {
    out[i] = forward(m, dense.row(i), has_ids ? ids.row(i) : std::span<const std::int32_t>{});
  }
  return out;
}

// Gradient arrays shaped like parameter_blocks().
using Gradient = std::vector<std::vector<double>>;

inline Gradient zero_gradient(MlpModel& m) {
  Gradient g;
  for (auto block : parameter_blocks(m)) g.emplace_back(block.size(), 0.0);
  return g;
}

// Mean binary cross-entropy over `rows` and its gradient (accumulated into
// `grad`, which must be zeroed by the caller).
inline double loss_and_gradient(const MlpModel& m, const Matrix& dense, const IdMatrix& ids, const Labels& y,
                                std::span<const std::size_t> rows, Gradient& grad) {
  const std::size_t n_emb = m.embeddings.size();
  const std::size_t n_layers = m.layers.size();
  const double scale = 1.0 / double(rows.size());
  ForwardCache cache;
  double loss = 0.0;
  std::vector<double> delta, next;
  for (std::size_t r : rows) {
    const auto id_row = n_emb ? ids.row(r) : std::span<const std::int32_t>{};
    const double z = forward_logit(m, dense.row(r), id_row, &cache);
    loss += learners::logit_loss(z, y[r]);

    delta.assign(1, (sigmoid(z) - y[r]) * scale);
    for (std::size_t l = n_layers; l-- > 0;) {
      const auto& layer = m.layers[l];
      auto& gw = grad[n_emb + 2 * l];
      auto& gb = grad[n_emb + 2 * l + 1];
      const auto& in = cache.inputs[l];
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        gb[o] += d;
        double* gw_row = gw.data() + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) gw_row[i] += d * in[i];
      }
      next.assign(layer.in, 0.0);
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        const double* w_row = layer.w.data() + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) next[i] += d * w_row[i];
      }
      if (l > 0) {
        const auto& pre = cache.pre[l - 1];
        for (std::size_t i = 0; i < next.size(); ++i) {
          if (!(pre[i] > 0.0)) next[i] = 0.0;
        }
      }
      delta.swap(next);
    }
    // delta is now d(loss)/d(input); route the embedding part to its tables.
    std::size_t offset = m.dense_width;
    for (std::size_t k = 0; k < n_emb; ++k) {
      const std::size_t width = m.embeddings[k].cols();
      double* g = grad[k].data() + static_cast<std::size_t>(id_row[k]) * width;
      for (std::size_t c = 0; c < width; ++c) g[c] += delta[offset + c];
      offset += width;
    }
  }
  return loss * scale;
}

inline double mean_loss(const MlpModel& m, const Matrix& dense, const IdMatrix& ids, const Labels& y) {
  double loss = 0.0;
  const bool has_ids = !m.embeddings.empty();
  for (std::size_t r = 0; r < dense.rows(); ++r) {
    const double z = forward_logit(m, dense.row(r), has_ids ? ids.row(r) : std::span<const std::int32_t>{});
    loss += learners::logit_loss(z, y[r]);
  }
  return loss / double(dense.rows());
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Mini-batch Adam on binary cross-entropy. Batch order per epoch is a seeded
// shuffle, so training is a pure function of (spec, data).
inline MlpModel train(const MlpSpec& spec, const Matrix& dense, const IdMatrix& ids, const Labels& y,
                      const AdamConfig& adam = {}) {
  if (dense.rows() != y.size()) throw DataError("dense rows and labels differ in length");
  if (!spec.embeddings.empty() && (ids.rows() != y.size() || ids.cols() != spec.embeddings.size())) {
    throw DataError("categorical id matrix does not match the embedding configuration");
  }
  if (dense.rows() == 0) throw DataError("cannot train on zero rows");
  if (spec.batch_size == 0 || spec.epochs < 0 || spec.learning_rate < 0) {
    throw UsageError("invalid network training settings");
  }

  MlpModel m = init_mlp(spec, dense.cols());
  Gradient grad = zero_gradient(m);
  Gradient first = zero_gradient(m);
  Gradient second = zero_gradient(m);
  std::vector<std::size_t> order(dense.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(epoch) + 1}));
    rng.shuffle(std::span(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += spec.batch_size) {
      const std::size_t len = std::min(spec.batch_size, order.size() - start);
      const auto batch = std::span<const std::size_t>(order).subspan(start, len);
      for (auto& g : grad) std::fill(g.begin(), g.end(), 0.0);
      epoch_loss += loss_and_gradient(m, dense, ids, y, batch, grad) * double(len);

      ++step;
      const double c1 = 1.0 - std::pow(adam.beta1, double(step));
      const double c2 = 1.0 - std::pow(adam.beta2, double(step));
      auto blocks = parameter_blocks(m);
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t i = 0; i < blocks[b].size(); ++i) {
          const double g = grad[b][i];
          first[b][i] = adam.beta1 * first[b][i] + (1.0 - adam.beta1) * g;
          second[b][i] = adam.beta2 * second[b][i] + (1.0 - adam.beta2) * g * g;
          blocks[b][i] -= spec.learning_rate * (first[b][i] / c1) / (std::sqrt(second[b][i] / c2) + adam.epsilon);
        }
      }
    }
    epoch_loss /= double(order.size());
    bool finite = std::isfinite(epoch_loss);
    for (auto block : parameter_blocks(m)) {
      for (double v : block) finite = finite && std::isfinite(v);
    }
    if (!finite) {
      throw TrainingError("network training diverged at epoch " + std::to_string(epoch + 1));
    }
    m.loss_history.push_back(epoch_loss);
  }
  return m;
}

struct GradientCheckOptions {
  double step = 1e-5;
  double denominator_floor = 1e-6;
  bool corrupt = false;  // scale the analytic gradient by 1.1 (mutation check)
  std::uint64_t seed = 0;
};

// Largest relative error between backprop and central finite differences
// over every parameter: |a - n| / max(|a|, |n|, floor). Finite differences are
// meaningless at a ReLU kink, so while any hidden pre-activation sits within
// 10 steps of zero, that row's dense inputs and the offending unit's bias
// (of the local copy) are nudged, up to 50 passes.
inline double gradient_check(MlpModel m, Matrix dense, const IdMatrix& ids, const Labels& y,
                             const GradientCheckOptions& opt = {}) {
  const bool has_ids = !m.embeddings.empty();
  Rng rng(opt.seed);
  ForwardCache cache;
  const double margin = 10.0 * opt.step;
  for (int pass = 0; pass < 50; ++pass) {
    const double spread = 0.05 * double(pass + 1);
    bool near_kink = false;
    for (std::size_t r = 0; r < dense.rows(); ++r) {
      forward_logit(m, dense.row(r), has_ids ? ids.row(r) : std::span<const std::int32_t>{}, &cache);
      bool row_kink = false;
      for (std::size_t l = 0; l + 1 < cache.pre.size(); ++l) {
        for (std::size_t u = 0; u < cache.pre[l].size(); ++u) {
          if (std::abs(cache.pre[l][u]) >= margin) continue;
          row_kink = true;
          m.layers[l].b[u] += rng.uniform(-spread, spread);
        }
      }
      if (!row_kink) continue;
      near_kink = true;
      for (auto& v : dense.row(r)) v += rng.uniform(-spread, spread);
    }
    if (!near_kink) break;
  }

  std::vector<std::size_t> rows(dense.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Gradient analytic = zero_gradient(m);
  loss_and_gradient(m, dense, ids, y, rows, analytic);
  if (opt.corrupt) {
    for (auto& block : analytic) {
      for (auto& g : block) g *= 1.1;
    }
  }

  double worst = 0.0;
  auto blocks = parameter_blocks(m);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t i = 0; i < blocks[b].size(); ++i) {
      const double saved = blocks[b][i];
      blocks[b][i] = saved + opt.step;
      const double up = mean_loss(m, dense, ids, y);
      blocks[b][i] = saved - opt.step;
      const double down = mean_loss(m, dense, ids, y);
      blocks[b][i] = saved;
      const double numeric = (up - down) / (2.0 * opt.step);
      const double a = analytic[b][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), opt.denominator_floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace ccap::neural
