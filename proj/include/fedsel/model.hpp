/*
 * Copyright 2026 The fedsel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Classifiers over flat parameter vectors: a fully connected ReLU network and
// a two-stage convolutional network (conv-pool, conv-pool, flatten, fc, fc).
// Parameters live in one contiguous vector in canonical layer order so that
// aggregation and transfer treat every model identically.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fedsel/errors.hpp"
#include "fedsel/rng.hpp"

namespace fedsel {

using ParamVector = std::vector<double>;

struct ModelSpec {
  enum class Kind { kMlp, kCnn };

  Kind kind = Kind::kMlp;
  int input_h = 28;
  int input_w = 28;
  int input_c = 1;
  int classes = 10;
  std::vector<int> hidden{64};  // MLP hidden widths
  int conv1 = 32;               // CNN filter counts, kernel and dense width
  int conv2 = 64;
  int kernel = 5;
  int dense = 512;

  static ModelSpec mlp(int inputs, std::vector<int> hidden, int classes) {
    ModelSpec s;
    s.kind = Kind::kMlp;
    s.input_h = 1;
    s.input_w = inputs;
    s.input_c = 1;
    s.hidden = std::move(hidden);
    s.classes = classes;
    return s;
  }

  // 7-layer reference network for 28x28x1 inputs (~1.66M parameters).
  static ModelSpec cnn() { return cnn(28, 28, 1, 32, 64, 5, 512, 10); }

  static ModelSpec cnn(int h, int w, int c, int conv1, int conv2, int kernel, int dense, int classes) {
    ModelSpec s;
    s.kind = Kind::kCnn;
    s.input_h = h;
    s.input_w = w;
    s.input_c = c;
    s.conv1 = conv1;
    s.conv2 = conv2;
    s.kernel = kernel;
    s.dense = dense;
    s.classes = classes;
    s.hidden.clear();
    return s;
  }

  int input_size() const { return input_h * input_w * input_c; }

  std::string name() const { return kind == Kind::kMlp ? "mlp" : "cnn"; }
};

// Scratch buffers reused across samples by one thread.
struct Workspace {
  std::vector<std::vector<double>> act;
  std::vector<std::vector<double>> grad;
  std::vector<std::vector<int>> argmax;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual std::size_t param_count() const = 0;
  virtual int input_size() const = 0;
  virtual int classes() const = 0;
  virtual const ModelSpec& spec() const = 0;

  // Glorot-uniform weights, zero biases.
  virtual ParamVector init(std::uint64_t seed) const = 0;

  virtual Workspace workspace() const = 0;

  // Writes logits; activations stay in `ws` for a following backward().
  virtual void forward(std::span<const double> params, std::span<const float> x, Workspace& ws,
                       std::span<double> logits) const = 0;

  // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(logits).
  virtual void backward(std::span<const double> params, std::span<const float> x, Workspace& ws,
                        std::span<const double> dlogits, std::span<double> grad) const = 0;
};

namespace detail {

inline void glorot(Rng& rng, std::span<double> w, int fan_in, int fan_out) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : w) v = rng.uniform(-limit, limit);
}

}  // namespace detail

class Mlp final : public Model {
 public:
  explicit Mlp(ModelSpec spec) : spec_(std::move(spec)) {
    sizes_.push_back(spec_.input_size());
    for (int h : spec_.hidden) sizes_.push_back(h);
    sizes_.push_back(spec_.classes);
    for (int s : sizes_) {
      if (s <= 0) throw InvalidArgument("mlp layer sizes must be positive");
    }
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(off);
      off += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
    }
    count_ = off;
  }

  std::size_t param_count() const override { return count_; }
  int input_size() const override { return sizes_.front(); }
  int classes() const override { return sizes_.back(); }
  const ModelSpec& spec() const override { return spec_; }

  ParamVector init(std::uint64_t seed) const override {
    Rng rng(seed, Stream::kInit);
    ParamVector p(count_, 0.0);
    for (std::size_t l = 0; l < layers(); ++l) {
      const int in = sizes_[l], out = sizes_[l + 1];
      detail::glorot(rng, std::span<double>(p.data() + offsets_[l], static_cast<std::size_t>(in) * out), in, out);
    }
    return p;
  }

  Workspace workspace() const override {
    Workspace ws;
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
      ws.act.emplace_back(sizes_[l]);
      ws.grad.emplace_back(sizes_[l]);
    }
    return ws;
  }

  void forward(std::span<const double> params, std::span<const float> x, Workspace& ws,
               std::span<double> logits) const override {
    for (std::size_t l = 0; l < layers(); ++l) {
      const int in = sizes_[l], out = sizes_[l + 1];
      const double* w = params.data() + offsets_[l];
      const double* b = w + static_cast<std::size_t>(in) * out;
      std::vector<double>& a = ws.act[l];
      for (int o = 0; o < out; ++o) {
        const double* row = w + static_cast<std::size_t>(o) * in;
        double s = b[o];
        if (l == 0) {
          for (int i = 0; i < in; ++i) s += row[i] * x[i];
        } else {
          const std::vector<double>& prev = ws.act[l - 1];
          for (int i = 0; i < in; ++i) s += row[i] * prev[i];
        }
        a[o] = (l + 1 < layers()) ? std::max(s, 0.0) : s;
      }
    }
    std::copy(ws.act.back().begin(), ws.act.back().end(), logits.begin());
  }

  void backward(std::span<const double> params, std::span<const float> x, Workspace& ws,
                std::span<const double> dlogits, std::span<double> grad) const override {
    std::copy(dlogits.begin(), dlogits.end(), ws.grad.back().begin());
    for (std::size_t l = layers(); l-- > 0;) {
      const int in = sizes_[l], out = sizes_[l + 1];
      const double* w = params.data() + offsets_[l];
      double* gw = grad.data() + offsets_[l];
      double* gb = gw + static_cast<std::size_t>(in) * out;
      const std::vector<double>& delta = ws.grad[l];
      for (int o = 0; o < out; ++o) {
        const double d = delta[o];
        gb[o] += d;
        if (d == 0.0) continue;
        double* grow = gw + static_cast<std::size_t>(o) * in;
        if (l == 0) {
          for (int i = 0; i < in; ++i) grow[i] += d * x[i];
        } else {
          const std::vector<double>& prev = ws.act[l - 1];
          for (int i = 0; i < in; ++i) grow[i] += d * prev[i];
        }
      }
      if (l == 0) break;
      std::vector<double>& below = ws.grad[l - 1];
      std::fill(below.begin(), below.end(), 0.0);
      for (int o = 0; o < out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        const double* row = w + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) below[i] += d * row[i];
      }
      const std::vector<double>& a = ws.act[l - 1];
      for (int i = 0; i < in; ++i) {
        if (a[i] <= 0.0) below[i] = 0.0;
      }
    }
  }

 private:
  std::size_t layers() const { return sizes_.size() - 1; }

  ModelSpec spec_;
  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t count_ = 0;
};

// conv(k x k, same padding) -> ReLU -> maxpool 2x2 -> conv -> ReLU -> maxpool
// -> flatten -> dense -> ReLU -> dense. Activations are channel-major.
class Cnn final : public Model {
 public:
  explicit Cnn(ModelSpec spec) : spec_(std::move(spec)) {
    if (spec_.input_h % 4 != 0 || spec_.input_w % 4 != 0) {
      throw InvalidArgument("cnn input height and width must be multiples of 4");
    }
    if (spec_.kernel % 2 == 0) throw InvalidArgument("cnn kernel must be odd");
    const int k2 = spec_.kernel * spec_.kernel;
    h1_ = spec_.input_h;
    w1_ = spec_.input_w;
    h2_ = h1_ / 2;
    w2_ = w1_ / 2;
    h3_ = h2_ / 2;
    w3_ = w2_ / 2;
    flat_ = spec_.conv2 * h3_ * w3_;
    std::size_t off = 0;
    c1w_ = off; off += static_cast<std::size_t>(spec_.conv1) * spec_.input_c * k2;
    c1b_ = off; off += spec_.conv1;
    c2w_ = off; off += static_cast<std::size_t>(spec_.conv2) * spec_.conv1 * k2;
    c2b_ = off; off += spec_.conv2;
    f1w_ = off; off += static_cast<std::size_t>(spec_.dense) * flat_;
    f1b_ = off; off += spec_.dense;
    f2w_ = off; off += static_cast<std::size_t>(spec_.classes) * spec_.dense;
    f2b_ = off; off += spec_.classes;
    count_ = off;
  }

  std::size_t param_count() const override { return count_; }
  int input_size() const override { return spec_.input_size(); }
  int classes() const override { return spec_.classes; }
  const ModelSpec& spec() const override { return spec_; }

  ParamVector init(std::uint64_t seed) const override {
    Rng rng(seed, Stream::kInit);
    ParamVector p(count_, 0.0);
    const int k2 = spec_.kernel * spec_.kernel;
    auto fill = [&](std::size_t off, std::size_t n, int fan_in, int fan_out) {
      detail::glorot(rng, std::span<double>(p.data() + off, n), fan_in, fan_out);
    };
    fill(c1w_, c1b_ - c1w_, spec_.input_c * k2, spec_.conv1 * k2);
    fill(c2w_, c2b_ - c2w_, spec_.conv1 * k2, spec_.conv2 * k2);
    fill(f1w_, f1b_ - f1w_, flat_, spec_.dense);
    fill(f2w_, f2b_ - f2w_, spec_.dense, spec_.classes);
    return p;
  }

  // act: conv1 out, pool1 out, conv2 out, pool2 out, dense out
  Workspace workspace() const override {
    Workspace ws;
    const std::size_t s1 = static_cast<std::size_t>(spec_.conv1) * h1_ * w1_;
    const std::size_t p1 = static_cast<std::size_t>(spec_.conv1) * h2_ * w2_;
    const std::size_t s2 = static_cast<std::size_t>(spec_.conv2) * h2_ * w2_;
    const std::size_t p2 = static_cast<std::size_t>(flat_);
    for (std::size_t n : {s1, p1, s2, p2, static_cast<std::size_t>(spec_.dense)}) {
      ws.act.emplace_back(n);
      ws.grad.emplace_back(n);
    }
    ws.grad.emplace_back(spec_.input_size());
    ws.argmax.emplace_back(p1);
    ws.argmax.emplace_back(p2);
    return ws;
  }

  void forward(std::span<const double> params, std::span<const float> x, Workspace& ws,
               std::span<double> logits) const override {
    std::vector<double> input(x.begin(), x.end());
    conv_forward(params, c1w_, c1b_, input, spec_.input_c, spec_.conv1, h1_, w1_, ws.act[0]);
    pool_forward(ws.act[0], spec_.conv1, h1_, w1_, ws.act[1], ws.argmax[0]);
    conv_forward(params, c2w_, c2b_, ws.act[1], spec_.conv1, spec_.conv2, h2_, w2_, ws.act[2]);
    pool_forward(ws.act[2], spec_.conv2, h2_, w2_, ws.act[3], ws.argmax[1]);
    dense_forward(params, f1w_, f1b_, ws.act[3], flat_, spec_.dense, ws.act[4].data(), true);
    dense_forward(params, f2w_, f2b_, ws.act[4], spec_.dense, spec_.classes, logits.data(), false);
  }

  void backward(std::span<const double> params, std::span<const float> x, Workspace& ws,
                std::span<const double> dlogits, std::span<double> grad) const override {
    // dense 2
    dense_backward(params, f2w_, f2b_, ws.act[4], spec_.dense, spec_.classes, dlogits.data(), grad,
                   ws.grad[4]);
    for (int i = 0; i < spec_.dense; ++i) {
      if (ws.act[4][i] <= 0.0) ws.grad[4][i] = 0.0;
    }
    // dense 1
    dense_backward(params, f1w_, f1b_, ws.act[3], flat_, spec_.dense, ws.grad[4].data(), grad, ws.grad[3]);
    // pool 2 -> conv 2 (ReLU mask through the stored pre-pool activations)
    pool_backward(ws.grad[3], ws.argmax[1], ws.grad[2]);
    relu_mask(ws.act[2], ws.grad[2]);
    conv_backward(params, c2w_, c2b_, ws.act[1], spec_.conv1, spec_.conv2, h2_, w2_, ws.grad[2], grad,
                  &ws.grad[1]);
    pool_backward(ws.grad[1], ws.argmax[0], ws.grad[0]);
    relu_mask(ws.act[0], ws.grad[0]);
    std::vector<double> input(x.begin(), x.end());
    conv_backward(params, c1w_, c1b_, input, spec_.input_c, spec_.conv1, h1_, w1_, ws.grad[0], grad,
                  nullptr);
  }

 private:
  void conv_forward(std::span<const double> p, std::size_t woff, std::size_t boff,
                    const std::vector<double>& in, int cin, int cout, int h, int w,
                    std::vector<double>& out) const {
    const int k = spec_.kernel, pad = k / 2;
    for (int o = 0; o < cout; ++o) {
      double* dst = out.data() + static_cast<std::size_t>(o) * h * w;
      std::fill(dst, dst + h * w, p[boff + o]);
      for (int i = 0; i < cin; ++i) {
        const double* src = in.data() + static_cast<std::size_t>(i) * h * w;
        const double* kern = p.data() + woff + (static_cast<std::size_t>(o) * cin + i) * k * k;
        for (int dy = 0; dy < k; ++dy) {
          for (int dx = 0; dx < k; ++dx) {
            const double wt = kern[dy * k + dx];
            const int oy = dy - pad, ox = dx - pad;
            const int y0 = std::max(0, -oy), y1 = std::min(h, h - oy);
            const int x0 = std::max(0, -ox), x1 = std::min(w, w - ox);
            for (int y = y0; y < y1; ++y) {
              const double* s = src + (y + oy) * w + ox;
              double* d = dst + y * w;
              for (int xx = x0; xx < x1; ++xx) d[xx] += wt * s[xx];
            }
          }
        }
      }
      for (int j = 0; j < h * w; ++j) dst[j] = std::max(dst[j], 0.0);
    }
  }

  void conv_backward(std::span<const double> p, std::size_t woff, std::size_t boff,
                     const std::vector<double>& in, int cin, int cout, int h, int w,
                     const std::vector<double>& dout, std::span<double> grad,
                     std::vector<double>* din) const {
    const int k = spec_.kernel, pad = k / 2;
    if (din) std::fill(din->begin(), din->end(), 0.0);
    for (int o = 0; o < cout; ++o) {
      const double* g = dout.data() + static_cast<std::size_t>(o) * h * w;
      double bsum = 0.0;
      for (int j = 0; j < h * w; ++j) bsum += g[j];
      grad[boff + o] += bsum;
      for (int i = 0; i < cin; ++i) {
        const double* src = in.data() + static_cast<std::size_t>(i) * h * w;
        const std::size_t kbase = woff + (static_cast<std::size_t>(o) * cin + i) * k * k;
        for (int dy = 0; dy < k; ++dy) {
          for (int dx = 0; dx < k; ++dx) {
            const int oy = dy - pad, ox = dx - pad;
            const int y0 = std::max(0, -oy), y1 = std::min(h, h - oy);
            const int x0 = std::max(0, -ox), x1 = std::min(w, w - ox);
            double acc = 0.0;
            const double wt = p[kbase + dy * k + dx];
            for (int y = y0; y < y1; ++y) {
              const double* s = src + (y + oy) * w + ox;
              const double* gg = g + y * w;
              for (int xx = x0; xx < x1; ++xx) acc += gg[xx] * s[xx];
              if (din) {
                double* di = din->data() + static_cast<std::size_t>(i) * h * w + (y + oy) * w + ox;
                for (int xx = x0; xx < x1; ++xx) di[xx] += wt * gg[xx];
              }
            }
            grad[kbase + dy * k + dx] += acc;
          }
        }
      }
    }
  }

  static void pool_forward(const std::vector<double>& in, int c, int h, int w, std::vector<double>& out,
                           std::vector<int>& arg) {
    const int ho = h / 2, wo = w / 2;
    for (int ch = 0; ch < c; ++ch) {
      for (int y = 0; y < ho; ++y) {
        for (int x = 0; x < wo; ++x) {
          int best = (ch * h + 2 * y) * w + 2 * x;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const int j = (ch * h + 2 * y + dy) * w + 2 * x + dx;
              if (in[j] > in[best]) best = j;
            }
          }
          const int o = (ch * ho + y) * wo + x;
          out[o] = in[best];
          arg[o] = best;
        }
      }
    }
  }

  static void pool_backward(const std::vector<double>& dout, const std::vector<int>& arg,
                            std::vector<double>& din) {
    std::fill(din.begin(), din.end(), 0.0);
    for (std::size_t o = 0; o < dout.size(); ++o) din[static_cast<std::size_t>(arg[o])] += dout[o];
  }

  static void relu_mask(const std::vector<double>& act, std::vector<double>& g) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (act[j] <= 0.0) g[j] = 0.0;
    }
  }

  static void dense_forward(std::span<const double> p, std::size_t woff, std::size_t boff,
                            const std::vector<double>& in, int nin, int nout, double* out, bool relu) {
    for (int o = 0; o < nout; ++o) {
      const double* row = p.data() + woff + static_cast<std::size_t>(o) * nin;
      double s = p[boff + o];
      for (int i = 0; i < nin; ++i) s += row[i] * in[i];
      out[o] = relu ? std::max(s, 0.0) : s;
    }
  }

  static void dense_backward(std::span<const double> p, std::size_t woff, std::size_t boff,
                             const std::vector<double>& in, int nin, int nout, const double* dout,
                             std::span<double> grad, std::vector<double>& din) {
    std::fill(din.begin(), din.end(), 0.0);
    for (int o = 0; o < nout; ++o) {
      const double d = dout[o];
      grad[boff + o] += d;
      if (d == 0.0) continue;
      const double* row = p.data() + woff + static_cast<std::size_t>(o) * nin;
      double* grow = grad.data() + woff + static_cast<std::size_t>(o) * nin;
      for (int i = 0; i < nin; ++i) {
        grow[i] += d * in[i];
        din[i] += d * row[i];
      }
    }
  }

  ModelSpec spec_;
  int h1_, w1_, h2_, w2_, h3_, w3_, flat_;
  std::size_t c1w_, c1b_, c2w_, c2b_, f1w_, f1b_, f2w_, f2b_;
  std::size_t count_ = 0;
};

inline std::unique_ptr<Model> make_model(const ModelSpec& spec) {
  if (spec.kind == ModelSpec::Kind::kCnn) return std::make_unique<Cnn>(spec);
  return std::make_unique<Mlp>(spec);
}

// Softmax cross-entropy of one sample; writes d(loss)/d(logits).
inline double softmax_cross_entropy(std::span<const double> logits, int label,
                                    std::span<double> dlogits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    dlogits[k] = std::exp(logits[k] - mx);
    z += dlogits[k];
  }
  for (double& d : dlogits) d /= z;
  const double loss = std::log(z) + mx - logits[static_cast<std::size_t>(label)];
  dlogits[static_cast<std::size_t>(label)] -= 1.0;
  return loss;
}

}  // namespace fedsel
