#include "artstyle/nnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

#include "artstyle/kernels.hpp"
#include "artstyle/rng.hpp"

namespace artstyle::nnet {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

// ---- layer primitives (planar layout, one sample) ----

// in [C,H,W], w [F,C,3,3], b [F], out [F,H,W]; zero padding keeps H,W.
void conv3x3_forward(const double* in, int c_in, int h, int w, const double* weights,
                     const double* bias, int filters, double* out) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int f = 0; f < filters; ++f) {
    std::fill_n(out + f * plane, plane, bias[f]);
  }
  for (int f = 0; f < filters; ++f) {
    for (int c = 0; c < c_in; ++c) {
      const double* wk = weights + (static_cast<std::size_t>(f) * c_in + c) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const int dy = ky - 1;
        const int y_begin = std::max(0, -dy);
        const int y_end = h - std::max(0, dy);
        for (int y = y_begin; y < y_end; ++y) {
          const double* in_row = in + (static_cast<std::size_t>(c) * h + y + dy) * w;
          double* out_row = out + (static_cast<std::size_t>(f) * h + y) * w;
          for (int kx = 0; kx < 3; ++kx) {
            const int dx = kx - 1;
            const int x0 = std::max(0, -dx);
            const std::size_t count = static_cast<std::size_t>(w - std::abs(dx));
            kernels::axpy(wk[ky * 3 + kx], in_row + x0 + dx, out_row + x0, count);
          }
        }
      }
    }
  }
}

// dout [F,H,W] -> din [C,H,W] (accumulated; caller zeroes).
void conv3x3_backward_data(const double* dout, int filters, int h, int w,
                           const double* weights, int c_in, double* din) {
  for (int f = 0; f < filters; ++f) {
    for (int c = 0; c < c_in; ++c) {
      const double* wk = weights + (static_cast<std::size_t>(f) * c_in + c) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const int dy = ky - 1;
        const int y_begin = std::max(0, -dy);
        const int y_end = h - std::max(0, dy);
        for (int y = y_begin; y < y_end; ++y) {
          double* din_row = din + (static_cast<std::size_t>(c) * h + y + dy) * w;
          const double* dout_row = dout + (static_cast<std::size_t>(f) * h + y) * w;
          for (int kx = 0; kx < 3; ++kx) {
            const int dx = kx - 1;
            const int x0 = std::max(0, -dx);
            const std::size_t count = static_cast<std::size_t>(w - std::abs(dx));
            kernels::axpy(wk[ky * 3 + kx], dout_row + x0, din_row + x0 + dx, count);
          }
        }
      }
    }
  }
}

void conv3x3_backward_params(const double* dout, const double* in, int filters, int c_in,
                             int h, int w, double* dw, double* db) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int f = 0; f < filters; ++f) {
    db[f] += kernels::sum(dout + f * plane, plane);
  }
  for (int f = 0; f < filters; ++f) {
    for (int c = 0; c < c_in; ++c) {
      double* wk = dw + (static_cast<std::size_t>(f) * c_in + c) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const int dy = ky - 1;
        const int y_begin = std::max(0, -dy);
        const int y_end = h - std::max(0, dy);
        for (int y = y_begin; y < y_end; ++y) {
          const double* in_row = in + (static_cast<std::size_t>(c) * h + y + dy) * w;
          const double* dout_row = dout + (static_cast<std::size_t>(f) * h + y) * w;
          for (int kx = 0; kx < 3; ++kx) {
            const int dx = kx - 1;
            const int x0 = std::max(0, -dx);
            const std::size_t count = static_cast<std::size_t>(w - std::abs(dx));
            wk[ky * 3 + kx] += kernels::dot(dout_row + x0, in_row + x0 + dx, count);
          }
        }
      }
    }
  }
}

void relu_forward(const double* z, double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void relu_backward(const double* z, const double* da, double* dz, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dz[i] = z[i] > 0.0 ? da[i] : 0.0;
}

// in [C,H,W] -> out [C,H/2,W/2]; idx records the argmax position in the
// source array (first occurrence wins on ties).
void maxpool2_forward(const double* in, int c_in, int h, int w, double* out,
                      std::uint32_t* idx) {
  const int h2 = h / 2;
  const int w2 = w / 2;
  std::size_t o = 0;
  for (int c = 0; c < c_in; ++c) {
    for (int y2 = 0; y2 < h2; ++y2) {
      for (int x2 = 0; x2 < w2; ++x2, ++o) {
        double best = -std::numeric_limits<double>::infinity();
        std::uint32_t best_idx = 0;
        for (int yy = 0; yy < 2; ++yy) {
          for (int xx = 0; xx < 2; ++xx) {
            const std::size_t src =
                (static_cast<std::size_t>(c) * h + 2 * y2 + yy) * w + 2 * x2 + xx;
            if (in[src] > best) {
              best = in[src];
              best_idx = static_cast<std::uint32_t>(src);
            }
          }
        }
        out[o] = best;
        idx[o] = best_idx;
      }
    }
  }
}

void maxpool2_backward(const double* dout, const std::uint32_t* idx, std::size_t n_out,
                       double* din) {
  for (std::size_t i = 0; i < n_out; ++i) din[idx[i]] += dout[i];
}

// w is [n_out, n_in] row-major.
void fc_forward(const double* in, int n_in, const double* w, const double* b, int n_out,
                double* out) {
  for (int j = 0; j < n_out; ++j) {
    out[j] = b[j] + kernels::dot(w + static_cast<std::size_t>(j) * n_in, in, n_in);
  }
}

void fc_backward_data(const double* dout, const double* w, int n_out, int n_in, double* din) {
  for (int j = 0; j < n_out; ++j) {
    kernels::axpy(dout[j], w + static_cast<std::size_t>(j) * n_in, din, n_in);
  }
}

void fc_backward_params(const double* dout, const double* in, int n_out, int n_in, double* dw,
                        double* db) {
  for (int j = 0; j < n_out; ++j) {
    db[j] += dout[j];
    kernels::axpy(dout[j], in, dw + static_cast<std::size_t>(j) * n_in, n_in);
  }
}

// images [N,H,W,3] -> planar [N,3,H,W]
Tensor to_planar(const Tensor& images, int n, int h, int w, int c) {
  Tensor planar({static_cast<std::size_t>(n), static_cast<std::size_t>(c),
                 static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
  for (int i = 0; i < n; ++i) {
    const double* src = images.data.data() + static_cast<std::size_t>(i) * h * w * c;
    double* dst = planar.data.data() + static_cast<std::size_t>(i) * c * h * w;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int ch = 0; ch < c; ++ch) {
          dst[(static_cast<std::size_t>(ch) * h + y) * w + x] =
              src[(static_cast<std::size_t>(y) * w + x) * c + ch];
        }
      }
    }
  }
  return planar;
}

struct BatchView {
  const Tensor* images;
  int n = 0, h = 0, w = 0, c = 0;
};

BatchView check_image_shape(const NetworkConfig& config, const Tensor& images) {
  BatchView v;
  v.images = &images;
  if (images.shape.size() == 3) {
    v.n = 1;
    v.h = static_cast<int>(images.shape[0]);
    v.w = static_cast<int>(images.shape[1]);
    v.c = static_cast<int>(images.shape[2]);
  } else if (images.shape.size() == 4) {
    v.n = static_cast<int>(images.shape[0]);
    v.h = static_cast<int>(images.shape[1]);
    v.w = static_cast<int>(images.shape[2]);
    v.c = static_cast<int>(images.shape[3]);
  } else {
    throw ValidationError("forward: images must have shape [N,H,W,3] or [H,W,3]");
  }
  if (v.h != config.input_h || v.w != config.input_w || v.c != config.input_c) {
    throw ValidationError("forward: image shape " + std::to_string(v.h) + "x" +
                          std::to_string(v.w) + "x" + std::to_string(v.c) +
                          " does not match network input " + std::to_string(config.input_h) +
                          "x" + std::to_string(config.input_w) + "x" +
                          std::to_string(config.input_c));
  }
  return v;
}

int parse_conv_layer(const NetworkConfig& config, const std::string& layer_id) {
  if (layer_id.rfind("conv", 0) == 0) {
    const std::string num = layer_id.substr(4);
    if (!num.empty() && num.find_first_not_of("0123456789") == std::string::npos) {
      const int k = std::stoi(num);
      if (k >= 1 && k <= static_cast<int>(config.conv_blocks.size())) return k - 1;
    }
  }
  throw ValidationError("unknown convolution layer id '" + layer_id + "' (network has " +
                        std::to_string(config.conv_blocks.size()) + " conv blocks)");
}

// ---- checkpoint byte helpers (explicit little-endian) ----

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::string_view bytes, std::size_t& pos) {
  if (pos + 4 > bytes.size()) throw ValidationError("checkpoint: truncated");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  pos += 4;
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(std::string_view bytes, std::size_t& pos) {
  return std::bit_cast<float>(get_u32(bytes, pos));
}

}  // namespace

void NetworkConfig::validate() const {
  if (input_h < 1 || input_w < 1 || input_c < 1) {
    throw ValidationError("network config: input dimensions must be positive");
  }
  if (feature_width != kFeatureWidth) {
    throw ValidationError("network config: feature width is fixed at 512");
  }
  if (num_classes != kNumClasses) {
    throw ValidationError("network config: class count is fixed at 9");
  }
  int h = input_h, w = input_w;
  for (std::size_t k = 0; k < conv_blocks.size(); ++k) {
    const auto& block = conv_blocks[k];
    if (block.filters < 1) throw ValidationError("network config: zero-sized conv layer");
    if (block.kernel != 3 || block.pool != 2) {
      throw ValidationError("network config: conv blocks use kernel 3 and pool 2");
    }
    if (h < 2 || w < 2) {
      throw ValidationError("network config: spatial size vanishes before block " +
                            std::to_string(k + 1));
    }
    h /= 2;
    w /= 2;
  }
}

std::pair<int, int> NetworkConfig::block_output_size(int k) const {
  int h = input_h, w = input_w;
  for (int i = 0; i <= k; ++i) {
    h /= 2;
    w /= 2;
  }
  return {h, w};
}

int NetworkConfig::flatten_size() const {
  if (conv_blocks.empty()) return input_h * input_w * input_c;
  const auto [h, w] = block_output_size(static_cast<int>(conv_blocks.size()) - 1);
  return conv_blocks.back().filters * h * w;
}

std::size_t NetworkConfig::parameter_count() const {
  std::size_t total = 0;
  int c = input_c;
  for (const auto& block : conv_blocks) {
    total += static_cast<std::size_t>(block.filters) * c * 9 + block.filters;
    c = block.filters;
  }
  total += static_cast<std::size_t>(feature_width) * flatten_size() + feature_width;
  total += static_cast<std::size_t>(num_classes) * feature_width + num_classes;
  return total;
}

ParamSet ParamSet::zeros(const NetworkConfig& config) {
  ParamSet p;
  int c = config.input_c;
  for (const auto& block : config.conv_blocks) {
    p.conv_w.emplace_back(std::vector<std::size_t>{static_cast<std::size_t>(block.filters),
                                                   static_cast<std::size_t>(c), 3, 3});
    p.conv_b.emplace_back(std::vector<std::size_t>{static_cast<std::size_t>(block.filters)});
    c = block.filters;
  }
  p.feature_w = Tensor({static_cast<std::size_t>(config.feature_width),
                        static_cast<std::size_t>(config.flatten_size())});
  p.feature_b = Tensor({static_cast<std::size_t>(config.feature_width)});
  p.output_w = Tensor({static_cast<std::size_t>(config.num_classes),
                       static_cast<std::size_t>(config.feature_width)});
  p.output_b = Tensor({static_cast<std::size_t>(config.num_classes)});
  return p;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ValidationError("train config: batch size must be positive");
  if (!(learning_rate > 0.0)) throw ValidationError("train config: learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ValidationError("train config: momentum must lie in [0, 1)");
  }
  if (epochs < 0) throw ValidationError("train config: negative epoch count");
}

NetworkParams init_params(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  NetworkParams params;
  params.config = config;
  params.rng_seed = seed;
  params.p = ParamSet::zeros(config);

  rng::Engine engine(seed);
  auto fill_fan_in = [&engine](Tensor& t, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : t.data) v = rng::uniform(engine, -bound, bound);
  };

  int c = config.input_c;
  for (std::size_t k = 0; k < params.p.conv_w.size(); ++k) {
    fill_fan_in(params.p.conv_w[k], static_cast<std::size_t>(c) * 9);
    c = config.conv_blocks[k].filters;
  }
  fill_fan_in(params.p.feature_w, config.flatten_size());
  fill_fan_in(params.p.output_w, config.feature_width);
  return params;
}

std::pair<Tensor, ForwardCache> forward(const NetworkParams& params, const Tensor& images) {
  const NetworkConfig& config = params.config;
  const BatchView view = check_image_shape(config, images);
  const int n = view.n;

  ForwardCache cache;
  cache.batch = n;
  cache.input_planar = to_planar(images, n, config.input_h, config.input_w, config.input_c);

  const std::size_t blocks = config.conv_blocks.size();
  cache.conv_z.resize(blocks);
  cache.conv_a.resize(blocks);
  cache.pool_out.resize(blocks);
  cache.pool_idx.resize(blocks);

  int c = config.input_c, h = config.input_h, w = config.input_w;
  const Tensor* block_in = &cache.input_planar;
  for (std::size_t k = 0; k < blocks; ++k) {
    const int f = config.conv_blocks[k].filters;
    const int h2 = h / 2, w2 = w / 2;
    cache.conv_z[k] = Tensor({static_cast<std::size_t>(n), static_cast<std::size_t>(f),
                              static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
    cache.conv_a[k] = cache.conv_z[k];
    cache.pool_out[k] = Tensor({static_cast<std::size_t>(n), static_cast<std::size_t>(f),
                                static_cast<std::size_t>(h2), static_cast<std::size_t>(w2)});
    cache.pool_idx[k].assign(static_cast<std::size_t>(n) * f * h2 * w2, 0);

    const std::size_t in_stride = static_cast<std::size_t>(c) * h * w;
    const std::size_t z_stride = static_cast<std::size_t>(f) * h * w;
    const std::size_t p_stride = static_cast<std::size_t>(f) * h2 * w2;
    for (int i = 0; i < n; ++i) {
      const double* in = block_in->data.data() + i * in_stride;
      double* z = cache.conv_z[k].data.data() + i * z_stride;
      double* a = cache.conv_a[k].data.data() + i * z_stride;
      double* p = cache.pool_out[k].data.data() + i * p_stride;
      std::uint32_t* idx = cache.pool_idx[k].data() + i * p_stride;
      conv3x3_forward(in, c, h, w, params.p.conv_w[k].data.data(),
                      params.p.conv_b[k].data.data(), f, z);
      relu_forward(z, a, z_stride);
      maxpool2_forward(a, f, h, w, p, idx);
    }
    block_in = &cache.pool_out[k];
    c = f;
    h = h2;
    w = w2;
  }

  const int flatten = config.flatten_size();
  cache.feature_z = Tensor({static_cast<std::size_t>(n),
                            static_cast<std::size_t>(config.feature_width)});
  cache.feature_a = cache.feature_z;
  cache.logits = Tensor({static_cast<std::size_t>(n),
                         static_cast<std::size_t>(config.num_classes)});
  for (int i = 0; i < n; ++i) {
    const double* flat = block_in->data.data() + static_cast<std::size_t>(i) * flatten;
    double* zf = cache.feature_z.data.data() + static_cast<std::size_t>(i) * config.feature_width;
    double* af = cache.feature_a.data.data() + static_cast<std::size_t>(i) * config.feature_width;
    double* logits = cache.logits.data.data() + static_cast<std::size_t>(i) * config.num_classes;
    fc_forward(flat, flatten, params.p.feature_w.data.data(), params.p.feature_b.data.data(),
               config.feature_width, zf);
    relu_forward(zf, af, config.feature_width);
    fc_forward(af, config.feature_width, params.p.output_w.data.data(),
               params.p.output_b.data.data(), config.num_classes, logits);
  }

  if (!cache.logits.all_finite()) {
    throw NumericError("forward: non-finite logits");
  }
  return {cache.logits, std::move(cache)};
}

Tensor softmax(const Tensor& logits) {
  if (logits.shape.size() != 2) throw ValidationError("softmax: expected [N, classes]");
  Tensor probs = logits;
  const std::size_t n = logits.shape[0];
  const std::size_t k = logits.shape[1];
  for (std::size_t i = 0; i < n; ++i) {
    double* row = probs.data.data() + i * k;
    const double peak = *std::max_element(row, row + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = std::exp(row[j] - peak);
      total += row[j];
    }
    for (std::size_t j = 0; j < k; ++j) row[j] /= total;
  }
  return probs;
}

double cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
  if (probs.shape.size() != 2 || probs.shape[0] != labels.size()) {
    throw ValidationError("cross_entropy: probabilities/labels size mismatch");
  }
  const std::size_t k = probs.shape[1];
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw ValidationError("cross_entropy: label " + std::to_string(labels[i]) +
                            " outside 0.." + std::to_string(k - 1));
    }
    const double p = std::max(probs.data[i * k + labels[i]], 1e-12);
    total -= std::log(p);
  }
  return total / static_cast<double>(labels.size());
}

ParamSet backward(const NetworkParams& params, const ForwardCache& cache,
                  const std::vector<int>& labels) {
  const NetworkConfig& config = params.config;
  const int n = cache.batch;
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw ValidationError("backward: cache batch does not match label count");
  }
  if (cache.conv_z.size() != config.conv_blocks.size() ||
      cache.feature_z.numel() != static_cast<std::size_t>(n) * config.feature_width) {
    throw ValidationError("backward: cache does not match network config");
  }

  const Tensor probs = softmax(cache.logits);
  ParamSet grads = ParamSet::zeros(config);
  const int flatten = config.flatten_size();
  const std::size_t blocks = config.conv_blocks.size();

  std::vector<double> dlogits(config.num_classes);
  std::vector<double> dfeature(config.feature_width);
  std::vector<double> dfeature_z(config.feature_width);
  std::vector<double> dflatten(flatten);

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < config.num_classes; ++j) {
      const double one_hot = (j == labels[i]) ? 1.0 : 0.0;
      dlogits[j] = (probs.data[static_cast<std::size_t>(i) * config.num_classes + j] - one_hot) /
                   static_cast<double>(n);
    }

    const double* af = cache.feature_a.data.data() + static_cast<std::size_t>(i) * config.feature_width;
    const double* zf = cache.feature_z.data.data() + static_cast<std::size_t>(i) * config.feature_width;
    const double* flat =
        (blocks == 0 ? cache.input_planar : cache.pool_out.back()).data.data() +
        static_cast<std::size_t>(i) * flatten;

    fc_backward_params(dlogits.data(), af, config.num_classes, config.feature_width,
                       grads.output_w.data.data(), grads.output_b.data.data());
    std::fill(dfeature.begin(), dfeature.end(), 0.0);
    fc_backward_data(dlogits.data(), params.p.output_w.data.data(), config.num_classes,
                     config.feature_width, dfeature.data());
    relu_backward(zf, dfeature.data(), dfeature_z.data(), config.feature_width);

    fc_backward_params(dfeature_z.data(), flat, config.feature_width, flatten,
                       grads.feature_w.data.data(), grads.feature_b.data.data());
    std::fill(dflatten.begin(), dflatten.end(), 0.0);
    fc_backward_data(dfeature_z.data(), params.p.feature_w.data.data(), config.feature_width,
                     flatten, dflatten.data());

    // walk conv blocks in reverse; dflatten doubles as d(pool out) of the last block
    std::vector<double> dpool = dflatten;
    for (int k = static_cast<int>(blocks) - 1; k >= 0; --k) {
      const int f = config.conv_blocks[k].filters;
      const int c_in = (k == 0) ? config.input_c : config.conv_blocks[k - 1].filters;
      int h = config.input_h, w = config.input_w;
      for (int b = 0; b < k; ++b) {
        h /= 2;
        w /= 2;
      }
      const std::size_t z_stride = static_cast<std::size_t>(f) * h * w;
      const std::size_t p_stride = static_cast<std::size_t>(f) * (h / 2) * (w / 2);

      std::vector<double> dconv_a(z_stride, 0.0);
      maxpool2_backward(dpool.data(), cache.pool_idx[k].data() + i * p_stride, p_stride,
                        dconv_a.data());
      std::vector<double> dconv_z(z_stride);
      relu_backward(cache.conv_z[k].data.data() + i * z_stride, dconv_a.data(), dconv_z.data(),
                    z_stride);

      const double* block_in =
          (k == 0 ? cache.input_planar : cache.pool_out[k - 1]).data.data() +
          static_cast<std::size_t>(i) * c_in * h * w;
      conv3x3_backward_params(dconv_z.data(), block_in, f, c_in, h, w,
                              grads.conv_w[k].data.data(), grads.conv_b[k].data.data());

      if (k > 0) {
        dpool.assign(static_cast<std::size_t>(c_in) * h * w, 0.0);
        conv3x3_backward_data(dconv_z.data(), f, h, w, params.p.conv_w[k].data.data(), c_in,
                              dpool.data());
      }
    }
  }
  return grads;
}

namespace {

double batch_accuracy(const Tensor& probs, const std::vector<int>& labels) {
  const std::size_t k = probs.shape[1];
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double* row = probs.data.data() + i * k;
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (row[j] > row[best]) best = j;
    }
    if (static_cast<int>(best) == labels[i]) ++correct;
  }
  return labels.empty() ? 0.0 : static_cast<double>(correct) / labels.size();
}

Tensor slice_images(const Tensor& images, const std::vector<std::size_t>& order,
                    std::size_t begin, std::size_t end) {
  const std::size_t h = images.shape[1], w = images.shape[2], c = images.shape[3];
  const std::size_t stride = h * w * c;
  Tensor batch({end - begin, h, w, c});
  for (std::size_t i = begin; i < end; ++i) {
    std::copy_n(images.data.data() + order[i] * stride, stride,
                batch.data.data() + (i - begin) * stride);
  }
  return batch;
}

std::pair<double, double> dataset_metrics(const NetworkParams& params, const Dataset& data,
                                          int batch_size) {
  if (data.labels.empty()) return {0.0, 0.0};
  const std::size_t n = data.labels.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  double loss_total = 0.0;
  double correct_weighted = 0.0;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    Tensor batch = slice_images(data.images, order, begin, end);
    std::vector<int> labels(data.labels.begin() + begin, data.labels.begin() + end);
    auto [logits, cache] = forward(params, batch);
    const Tensor probs = softmax(logits);
    loss_total += cross_entropy(probs, labels) * static_cast<double>(labels.size());
    correct_weighted += batch_accuracy(probs, labels) * static_cast<double>(labels.size());
  }
  return {loss_total / static_cast<double>(n), correct_weighted / static_cast<double>(n)};
}

void check_dataset(const Dataset& data, const NetworkConfig& config, const char* name) {
  if (data.images.shape.size() != 4) {
    throw ValidationError(std::string(name) + " set: images must be [N,H,W,3]");
  }
  if (data.images.shape[0] != data.labels.size()) {
    throw ValidationError(std::string(name) + " set: image/label count mismatch");
  }
  for (int label : data.labels) {
    if (label < 0 || label >= config.num_classes) {
      throw ValidationError(std::string(name) + " set: label outside class range");
    }
  }
}

}  // namespace

std::pair<NetworkParams, TrainHistory> train(const Dataset& train_set, const Dataset& val_set,
                                             const TrainConfig& config,
                                             const NetworkConfig& net_config) {
  net_config.validate();
  config.validate();
  if (train_set.labels.empty()) throw ValidationError("train: empty training set");
  check_dataset(train_set, net_config, "train");
  if (!val_set.labels.empty()) check_dataset(val_set, net_config, "validation");

  NetworkParams params = init_params(net_config, config.seed);
  TrainHistory history;
  if (config.epochs == 0) return {std::move(params), history};

  ParamSet velocity = ParamSet::zeros(net_config);
  rng::Engine shuffle_engine(mix_seed(config.seed, 0x5eed));

  NetworkParams best_params = params;
  double best_val_acc = -1.0;

  const std::size_t n = train_set.labels.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng::shuffle(order, shuffle_engine);

    double loss_sum = 0.0;
    double acc_sum = 0.0;
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const std::size_t end = std::min(n, begin + config.batch_size);
      Tensor batch = slice_images(train_set.images, order, begin, end);
      std::vector<int> labels(end - begin);
      for (std::size_t i = begin; i < end; ++i) labels[i - begin] = train_set.labels[order[i]];

      auto [logits, cache] = forward(params, batch);
      const Tensor probs = softmax(logits);
      const double loss = cross_entropy(probs, labels);
      if (!std::isfinite(loss)) {
        throw NumericError("train: loss diverged at epoch " + std::to_string(epoch + 1) +
                           ", batch starting at sample " + std::to_string(begin));
      }
      loss_sum += loss * static_cast<double>(labels.size());
      acc_sum += batch_accuracy(probs, labels) * static_cast<double>(labels.size());

      const ParamSet grads = backward(params, cache, labels);
      auto sgd_update = [&config](Tensor& weight, Tensor& vel, const Tensor& grad) {
        kernels::scale(vel.data.data(), config.momentum, vel.numel());
        kernels::axpy(-config.learning_rate, grad.data.data(), vel.data.data(), vel.numel());
        kernels::axpy(1.0, vel.data.data(), weight.data.data(), weight.numel());
      };
      for (std::size_t k = 0; k < params.p.conv_w.size(); ++k) {
        sgd_update(params.p.conv_w[k], velocity.conv_w[k], grads.conv_w[k]);
        sgd_update(params.p.conv_b[k], velocity.conv_b[k], grads.conv_b[k]);
      }
      sgd_update(params.p.feature_w, velocity.feature_w, grads.feature_w);
      sgd_update(params.p.feature_b, velocity.feature_b, grads.feature_b);
      sgd_update(params.p.output_w, velocity.output_w, grads.output_w);
      sgd_update(params.p.output_b, velocity.output_b, grads.output_b);
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(n);
    stats.train_accuracy = acc_sum / static_cast<double>(n);
    std::tie(stats.val_loss, stats.val_accuracy) =
        dataset_metrics(params, val_set, config.batch_size);
    if (!val_set.labels.empty() && !std::isfinite(stats.val_loss)) {
      throw NumericError("train: validation loss diverged at epoch " + std::to_string(epoch + 1));
    }
    history.epochs.push_back(stats);

    const double selector =
        val_set.labels.empty() ? stats.train_accuracy : stats.val_accuracy;
    if (selector > best_val_acc) {
      best_val_acc = selector;
      best_params = params;
      history.best_epoch = epoch;
    }
  }
  return {std::move(best_params), std::move(history)};
}

namespace {

void require_single_image(const Tensor& image, const char* op) {
  if (image.shape.size() == 4 && image.shape[0] != 1) {
    throw ValidationError(std::string(op) + ": expects a single image");
  }
}

}  // namespace

std::vector<double> extract_features(const NetworkParams& params, const Tensor& image) {
  require_single_image(image, "extract_features");
  auto [logits, cache] = forward(params, image);
  (void)logits;
  return {cache.feature_a.data.begin(),
          cache.feature_a.data.begin() + params.config.feature_width};
}

namespace {

// Backpropagates a logit gradient to d(pool out) of block `stop_block`,
// or all the way to the planar input when stop_block == -1.
std::vector<double> backprop_to_block(const NetworkParams& params, const ForwardCache& cache,
                                      const std::vector<double>& dlogits, int stop_block) {
  const NetworkConfig& config = params.config;
  const int flatten = config.flatten_size();
  const std::size_t blocks = config.conv_blocks.size();

  std::vector<double> dfeature(config.feature_width, 0.0);
  fc_backward_data(dlogits.data(), params.p.output_w.data.data(), config.num_classes,
                   config.feature_width, dfeature.data());
  std::vector<double> dfeature_z(config.feature_width);
  relu_backward(cache.feature_z.data.data(), dfeature.data(), dfeature_z.data(),
                config.feature_width);
  std::vector<double> dflat(flatten, 0.0);
  fc_backward_data(dfeature_z.data(), params.p.feature_w.data.data(), config.feature_width,
                   flatten, dflat.data());

  std::vector<double> dpool = std::move(dflat);
  for (int k = static_cast<int>(blocks) - 1; k > stop_block; --k) {
    const int f = config.conv_blocks[k].filters;
    const int c_in = (k == 0) ? config.input_c : config.conv_blocks[k - 1].filters;
    int h = config.input_h, w = config.input_w;
    for (int b = 0; b < k; ++b) {
      h /= 2;
      w /= 2;
    }
    const std::size_t z_stride = static_cast<std::size_t>(f) * h * w;
    const std::size_t p_stride = static_cast<std::size_t>(f) * (h / 2) * (w / 2);

    std::vector<double> dconv_a(z_stride, 0.0);
    maxpool2_backward(dpool.data(), cache.pool_idx[k].data(), p_stride, dconv_a.data());
    std::vector<double> dconv_z(z_stride);
    relu_backward(cache.conv_z[k].data.data(), dconv_a.data(), dconv_z.data(), z_stride);
    dpool.assign(static_cast<std::size_t>(c_in) * h * w, 0.0);
    conv3x3_backward_data(dconv_z.data(), f, h, w, params.p.conv_w[k].data.data(), c_in,
                          dpool.data());
  }
  return dpool;
}

}  // namespace

GradCamMap grad_cam(const NetworkParams& params, const Tensor& image, int class_index,
                    const std::string& layer_id, bool upsample) {
  const NetworkConfig& config = params.config;
  if (class_index < 0 || class_index >= config.num_classes) {
    throw ValidationError("grad_cam: class index " + std::to_string(class_index) +
                          " outside 0.." + std::to_string(config.num_classes - 1));
  }
  const int layer = parse_conv_layer(config, layer_id);
  require_single_image(image, "grad_cam");
  auto [logits, cache] = forward(params, image);
  (void)logits;

  std::vector<double> dlogits(config.num_classes, 0.0);
  dlogits[class_index] = 1.0;

  // gradient w.r.t. the layer's pool output, then unpooled to its post-ReLU
  // activation map
  const std::vector<double> dpool = backprop_to_block(params, cache, dlogits, layer);
  const int f = config.conv_blocks[layer].filters;
  int h = config.input_h, w = config.input_w;
  for (int b = 0; b < layer; ++b) {
    h /= 2;
    w /= 2;
  }
  const std::size_t z_stride = static_cast<std::size_t>(f) * h * w;
  const std::size_t p_stride = static_cast<std::size_t>(f) * (h / 2) * (w / 2);
  std::vector<double> dact(z_stride, 0.0);
  maxpool2_backward(dpool.data(), cache.pool_idx[layer].data(), p_stride, dact.data());

  const double* act = cache.conv_a[layer].data.data();

  GradCamMap map;
  map.height = h;
  map.width = w;
  map.layer_id = layer_id;
  map.class_index = class_index;
  map.values = gradcam_combine({act, z_stride}, {dact.data(), z_stride}, f, h, w);

  if (upsample) {
    Tensor up({static_cast<std::size_t>(config.input_h), static_cast<std::size_t>(config.input_w)});
    const double sx = static_cast<double>(w) / config.input_w;
    const double sy = static_cast<double>(h) / config.input_h;
    for (int y = 0; y < config.input_h; ++y) {
      const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
      const int y0 = std::min(static_cast<int>(fy), h - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double wy = fy - y0;
      for (int x = 0; x < config.input_w; ++x) {
        const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
        const int x0 = std::min(static_cast<int>(fx), w - 1);
        const int x1 = std::min(x0 + 1, w - 1);
        const double wx = fx - x0;
        const double top = map.values[y0 * w + x0] * (1 - wx) + map.values[y0 * w + x1] * wx;
        const double bottom = map.values[y1 * w + x0] * (1 - wx) + map.values[y1 * w + x1] * wx;
        up.data[static_cast<std::size_t>(y) * config.input_w + x] = top * (1 - wy) + bottom * wy;
      }
    }
    map.upsampled = std::move(up);
  }
  return map;
}

std::vector<double> gradcam_combine(std::span<const double> activations,
                                    std::span<const double> gradients, int channels, int height,
                                    int width) {
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  if (activations.size() != plane * channels || gradients.size() != plane * channels) {
    throw ValidationError("gradcam_combine: size mismatch");
  }
  std::vector<double> map(plane, 0.0);
  for (int ch = 0; ch < channels; ++ch) {
    const double alpha =
        kernels::sum(gradients.data() + ch * plane, plane) / static_cast<double>(plane);
    kernels::axpy(alpha, activations.data() + ch * plane, map.data(), plane);
  }
  for (double& v : map) v = std::max(v, 0.0);
  return map;
}

namespace {

// Forward up to the pre-ReLU response of block `layer`, keeping what the
// input-gradient pass needs.
struct PartialForward {
  std::vector<Tensor> conv_z;
  std::vector<Tensor> pool_out;
  std::vector<std::vector<std::uint32_t>> pool_idx;
  Tensor layer_z;  // [F,h,w] of the target block
};

PartialForward partial_forward(const NetworkParams& params, const Tensor& planar_input,
                               int layer) {
  const NetworkConfig& config = params.config;
  PartialForward pf;
  int c = config.input_c, h = config.input_h, w = config.input_w;
  const Tensor* in = &planar_input;
  for (int k = 0; k <= layer; ++k) {
    const int f = config.conv_blocks[k].filters;
    Tensor z({static_cast<std::size_t>(f), static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
    conv3x3_forward(in->data.data(), c, h, w, params.p.conv_w[k].data.data(),
                    params.p.conv_b[k].data.data(), f, z.data.data());
    if (k == layer) {
      pf.layer_z = std::move(z);
      break;
    }
    Tensor a = z;
    relu_forward(z.data.data(), a.data.data(), z.numel());
    Tensor p({static_cast<std::size_t>(f), static_cast<std::size_t>(h / 2),
              static_cast<std::size_t>(w / 2)});
    std::vector<std::uint32_t> idx(p.numel());
    maxpool2_forward(a.data.data(), f, h, w, p.data.data(), idx.data());
    pf.conv_z.push_back(std::move(z));
    pf.pool_out.push_back(std::move(p));
    pf.pool_idx.push_back(std::move(idx));
    in = &pf.pool_out.back();
    c = f;
    h /= 2;
    w /= 2;
  }
  return pf;
}

}  // namespace

Tensor filter_visualization(const NetworkParams& params, const std::string& layer_id,
                            int filter_index, int iterations, double step_size,
                            std::uint64_t noise_seed, std::vector<double>* objective_history,
                            Tensor* raw_image) {
  const NetworkConfig& config = params.config;
  const int layer = parse_conv_layer(config, layer_id);
  const int filters = config.conv_blocks[layer].filters;
  if (filter_index < 0 || filter_index >= filters) {
    throw ValidationError("filter_visualization: filter index " + std::to_string(filter_index) +
                          " outside 0.." + std::to_string(filters - 1));
  }
  if (iterations < 0) throw ValidationError("filter_visualization: negative iteration count");
  if (!(step_size > 0.0)) throw ValidationError("filter_visualization: step size must be > 0");

  const int h = config.input_h, w = config.input_w, c = config.input_c;
  int lh = h, lw = w;
  for (int b = 0; b < layer; ++b) {
    lh /= 2;
    lw /= 2;
  }
  const std::size_t plane = static_cast<std::size_t>(lh) * lw;

  rng::Engine engine(mix_seed(params.rng_seed ^ noise_seed, static_cast<std::uint64_t>(layer) * 131 +
                                                                static_cast<std::uint64_t>(filter_index)));
  Tensor planar({static_cast<std::size_t>(c), static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
  for (double& v : planar.data) v = rng::uniform_unit(engine);

  auto objective = [&](const Tensor& x) {
    const PartialForward pf = partial_forward(params, x, layer);
    return kernels::sum(pf.layer_z.data.data() + filter_index * plane, plane) /
           static_cast<double>(plane);
  };

  double step = step_size;
  double best_obj = objective(planar);
  if (objective_history) objective_history->clear();
  for (int it = 0; it < iterations; ++it) {
    const PartialForward pf = partial_forward(params, planar, layer);

    // seed gradient: d(objective)/d(layer z) is uniform over the chosen filter
    const int f = config.conv_blocks[layer].filters;
    std::vector<double> dz(static_cast<std::size_t>(f) * plane, 0.0);
    std::fill_n(dz.data() + filter_index * plane, plane, 1.0 / static_cast<double>(plane));

    std::vector<double> dgrad;
    int ch = layer == 0 ? config.input_c : config.conv_blocks[layer - 1].filters;
    int hh = lh, ww = lw;
    dgrad.assign(static_cast<std::size_t>(ch) * hh * ww, 0.0);
    conv3x3_backward_data(dz.data(), f, hh, ww, params.p.conv_w[layer].data.data(), ch,
                          dgrad.data());
    for (int k = layer - 1; k >= 0; --k) {
      const int fk = config.conv_blocks[k].filters;
      const int c_in = (k == 0) ? config.input_c : config.conv_blocks[k - 1].filters;
      int bh = h, bw = w;
      for (int b = 0; b < k; ++b) {
        bh /= 2;
        bw /= 2;
      }
      const std::size_t zs = static_cast<std::size_t>(fk) * bh * bw;
      std::vector<double> da(zs, 0.0);
      maxpool2_backward(dgrad.data(), pf.pool_idx[k].data(), pf.pool_out[k].numel(), da.data());
      std::vector<double> dzk(zs);
      relu_backward(pf.conv_z[k].data.data(), da.data(), dzk.data(), zs);
      dgrad.assign(static_cast<std::size_t>(c_in) * bh * bw, 0.0);
      conv3x3_backward_data(dzk.data(), fk, bh, bw, params.p.conv_w[k].data.data(), c_in,
                            dgrad.data());
    }

    Tensor trial = planar;
    kernels::axpy(step, dgrad.data(), trial.data.data(), trial.numel());
    const double trial_obj = objective(trial);
    if (!std::isfinite(trial_obj)) break;  // keep the last good image
    if (trial_obj < best_obj) {
      step *= 0.5;  // regression: keep the current image, shrink the step
    } else {
      planar = std::move(trial);
      best_obj = trial_obj;
    }
    if (objective_history) objective_history->push_back(best_obj);
  }

  // de-planarize and normalize to [0,1]
  Tensor out({static_cast<std::size_t>(h), static_cast<std::size_t>(w), static_cast<std::size_t>(c)});
  Tensor raw = out;
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out.data[(static_cast<std::size_t>(y) * w + x) * c + ch] =
            planar.data[(static_cast<std::size_t>(ch) * h + y) * w + x];
      }
    }
  }
  raw.data = out.data;
  if (raw_image) *raw_image = raw;
  const auto [lo_it, hi_it] = std::minmax_element(out.data.begin(), out.data.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi > lo) {
    for (double& v : out.data) v = (v - lo) / (hi - lo);
  } else {
    std::fill(out.data.begin(), out.data.end(), 0.0);
  }
  return out;
}

namespace {

double batch_loss(const NetworkParams& params, const Tensor& images,
                  const std::vector<int>& labels) {
  auto [logits, cache] = forward(params, images);
  (void)cache;
  return cross_entropy(softmax(logits), labels);
}

// Finite differences need a point where no ReLU input or pool-window
// contest sits within the perturbation's reach of a kink.
bool well_conditioned(const ForwardCache& cache, double margin) {
  for (const Tensor& z : cache.conv_z) {
    for (double v : z.data) {
      if (std::abs(v) < margin) return false;
    }
  }
  for (double v : cache.feature_z.data) {
    if (std::abs(v) < margin) return false;
  }
  for (std::size_t k = 0; k < cache.conv_a.size(); ++k) {
    const Tensor& a = cache.conv_a[k];
    const std::size_t n = a.shape[0], f = a.shape[1], h = a.shape[2], w = a.shape[3];
    for (std::size_t i = 0; i < n * f; ++i) {
      const double* pl = a.data.data() + i * h * w;
      for (std::size_t y2 = 0; y2 < h / 2; ++y2) {
        for (std::size_t x2 = 0; x2 < w / 2; ++x2) {
          double top1 = -1.0, top2 = -1.0;
          for (int yy = 0; yy < 2; ++yy) {
            for (int xx = 0; xx < 2; ++xx) {
              const double v = pl[(2 * y2 + yy) * w + 2 * x2 + xx];
              if (v > top1) {
                top2 = top1;
                top1 = v;
              } else if (v > top2) {
                top2 = v;
              }
            }
          }
          if (top1 > 0.0 && top1 - top2 < margin) return false;
        }
      }
    }
  }
  return true;
}

}  // namespace

double gradient_check(const NetworkConfig& config, std::uint64_t seed, double eps) {
  if (!(eps > 0.0)) throw ValidationError("gradient_check: eps must be > 0");
  config.validate();
  if (config.parameter_count() > 50000) {
    throw ValidationError("gradient_check: config too large for finite differences (" +
                          std::to_string(config.parameter_count()) + " parameters)");
  }

  constexpr int kBatch = 2;
  constexpr double kKinkMargin = 1e-4;

  NetworkParams params;
  Tensor images({kBatch, static_cast<std::size_t>(config.input_h),
                 static_cast<std::size_t>(config.input_w),
                 static_cast<std::size_t>(config.input_c)});
  std::vector<int> labels(kBatch);

  bool found = false;
  for (int attempt = 0; attempt < 32 && !found; ++attempt) {
    const std::uint64_t s = mix_seed(seed, attempt);
    params = init_params(config, s);
    rng::Engine engine(mix_seed(s, 1));
    params.p.for_each([&](const std::string& name, Tensor& t) {
      if (name.ends_with(".bias")) {
        for (double& v : t.data) v = rng::uniform(engine, -0.1, 0.1);
      }
    });
    for (double& v : images.data) v = rng::uniform_unit(engine);
    for (int& label : labels) label = static_cast<int>(rng::below(engine, kNumClasses));

    auto [logits, cache] = forward(params, images);
    (void)logits;
    found = well_conditioned(cache, kKinkMargin);
  }
  if (!found) throw NumericError("gradient_check: no well-conditioned point found");

  auto [logits, cache] = forward(params, images);
  (void)logits;
  const ParamSet analytic = backward(params, cache, labels);

  double worst = 0.0;
  params.p.for_each([&](const std::string& name, Tensor& t) {
    const Tensor* grad = nullptr;
    analytic.for_each([&](const std::string& gn, const Tensor& gt) {
      if (gn == name) grad = &gt;
    });

    double scale = 0.0;
    std::vector<double> numeric(t.numel());
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double saved = t.data[i];
      t.data[i] = saved + eps;
      const double up = batch_loss(params, images, labels);
      t.data[i] = saved - eps;
      const double down = batch_loss(params, images, labels);
      t.data[i] = saved;
      numeric[i] = (up - down) / (2.0 * eps);
      scale = std::max({scale, std::abs(numeric[i]), std::abs(grad->data[i])});
    }
    if (scale < 1e-8) return;  // gradient vanishes for this tensor; nothing to compare
    for (std::size_t i = 0; i < t.numel(); ++i) {
      worst = std::max(worst, std::abs(grad->data[i] - numeric[i]) / scale);
    }
  });
  return worst;
}

// ---- checkpoint serialization ----

namespace {

constexpr std::string_view kCheckpointMagic = "SGW1";
constexpr std::string_view kMetaName = "meta";

void put_entry_header(std::string& out, std::string_view name,
                      const std::vector<std::size_t>& dims) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.append(name);
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (std::size_t d : dims) put_u32(out, static_cast<std::uint32_t>(d));
}

}  // namespace

std::string serialize_params(const NetworkParams& params) {
  std::string out(kCheckpointMagic);
  std::uint32_t entries = 1;  // meta
  params.p.for_each([&entries](const std::string&, const Tensor&) { ++entries; });
  put_u32(out, entries);

  // meta: input dims as float values, seed halves stored by bit pattern
  put_entry_header(out, kMetaName, {5});
  put_f32(out, static_cast<float>(params.config.input_h));
  put_f32(out, static_cast<float>(params.config.input_w));
  put_f32(out, static_cast<float>(params.config.input_c));
  put_u32(out, static_cast<std::uint32_t>(params.rng_seed & 0xFFFFFFFFULL));
  put_u32(out, static_cast<std::uint32_t>(params.rng_seed >> 32));

  params.p.for_each([&out](const std::string& name, const Tensor& t) {
    put_entry_header(out, name, t.shape);
    for (double v : t.data) put_f32(out, static_cast<float>(v));
  });
  return out;
}

NetworkParams deserialize_params(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != kCheckpointMagic) {
    throw ValidationError("checkpoint: bad magic, expected 'SGW1'");
  }
  std::size_t pos = 4;
  const std::uint32_t entries = get_u32(bytes, pos);

  struct Entry {
    std::vector<std::size_t> dims;
    std::size_t value_offset = 0;
    std::size_t value_count = 0;
  };
  std::map<std::string, Entry, std::less<>> table;
  std::vector<std::string> order;

  for (std::uint32_t e = 0; e < entries; ++e) {
    const std::uint32_t name_len = get_u32(bytes, pos);
    if (pos + name_len > bytes.size()) throw ValidationError("checkpoint: truncated");
    std::string name(bytes.substr(pos, name_len));
    pos += name_len;
    Entry entry;
    const std::uint32_t rank = get_u32(bytes, pos);
    if (rank > 8) throw ValidationError("checkpoint: implausible tensor rank");
    entry.value_count = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const std::uint32_t d = get_u32(bytes, pos);
      if (d == 0) throw ValidationError("checkpoint: zero dimension");
      entry.dims.push_back(d);
      entry.value_count *= d;
    }
    entry.value_offset = pos;
    if (pos + 4 * entry.value_count > bytes.size()) {
      throw ValidationError("checkpoint: truncated values for '" + name + "'");
    }
    pos += 4 * entry.value_count;
    if (table.contains(name)) throw ValidationError("checkpoint: duplicate entry '" + name + "'");
    order.push_back(name);
    table.emplace(std::move(name), std::move(entry));
  }

  const auto meta_it = table.find(kMetaName);
  if (meta_it == table.end() || meta_it->second.value_count != 5) {
    throw ValidationError("checkpoint: missing or malformed 'meta' entry");
  }

  NetworkConfig config;
  {
    std::size_t mp = meta_it->second.value_offset;
    config.input_h = static_cast<int>(get_f32(bytes, mp));
    config.input_w = static_cast<int>(get_f32(bytes, mp));
    config.input_c = static_cast<int>(get_f32(bytes, mp));
  }

  // conv blocks from conv<k>.weight shapes
  config.conv_blocks.clear();
  for (int k = 1;; ++k) {
    const std::string wname = "conv" + std::to_string(k) + ".weight";
    const auto it = table.find(wname);
    if (it == table.end()) break;
    if (it->second.dims.size() != 4) {
      throw ValidationError("checkpoint: '" + wname + "' must have rank 4");
    }
    config.conv_blocks.push_back({static_cast<int>(it->second.dims[0])});
  }
  const auto feat = table.find("feature.weight");
  const auto out_w = table.find("output.weight");
  if (feat == table.end() || out_w == table.end()) {
    throw ValidationError("checkpoint: missing feature.weight or output.weight");
  }
  config.feature_width = static_cast<int>(feat->second.dims.at(0));
  config.num_classes = static_cast<int>(out_w->second.dims.at(0));
  config.validate();

  NetworkParams params;
  params.config = config;
  params.p = ParamSet::zeros(config);
  {
    std::size_t mp = meta_it->second.value_offset + 12;
    const std::uint64_t lo = get_u32(bytes, mp);
    const std::uint64_t hi = get_u32(bytes, mp);
    params.rng_seed = lo | (hi << 32);
  }

  params.p.for_each([&](const std::string& name, Tensor& t) {
    const auto it = table.find(name);
    if (it == table.end()) throw ValidationError("checkpoint: missing entry '" + name + "'");
    if (it->second.dims != t.shape) {
      throw ValidationError("checkpoint: shape mismatch for '" + name + "'");
    }
    std::size_t vp = it->second.value_offset;
    for (double& v : t.data) v = get_f32(bytes, vp);
  });
  return params;
}

void save_params(const std::filesystem::path& path, const NetworkParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write checkpoint: " + path.string());
  const std::string bytes = serialize_params(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("short write: " + path.string());
}

NetworkParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_params(bytes);
}

}  // namespace artstyle::nnet
