#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "artstyle/errors.hpp"
#include "artstyle/tensor.hpp"

namespace artstyle::nnet {

// Miniature convolutional classifier: conv blocks (3x3, ReLU, 2x2 max-pool),
// a 512-wide fully connected feature head with ReLU, and a nine-way softmax
// output. Forward and backward passes are written out by hand so gradients
// can be verified against finite differences.

struct ConvBlockSpec {
  int filters = 8;
  int kernel = 3;  // fixed
  int pool = 2;    // fixed
};

struct NetworkConfig {
  int input_h = 32;
  int input_w = 32;
  int input_c = 3;
  std::vector<ConvBlockSpec> conv_blocks = {{8}, {16}, {32}};
  int feature_width = 512;  // fixed
  int num_classes = 9;      // fixed

  void validate() const;
  // Spatial size after block `k` (0 = after first block).
  std::pair<int, int> block_output_size(int k) const;
  int flatten_size() const;
  std::size_t parameter_count() const;
};

inline constexpr int kFeatureWidth = 512;
inline constexpr int kNumClasses = 9;

// Weight and bias tensors in network order. Shared between parameters,
// gradients and optimizer state.
struct ParamSet {
  std::vector<Tensor> conv_w;  // [F, C, 3, 3]
  std::vector<Tensor> conv_b;  // [F]
  Tensor feature_w;            // [feature_width, flatten]
  Tensor feature_b;            // [feature_width]
  Tensor output_w;             // [num_classes, feature_width]
  Tensor output_b;             // [num_classes]

  static ParamSet zeros(const NetworkConfig& config);

  // Visits tensors in the canonical (serialization) order.
  template <typename Fn>
  void for_each(Fn&& fn) {
    for (std::size_t k = 0; k < conv_w.size(); ++k) {
      const std::string base = "conv" + std::to_string(k + 1);
      fn(base + ".weight", conv_w[k]);
      fn(base + ".bias", conv_b[k]);
    }
    fn("feature.weight", feature_w);
    fn("feature.bias", feature_b);
    fn("output.weight", output_w);
    fn("output.bias", output_b);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    const_cast<ParamSet*>(this)->for_each([&](const std::string& name, Tensor& t) {
      fn(name, static_cast<const Tensor&>(t));
    });
  }
};

struct NetworkParams {
  NetworkConfig config;
  std::uint64_t rng_seed = 0;
  ParamSet p;
};

struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  int epochs = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Dataset {
  Tensor images;            // [N, H, W, 3], values in [0, 1]
  std::vector<int> labels;  // 0..8
};

struct EpochStats {
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // index into epochs; -1 when no epochs ran
};

// Activations retained by forward() for backward() and Grad-CAM. Planar
// (channel, row, column) layout per sample.
struct ForwardCache {
  int batch = 0;
  Tensor input_planar;            // [N, C, H, W]
  std::vector<Tensor> conv_z;     // per block, [N, F, H, W] pre-ReLU
  std::vector<Tensor> conv_a;     // per block, post-ReLU
  std::vector<Tensor> pool_out;   // per block, [N, F, H/2, W/2]
  std::vector<std::vector<std::uint32_t>> pool_idx;  // argmax into the source plane
  Tensor feature_z;               // [N, feature_width]
  Tensor feature_a;               // post-ReLU
  Tensor logits;                  // [N, num_classes]
};

// Deterministic initialization: uniform weights scaled by fan-in
// (bound sqrt(6/fan_in)), zero biases.
NetworkParams init_params(const NetworkConfig& config, std::uint64_t seed);

// images: [N, H, W, 3] (or [H, W, 3] for a single sample).
std::pair<Tensor, ForwardCache> forward(const NetworkParams& params, const Tensor& images);

// Row-wise softmax with max subtraction.
Tensor softmax(const Tensor& logits);

// Mean negative log-likelihood; probabilities clamped at 1e-12 before log.
double cross_entropy(const Tensor& probs, const std::vector<int>& labels);

// Exact gradients of mean cross-entropy w.r.t. every parameter.
ParamSet backward(const NetworkParams& params, const ForwardCache& cache,
                  const std::vector<int>& labels);

// SGD with momentum; returns the parameters of the best validation epoch
// together with the full per-epoch history.
std::pair<NetworkParams, TrainHistory> train(const Dataset& train_set, const Dataset& val_set,
                                             const TrainConfig& config,
                                             const NetworkConfig& net_config);

// Post-ReLU activations of the 512-wide feature layer for one [H, W, 3] image.
std::vector<double> extract_features(const NetworkParams& params, const Tensor& image);

struct GradCamMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // nonnegative, row-major
  std::string layer_id;
  int class_index = 0;
  std::optional<Tensor> upsampled;  // [input_h, input_w] when requested
};

// Gradient-weighted class activation map at a convolution layer
// ("conv1".."convK"). Channel weights are the spatial means of the class
// logit's gradient w.r.t. the layer's post-ReLU activations.
GradCamMap grad_cam(const NetworkParams& params, const Tensor& image, int class_index,
                    const std::string& layer_id, bool upsample = false);

// The Grad-CAM reduction: per-channel weights from spatially pooled
// gradients, then ReLU of the weighted activation sum.
std::vector<double> gradcam_combine(std::span<const double> activations,
                                    std::span<const double> gradients, int channels, int height,
                                    int width);

// Gradient ascent on the input to maximize the chosen filter's mean
// response. The step size is halved whenever a step would lower the
// objective, so the objective never decreases. Returns an [H, W, 3] image
// normalized to [0, 1]; `objective_history` (when given) receives the
// accepted objective value after each iteration and `raw_image` the final
// un-normalized input.
Tensor filter_visualization(const NetworkParams& params, const std::string& layer_id,
                            int filter_index, int iterations, double step_size,
                            std::uint64_t noise_seed = 0,
                            std::vector<double>* objective_history = nullptr,
                            Tensor* raw_image = nullptr);

// Compares backward() against central finite differences at a random,
// well-conditioned point. Returns the largest per-tensor error, measured
// relative to that tensor's gradient magnitude.
double gradient_check(const NetworkConfig& config, std::uint64_t seed, double eps);

// Checkpoint bytes: magic "SGW1", little-endian u32 entry count, then per
// entry u32 name length, name, u32 rank, u32 dims[rank], float32 values
// row-major. Round-trips bit-exactly.
std::string serialize_params(const NetworkParams& params);
NetworkParams deserialize_params(std::string_view bytes);
void save_params(const std::filesystem::path& path, const NetworkParams& params);
NetworkParams load_params(const std::filesystem::path& path);

}  // namespace artstyle::nnet
