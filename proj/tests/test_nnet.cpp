#include <doctest.h>

#include <cmath>
#include <numeric>

#include "artstyle/nnet.hpp"
#include "artstyle/rng.hpp"

using namespace artstyle;

namespace {

nnet::NetworkConfig tiny_config(int input = 6, std::vector<nnet::ConvBlockSpec> blocks = {{2}}) {
  nnet::NetworkConfig config;
  config.input_h = config.input_w = input;
  config.input_c = 3;
  config.conv_blocks = std::move(blocks);
  return config;
}

Tensor random_images(rng::Engine& g, int n, const nnet::NetworkConfig& config) {
  Tensor images({static_cast<std::size_t>(n), static_cast<std::size_t>(config.input_h),
                 static_cast<std::size_t>(config.input_w),
                 static_cast<std::size_t>(config.input_c)});
  for (double& v : images.data) v = rng::uniform_unit(g);
  return images;
}

// 3-class color-dominant data: each class's dominant channel mean sits 0.3
// above the others
nnet::Dataset color_dataset(rng::Engine& g, int n, const nnet::NetworkConfig& config) {
  nnet::Dataset data;
  data.images = Tensor({static_cast<std::size_t>(n), static_cast<std::size_t>(config.input_h),
                        static_cast<std::size_t>(config.input_w), 3});
  for (int i = 0; i < n; ++i) {
    const int cls = i % 3;
    data.labels.push_back(cls);
    double* px = data.images.data.data() +
                 static_cast<std::size_t>(i) * config.input_h * config.input_w * 3;
    for (int j = 0; j < config.input_h * config.input_w; ++j) {
      for (int c = 0; c < 3; ++c) {
        const double mean = (c == cls) ? 0.65 : 0.35;
        px[j * 3 + c] = std::clamp(mean + 0.12 * rng::normal(g), 0.0, 1.0);
      }
    }
  }
  return data;
}

}  // namespace

TEST_CASE("init_params is deterministic with zero biases and fan-in scaling") {
  const auto config = tiny_config();
  const auto a = nnet::init_params(config, 99);
  const auto b = nnet::init_params(config, 99);
  CHECK(nnet::serialize_params(a) == nnet::serialize_params(b));
  const auto c = nnet::init_params(config, 100);
  CHECK(nnet::serialize_params(a) != nnet::serialize_params(c));

  for (double v : a.p.conv_b[0].data) CHECK(v == 0.0);
  for (double v : a.p.feature_b.data) CHECK(v == 0.0);
  for (double v : a.p.output_b.data) CHECK(v == 0.0);

  // weights stay inside the fan-in bound
  const double bound = std::sqrt(6.0 / config.flatten_size());
  for (double v : a.p.feature_w.data) {
    CHECK(std::abs(v) <= bound);
  }
}

TEST_CASE("weight sample mean vanishes within 3 standard errors") {
  const auto params = nnet::init_params(nnet::NetworkConfig{}, 7);  // default 32x32 net
  const auto& w = params.p.feature_w;  // 512 x 512 draws from uniform(-b, b)
  REQUIRE(w.numel() >= 10000);
  const double mean = std::accumulate(w.data.begin(), w.data.end(), 0.0) /
                      static_cast<double>(w.numel());
  const double bound = std::sqrt(6.0 / 512.0);
  const double stderr_mean = bound / std::sqrt(3.0) / std::sqrt(static_cast<double>(w.numel()));
  CHECK(std::abs(mean) < 3.0 * stderr_mean);
}

TEST_CASE("init rejects invalid configs") {
  auto config = tiny_config();
  config.feature_width = 256;
  CHECK_THROWS_AS(nnet::init_params(config, 1), ValidationError);
  config = tiny_config();
  config.num_classes = 10;
  CHECK_THROWS_AS(nnet::init_params(config, 1), ValidationError);
  config = tiny_config();
  config.conv_blocks[0].filters = 0;
  CHECK_THROWS_AS(nnet::init_params(config, 1), ValidationError);
  config = tiny_config(2, {{2}, {2}});  // spatial size vanishes
  CHECK_THROWS_AS(nnet::init_params(config, 1), ValidationError);
}

TEST_CASE("forward contract") {
  rng::Engine g(71);
  const auto config = tiny_config();
  auto params = nnet::init_params(config, 5);

  SUBCASE("zero image and zero output layer give zero logits") {
    params.p.output_w.data.assign(params.p.output_w.numel(), 0.0);
    params.p.output_b.data.assign(params.p.output_b.numel(), 0.0);
    Tensor image({6, 6, 3});
    auto [logits, cache] = nnet::forward(params, image);
    for (double v : logits.data) CHECK(v == 0.0);
  }

  SUBCASE("batch shape and purity") {
    const Tensor images = random_images(g, 4, config);
    auto [logits1, c1] = nnet::forward(params, images);
    auto [logits2, c2] = nnet::forward(params, images);
    CHECK(logits1.shape == std::vector<std::size_t>{4, 9});
    CHECK(logits1.data == logits2.data);
    CHECK(logits1.all_finite());
  }

  SUBCASE("shape mismatch is rejected") {
    Tensor wrong({5, 5, 3});
    CHECK_THROWS_AS(nnet::forward(params, wrong), ValidationError);
  }
}

TEST_CASE("softmax") {
  SUBCASE("uniform logits give 1/9") {
    Tensor logits({1, 9});
    const Tensor probs = nnet::softmax(logits);
    for (double p : probs.data) CHECK(p == 1.0 / 9.0);
  }
  SUBCASE("extreme logits stay stable") {
    Tensor logits({1, 9});
    logits.data[0] = 1000.0;
    const Tensor probs = nnet::softmax(logits);
    CHECK(probs.data[0] == doctest::Approx(1.0));
    CHECK(probs.all_finite());

    Tensor wide({1, 9});
    for (int j = 0; j < 9; ++j) wide.data[j] = (j % 2 ? 1.0 : -1.0) * 1e3;
    const Tensor wide_probs = nnet::softmax(wide);
    double total = 0.0;
    for (double p : wide_probs.data) total += p;
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
  SUBCASE("matches the direct exp/sum oracle") {
    rng::Engine g(72);
    Tensor logits({8, 9});
    for (double& v : logits.data) v = rng::uniform(g, -5.0, 5.0);
    const Tensor probs = nnet::softmax(logits);
    for (int i = 0; i < 8; ++i) {
      double total = 0.0;
      for (int j = 0; j < 9; ++j) total += std::exp(logits.at(i, j));
      double row_sum = 0.0;
      for (int j = 0; j < 9; ++j) {
        CHECK(std::abs(probs.at(i, j) - std::exp(logits.at(i, j)) / total) < 1e-12);
        row_sum += probs.at(i, j);
      }
      CHECK(std::abs(row_sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("cross entropy") {
  SUBCASE("perfect prediction scores zero") {
    Tensor probs({1, 9});
    probs.data[3] = 1.0;
    CHECK(nnet::cross_entropy(probs, {3}) == 0.0);
  }
  SUBCASE("uniform prediction scores ln 9") {
    Tensor probs({2, 9});
    probs.data.assign(18, 1.0 / 9.0);
    CHECK(std::abs(nnet::cross_entropy(probs, {0, 7}) - std::log(9.0)) < 1e-12);
  }
  SUBCASE("matches a per-sample oracle") {
    rng::Engine g(73);
    Tensor probs = nnet::softmax([&] {
      Tensor logits({6, 9});
      for (double& v : logits.data) v = rng::uniform(g, -3.0, 3.0);
      return logits;
    }());
    std::vector<int> labels;
    for (int i = 0; i < 6; ++i) labels.push_back(static_cast<int>(rng::below(g, 9)));
    double oracle = 0.0;
    for (int i = 0; i < 6; ++i) oracle -= std::log(probs.at(i, labels[i]));
    oracle /= 6.0;
    CHECK(std::abs(nnet::cross_entropy(probs, labels) - oracle) < 1e-12);
  }
  SUBCASE("labels outside 0..8 are rejected") {
    Tensor probs({1, 9});
    probs.data[0] = 1.0;
    CHECK_THROWS_AS(nnet::cross_entropy(probs, {9}), ValidationError);
    CHECK_THROWS_AS(nnet::cross_entropy(probs, {-1}), ValidationError);
  }
}

TEST_CASE("analytic gradients match finite differences") {
  SUBCASE("conv network") {
    CHECK(nnet::gradient_check(tiny_config(4, {{2}}), 1, 1e-5) < 1e-4);
    CHECK(nnet::gradient_check(tiny_config(6, {{2}, {3}}), 2, 1e-5) < 1e-4);
    CHECK(nnet::gradient_check(tiny_config(5, {{3}}), 3, 1e-5) < 1e-4);
  }
  SUBCASE("linear-only network is tighter") {
    CHECK(nnet::gradient_check(tiny_config(2, {}), 4, 1e-5) < 1e-7);
  }
  SUBCASE("eps must be positive") {
    CHECK_THROWS_AS(nnet::gradient_check(tiny_config(), 1, 0.0), ValidationError);
  }
  SUBCASE("oversized configs are rejected") {
    CHECK_THROWS_AS(nnet::gradient_check(nnet::NetworkConfig{}, 1, 1e-5), ValidationError);
  }
}

TEST_CASE("gradient at a perfectly separated fit is zero") {
  // linear-only net on one-hot pixel inputs: feature j copies pixel j with a
  // large gain, the output layer reads it back, so the margin is huge
  auto config = tiny_config(1, {});
  config.input_c = 3;
  auto params = nnet::init_params(config, 1);
  params.p.feature_w.data.assign(params.p.feature_w.numel(), 0.0);
  params.p.output_w.data.assign(params.p.output_w.numel(), 0.0);
  for (int j = 0; j < 3; ++j) {
    params.p.feature_w.at(j, j) = 20.0;
    params.p.output_w.at(j, j) = 20.0;
  }

  Tensor images({3, 1, 1, 3});
  for (int i = 0; i < 3; ++i) images.data[i * 3 + i] = 1.0;
  auto [logits, cache] = nnet::forward(params, images);
  const auto grads = nnet::backward(params, cache, {0, 1, 2});

  double norm_sq = 0.0;
  grads.for_each([&norm_sq](const std::string&, const Tensor& t) {
    for (double v : t.data) norm_sq += v * v;
  });
  CHECK(std::sqrt(norm_sq) < 1e-6);
}

TEST_CASE("duplicating the batch leaves the mean gradient unchanged") {
  rng::Engine g(74);
  const auto config = tiny_config(4, {{2}});
  const auto params = nnet::init_params(config, 8);
  const Tensor half = random_images(g, 3, config);
  std::vector<int> labels{0, 4, 8};

  Tensor full({6, 4, 4, 3});
  std::copy(half.data.begin(), half.data.end(), full.data.begin());
  std::copy(half.data.begin(), half.data.end(), full.data.begin() + half.data.size());
  std::vector<int> labels2{0, 4, 8, 0, 4, 8};

  auto [l1, c1] = nnet::forward(params, half);
  auto [l2, c2] = nnet::forward(params, full);
  const auto g1 = nnet::backward(params, c1, labels);
  const auto g2 = nnet::backward(params, c2, labels2);

  double worst = 0.0;
  g1.for_each([&](const std::string& name, const Tensor& t) {
    g2.for_each([&](const std::string& name2, const Tensor& t2) {
      if (name != name2) return;
      for (std::size_t i = 0; i < t.numel(); ++i) {
        worst = std::max(worst, std::abs(t.data[i] - t2.data[i]));
      }
    });
  });
  CHECK(worst < 1e-12);
}

TEST_CASE("backward validates its cache") {
  const auto config = tiny_config();
  const auto params = nnet::init_params(config, 3);
  rng::Engine g(75);
  auto [logits, cache] = nnet::forward(params, random_images(g, 2, config));
  CHECK_THROWS_AS(nnet::backward(params, cache, {0}), ValidationError);  // label count mismatch
}

TEST_CASE("training learns the color rule and is reproducible") {
  rng::Engine g(76);
  const auto config = tiny_config(8, {{4}});
  const auto train_data = color_dataset(g, 90, config);
  const auto val_data = color_dataset(g, 30, config);

  nnet::TrainConfig tc;
  tc.batch_size = 16;
  tc.learning_rate = 0.05;
  tc.momentum = 0.9;
  tc.epochs = 6;
  tc.seed = 5;

  auto [params, history] = nnet::train(train_data, val_data, tc, config);
  REQUIRE(history.epochs.size() == 6);
  CHECK(history.best_epoch >= 0);
  double best_val = 0.0;
  for (const auto& e : history.epochs) best_val = std::max(best_val, e.val_accuracy);
  CHECK(best_val >= 0.9);

  auto [params2, history2] = nnet::train(train_data, val_data, tc, config);
  CHECK(nnet::serialize_params(params) == nnet::serialize_params(params2));
  for (std::size_t i = 0; i < history.epochs.size(); ++i) {
    CHECK(history.epochs[i].val_accuracy == history2.epochs[i].val_accuracy);
    CHECK(history.epochs[i].train_loss == history2.epochs[i].train_loss);
  }
}

TEST_CASE("zero epochs returns the initial parameters and no history") {
  rng::Engine g(77);
  const auto config = tiny_config(4, {{2}});
  const auto data = color_dataset(g, 12, config);
  nnet::TrainConfig tc;
  tc.epochs = 0;
  tc.seed = 123;
  auto [params, history] = nnet::train(data, data, tc, config);
  CHECK(history.epochs.empty());
  CHECK(history.best_epoch == -1);
  CHECK(nnet::serialize_params(params) == nnet::serialize_params(nnet::init_params(config, 123)));
}

TEST_CASE("train validates inputs") {
  const auto config = tiny_config(4, {{2}});
  nnet::TrainConfig tc;
  CHECK_THROWS_AS(nnet::train(nnet::Dataset{}, nnet::Dataset{}, tc, config), ValidationError);

  tc.momentum = 1.0;
  rng::Engine g(78);
  const auto data = color_dataset(g, 6, config);
  CHECK_THROWS_AS(nnet::train(data, data, tc, config), ValidationError);
}

TEST_CASE("extract_features returns the 512-wide relu head") {
  rng::Engine g(79);
  const auto config = tiny_config();
  const auto params = nnet::init_params(config, 11);
  const Tensor image = random_images(g, 1, config);
  Tensor single({6, 6, 3});
  single.data = image.data;

  const auto f1 = nnet::extract_features(params, single);
  const auto f2 = nnet::extract_features(params, single);
  CHECK(f1.size() == 512);
  CHECK(f1 == f2);
  for (double v : f1) CHECK(v >= 0.0);
}

TEST_CASE("gradcam_combine matches hand-computed toys") {
  SUBCASE("single channel, all-ones activation, positive gradient") {
    const std::vector<double> act(4, 1.0);
    const std::vector<double> grad{0.2, 0.4, 0.6, 0.8};  // mean 0.5
    const auto map = nnet::gradcam_combine(act, grad, 1, 2, 2);
    for (double v : map) CHECK(v == doctest::Approx(0.5));
  }
  SUBCASE("all-negative pooled gradients relu to zero") {
    const std::vector<double> act{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> grad(4, -0.25);
    const auto map = nnet::gradcam_combine(act, grad, 1, 2, 2);
    for (double v : map) CHECK(v == 0.0);
  }
  SUBCASE("two-channel 2x2 weighted sum") {
    // channel weights: mean(grad0) = 0.25, mean(grad1) = -0.5
    const std::vector<double> act{1.0, 0.0, 2.0, 1.0, /*ch1*/ 1.0, 1.0, 0.0, 2.0};
    const std::vector<double> grad{1.0, 0.0, 0.0, 0.0, /*ch1*/ -0.5, -0.5, -0.5, -0.5};
    const auto map = nnet::gradcam_combine(act, grad, 2, 2, 2);
    // hand oracle: relu(0.25*act0 - 0.5*act1)
    CHECK(map[0] == doctest::Approx(0.0));   // 0.25 - 0.5 < 0
    CHECK(map[1] == doctest::Approx(0.0));   // 0 - 0.5 < 0
    CHECK(map[2] == doctest::Approx(0.5));   // 0.5 - 0
    CHECK(map[3] == doctest::Approx(0.0));   // 0.25 - 1.0 < 0
  }
}

TEST_CASE("grad_cam end to end") {
  rng::Engine g(80);
  const auto config = tiny_config(8, {{3}, {4}});
  const auto params = nnet::init_params(config, 21);
  Tensor image({8, 8, 3});
  for (double& v : image.data) v = rng::uniform_unit(g);

  const auto map = nnet::grad_cam(params, image, 2, "conv2", true);
  CHECK(map.height == 4);
  CHECK(map.width == 4);
  CHECK(map.values.size() == 16);
  for (double v : map.values) CHECK(v >= 0.0);
  REQUIRE(map.upsampled.has_value());
  CHECK(map.upsampled->shape == std::vector<std::size_t>{8, 8});

  const auto first = nnet::grad_cam(params, image, 2, "conv1");
  CHECK(first.height == 8);
  CHECK_FALSE(first.upsampled.has_value());

  CHECK_THROWS_AS(nnet::grad_cam(params, image, 2, "conv7"), ValidationError);
  CHECK_THROWS_AS(nnet::grad_cam(params, image, 2, "pool1"), ValidationError);
  CHECK_THROWS_AS(nnet::grad_cam(params, image, 9, "conv1"), ValidationError);
}

TEST_CASE("filter visualization climbs its objective") {
  const auto config = tiny_config(8, {{3}});
  const auto params = nnet::init_params(config, 31);

  SUBCASE("zero iterations returns the normalized noise") {
    const Tensor noise = nnet::filter_visualization(params, "conv1", 1, 0, 0.5, 9);
    CHECK(noise.shape == std::vector<std::size_t>{8, 8, 3});
    for (double v : noise.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    // deterministic across calls
    const Tensor again = nnet::filter_visualization(params, "conv1", 1, 0, 0.5, 9);
    CHECK(noise.data == again.data);
  }

  SUBCASE("objective is non-decreasing and verifiable via forward") {
    std::vector<double> history;
    Tensor raw;
    const Tensor img =
        nnet::filter_visualization(params, "conv1", 0, 200, 0.5, 9, &history, &raw);
    REQUIRE(history.size() == 200);
    for (std::size_t i = 1; i < history.size(); ++i) {
      CHECK(history[i] >= history[i - 1]);
    }
    CHECK(history.back() >= history.front());

    // recompute the final objective independently through the public forward
    auto [logits, cache] = nnet::forward(params, raw);
    const Tensor& z = cache.conv_z[0];  // [1, 3, 8, 8]
    double mean = 0.0;
    for (int i = 0; i < 64; ++i) mean += z.data[i];  // filter 0 plane
    mean /= 64.0;
    CHECK(mean == doctest::Approx(history.back()).epsilon(1e-9));

    for (double v : img.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }

  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(nnet::filter_visualization(params, "conv1", 3, 10, 0.5), ValidationError);
    CHECK_THROWS_AS(nnet::filter_visualization(params, "conv2", 0, 10, 0.5), ValidationError);
    CHECK_THROWS_AS(nnet::filter_visualization(params, "conv1", 0, 10, 0.0), ValidationError);
  }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const auto config = tiny_config(6, {{2}, {2}});
  auto params = nnet::init_params(config, 0xDEADBEEFCAFEF00DULL);

  const std::string bytes = nnet::serialize_params(params);
  CHECK(bytes.substr(0, 4) == "SGW1");
  const auto loaded = nnet::deserialize_params(bytes);
  CHECK(nnet::serialize_params(loaded) == bytes);
  CHECK(loaded.rng_seed == 0xDEADBEEFCAFEF00DULL);
  CHECK(loaded.config.input_h == 6);
  CHECK(loaded.config.conv_blocks.size() == 2);

  SUBCASE("corrupt input is rejected") {
    CHECK_THROWS_AS(nnet::deserialize_params("XXXX"), ValidationError);
    CHECK_THROWS_AS(nnet::deserialize_params(bytes.substr(0, bytes.size() / 2)), ValidationError);
    std::string wrong_magic = bytes;
    wrong_magic[0] = 'Z';
    CHECK_THROWS_AS(nnet::deserialize_params(wrong_magic), ValidationError);
  }
}
