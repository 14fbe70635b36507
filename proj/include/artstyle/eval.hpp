#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "artstyle/core.hpp"

namespace artstyle::eval {

struct Prediction {
  std::string painting_id;
  core::StyleClass true_class = core::StyleClass::EarlyRenaissance;
  std::array<double, core::kNumStyles> probabilities{};
};

// rows = true class, columns = predicted class
struct ConfusionMatrix {
  std::array<std::array<std::size_t, core::kNumStyles>, core::kNumStyles> counts{};

  std::size_t total() const;
  std::size_t diagonal() const;
};

// Argmax with ties broken toward the lower class index.
int predicted_class(const Prediction& prediction);

// Probabilities of each prediction must sum to 1 within 1e-6.
std::pair<double, ConfusionMatrix> evaluate(const std::vector<Prediction>& predictions);

// Row-normalized rates; all-zero rows stay all-zero.
std::array<std::array<double, core::kNumStyles>, core::kNumStyles> confusion_rates(
    const ConfusionMatrix& matrix);

struct Misclassification {
  std::string painting_id;
  core::StyleClass true_class;
  core::StyleClass predicted;
  double probability;  // of the predicted class
};

// The k misclassified predictions with the highest predicted-class
// probability, descending; ties broken by painting_id.
std::vector<Misclassification> top_misclassifications(const std::vector<Prediction>& predictions,
                                                      std::size_t k);

std::string confusion_to_csv(const ConfusionMatrix& matrix);
std::string misclassifications_to_csv(const std::vector<Misclassification>& entries);

}  // namespace artstyle::eval
