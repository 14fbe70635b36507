#include "artstyle/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "artstyle/csv.hpp"
#include "artstyle/errors.hpp"

namespace artstyle::eval {

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) {
    for (std::size_t c : row) n += c;
  }
  return n;
}

std::size_t ConfusionMatrix::diagonal() const {
  std::size_t n = 0;
  for (int i = 0; i < core::kNumStyles; ++i) n += counts[i][i];
  return n;
}

int predicted_class(const Prediction& prediction) {
  int best = 0;
  for (int j = 1; j < core::kNumStyles; ++j) {
    if (prediction.probabilities[j] > prediction.probabilities[best]) best = j;
  }
  return best;
}

std::pair<double, ConfusionMatrix> evaluate(const std::vector<Prediction>& predictions) {
  if (predictions.empty()) throw ValidationError("evaluate: no predictions");
  ConfusionMatrix matrix;
  std::size_t correct = 0;
  for (const auto& pred : predictions) {
    double total = 0.0;
    for (double p : pred.probabilities) total += p;
    if (std::abs(total - 1.0) > 1e-6) {
      throw ValidationError("evaluate: probabilities of '" + pred.painting_id +
                            "' sum to " + std::to_string(total));
    }
    const int t = static_cast<int>(pred.true_class);
    const int p = predicted_class(pred);
    matrix.counts[t][p] += 1;
    if (t == p) ++correct;
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(predictions.size());
  return {accuracy, matrix};
}

std::array<std::array<double, core::kNumStyles>, core::kNumStyles> confusion_rates(
    const ConfusionMatrix& matrix) {
  std::array<std::array<double, core::kNumStyles>, core::kNumStyles> rates{};
  for (int i = 0; i < core::kNumStyles; ++i) {
    std::size_t row_total = 0;
    for (std::size_t c : matrix.counts[i]) row_total += c;
    if (row_total == 0) continue;
    for (int j = 0; j < core::kNumStyles; ++j) {
      rates[i][j] = static_cast<double>(matrix.counts[i][j]) / static_cast<double>(row_total);
    }
  }
  return rates;
}

std::vector<Misclassification> top_misclassifications(const std::vector<Prediction>& predictions,
                                                      std::size_t k) {
  std::vector<Misclassification> all;
  for (const auto& pred : predictions) {
    const int p = predicted_class(pred);
    if (p == static_cast<int>(pred.true_class)) continue;
    all.push_back({pred.painting_id, pred.true_class, static_cast<core::StyleClass>(p),
                   pred.probabilities[p]});
  }
  std::sort(all.begin(), all.end(), [](const Misclassification& a, const Misclassification& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.painting_id < b.painting_id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

std::string confusion_to_csv(const ConfusionMatrix& matrix) {
  std::string out = "true\\predicted";
  for (int j = 0; j < core::kNumStyles; ++j) {
    out.push_back(',');
    out += core::style_name(static_cast<core::StyleClass>(j));
  }
  out.push_back('\n');
  for (int i = 0; i < core::kNumStyles; ++i) {
    out += core::style_name(static_cast<core::StyleClass>(i));
    for (int j = 0; j < core::kNumStyles; ++j) {
      out.push_back(',');
      out += std::to_string(matrix.counts[i][j]);
    }
    out.push_back('\n');
  }
  return out;
}

std::string misclassifications_to_csv(const std::vector<Misclassification>& entries) {
  std::string out = "painting_id,true,predicted,probability\n";
  for (const auto& e : entries) {
    char prob[32];
    std::snprintf(prob, sizeof(prob), "%.17g", e.probability);
    out += csv::escape(e.painting_id);
    out.push_back(',');
    out += core::style_name(e.true_class);
    out.push_back(',');
    out += core::style_name(e.predicted);
    out.push_back(',');
    out += prob;
    out.push_back('\n');
  }
  return out;
}

}  // namespace artstyle::eval
