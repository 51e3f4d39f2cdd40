#pragma once

// Logistic-regression classifier for "offloading beats local execution",
// trained by full-batch gradient descent on labels from the greedy oracle.

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vto/decision.hpp"
#include "vto/errors.hpp"
#include "vto/strategies.hpp"

namespace vto {

inline constexpr std::size_t kFeatureCount = 6;
using FeatureVector = std::array<double, kFeatureCount>;

inline FeatureVector extract_features(const Observation& obs) {
  FeatureVector f{};
  f[0] = std::log10(obs.task.data_size_bits);
  f[1] = obs.task.intensity_cycles_per_bit;
  f[2] = -1.0;
  f[3] = 0.0;
  if (!obs.candidates.empty()) {
    const auto& best = obs.candidates.front();
    f[2] = best.rate_bps > 0.0 ? std::log10(best.rate_bps) : -1.0;
    f[3] = best.queued_cycles / best.rsu.cpu_frequency;
  }
  f[4] = obs.vehicle.speed;
  f[5] = static_cast<double>(obs.candidates.size());
  return f;
}

struct LabeledRow {
  FeatureVector features{};
  int label = 0;
};

/// Label 1 iff the greedy oracle offloads.
inline std::vector<LabeledRow> label_dataset(std::span<const Observation> observations, const CostWeights& w) {
  std::vector<LabeledRow> rows;
  rows.reserve(observations.size());
  for (const auto& o : observations) {
    rows.push_back({extract_features(o), decide_greedy_oracle(o, w).is_offload() ? 1 : 0});
  }
  return rows;
}

struct LinearModel {
  FeatureVector weights{};
  double bias = 0.0;
  FeatureVector feature_means{};
  FeatureVector feature_stds{1, 1, 1, 1, 1, 1};

  bool operator==(const LinearModel&) const = default;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline FeatureVector standardize(const LinearModel& m, const FeatureVector& x) {
  FeatureVector z{};
  for (std::size_t i = 0; i < kFeatureCount; ++i) z[i] = (x[i] - m.feature_means[i]) / m.feature_stds[i];
  return z;
}

inline double logit(const LinearModel& m, const FeatureVector& x) {
  const FeatureVector z = standardize(m, x);
  double s = m.bias;
  for (std::size_t i = 0; i < kFeatureCount; ++i) s += m.weights[i] * z[i];
  return s;
}

inline double predict(const LinearModel& m, const FeatureVector& x) { return sigmoid(logit(m, x)); }

inline double predict(const LinearModel& m, const Observation& obs) { return predict(m, extract_features(obs)); }

struct TrainOptions {
  int epochs = 500;
  double learning_rate = 0.1;
};

struct FitResult {
  LinearModel model;
  std::vector<double> loss_history;  // [0] before training, then one entry per epoch
};

namespace detail {

// log(1 + exp(-y*z)) with y in {-1, +1}, stable for large |z|.
inline double log_loss(double z, int label) {
  const double m = label == 1 ? z : -z;
  return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

inline double mean_loss(const LinearModel& m, std::span<const FeatureVector> z, std::span<const int> y) {
  double total = 0.0;
  for (std::size_t n = 0; n < z.size(); ++n) {
    double s = m.bias;
    for (std::size_t i = 0; i < kFeatureCount; ++i) s += m.weights[i] * z[n][i];
    total += log_loss(s, y[n]);
  }
  return total / static_cast<double>(z.size());
}

}  // namespace detail

/// Full-batch gradient descent on mean cross-entropy from zero weights.
/// Throws DegenerateDataset unless both labels are present.
inline FitResult fit_logistic(std::span<const LabeledRow> data, const TrainOptions& opt) {
  if (data.empty()) throw DegenerateDataset("dataset is empty");
  std::size_t positives = 0;
  for (const auto& r : data) positives += r.label == 1 ? 1 : 0;
  if (positives == 0 || positives == data.size()) {
    throw DegenerateDataset("dataset has a single class (" + std::to_string(positives) + " of " +
                            std::to_string(data.size()) + " positive)");
  }

  const double n = static_cast<double>(data.size());
  LinearModel m;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    double mean = 0.0;
    for (const auto& r : data) mean += r.features[i];
    mean /= n;
    double var = 0.0;
    for (const auto& r : data) var += (r.features[i] - mean) * (r.features[i] - mean);
    const double sd = std::sqrt(var / n);
    m.feature_means[i] = mean;
    m.feature_stds[i] = sd > 0.0 ? sd : 1.0;
  }

  std::vector<FeatureVector> z;
  std::vector<int> y;
  z.reserve(data.size());
  y.reserve(data.size());
  for (const auto& r : data) {
    z.push_back(standardize(m, r.features));
    y.push_back(r.label);
  }

  FitResult out;
  out.loss_history.push_back(detail::mean_loss(m, z, y));
  for (int e = 0; e < opt.epochs; ++e) {
    FeatureVector grad{};
    double grad_bias = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      double s = m.bias;
      for (std::size_t i = 0; i < kFeatureCount; ++i) s += m.weights[i] * z[k][i];
      const double err = sigmoid(s) - y[k];
      for (std::size_t i = 0; i < kFeatureCount; ++i) grad[i] += err * z[k][i];
      grad_bias += err;
    }
    for (std::size_t i = 0; i < kFeatureCount; ++i) m.weights[i] -= opt.learning_rate * grad[i] / n;
    m.bias -= opt.learning_rate * grad_bias / n;
    out.loss_history.push_back(detail::mean_loss(m, z, y));
  }
  out.model = m;
  return out;
}

inline LinearModel train_model(std::span<const LabeledRow> data, const TrainOptions& opt) {
  return fit_logistic(data, opt).model;
}

inline double accuracy(const LinearModel& m, std::span<const LabeledRow> data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : data) hits += ((predict(m, r.features) >= 0.5 ? 1 : 0) == r.label) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

inline nlohmann::json to_json(const LinearModel& m) {
  return {{"weights", m.weights}, {"bias", m.bias}, {"feature_means", m.feature_means},
          {"feature_stds", m.feature_stds}};
}

inline LinearModel model_from_json(const nlohmann::json& j) {
  LinearModel m;
  try {
    m.weights = j.at("weights").get<FeatureVector>();
    m.bias = j.at("bias").get<double>();
    m.feature_means = j.at("feature_means").get<FeatureVector>();
    m.feature_stds = j.at("feature_stds").get<FeatureVector>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("predictor: ") + e.what());
  }
  for (double s : m.feature_stds) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ParseError("predictor: feature_stds must be finite and > 0");
  }
  return m;
}

}  // namespace vto
