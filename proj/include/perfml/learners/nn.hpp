#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "perfml/encoder.hpp"
#include "perfml/error.hpp"
#include "perfml/random.hpp"

namespace perfml {

/// Layout of a one-hidden-layer network's flat weight vector:
/// hidden x inputs input weights (row per hidden unit), hidden biases,
/// hidden output weights, one output bias.
struct NnShape {
  std::size_t inputs = 0;
  std::size_t hidden = 0;

  std::size_t size() const { return hidden * inputs + 2 * hidden + 1; }
  std::size_t bias1() const { return hidden * inputs; }
  std::size_t out_weights() const { return hidden * inputs + hidden; }
  std::size_t out_bias() const { return hidden * inputs + 2 * hidden; }
};

namespace nn {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double forward(const NnShape& shape, std::span<const double> w, std::span<const double> x,
                      std::vector<double>* activations = nullptr) {
  double out = w[shape.out_bias()];
  if (activations) activations->resize(shape.hidden);
  for (std::size_t h = 0; h < shape.hidden; ++h) {
    double z = w[shape.bias1() + h];
    const double* row = w.data() + h * shape.inputs;
    for (std::size_t j = 0; j < shape.inputs; ++j) z += row[j] * x[j];
    const double a = sigmoid(z);
    if (activations) (*activations)[h] = a;
    out += w[shape.out_weights() + h] * a;
  }
  return out;
}

/// Training objective: mean squared error over `targets` plus decay * |w|^2.
inline double objective(const NnShape& shape, std::span<const double> w, std::span<const EncodedInstance> data,
                        std::span<const double> targets, double decay) {
  double mse = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double e = forward(shape, w, data[i].features) - targets[i];
    mse += e * e;
  }
  mse /= static_cast<double>(data.size());
  double norm = 0.0;
  for (double v : w) norm += v * v;
  return mse + decay * norm;
}

/// Analytic gradient of `objective` by backpropagation.
inline std::vector<double> gradient(const NnShape& shape, std::span<const double> w,
                                    std::span<const EncodedInstance> data, std::span<const double> targets,
                                    double decay) {
  std::vector<double> g(w.size(), 0.0);
  std::vector<double> act;
  const double scale = 2.0 / static_cast<double>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& x = data[i].features;
    const double e = (forward(shape, w, x, &act) - targets[i]) * scale;
    g[shape.out_bias()] += e;
    for (std::size_t h = 0; h < shape.hidden; ++h) {
      g[shape.out_weights() + h] += e * act[h];
      const double dz = e * w[shape.out_weights() + h] * act[h] * (1.0 - act[h]);
      g[shape.bias1() + h] += dz;
      double* row = g.data() + h * shape.inputs;
      for (std::size_t j = 0; j < shape.inputs; ++j) row[j] += dz * x[j];
    }
  }
  for (std::size_t k = 0; k < w.size(); ++k) g[k] += 2.0 * decay * w[k];
  return g;
}

} // namespace nn

struct NnOptions {
  std::size_t hidden = 5;
  std::size_t max_iter = 1000;
  double decay = 5e-4;
  std::uint64_t seed = 1;
};

/// One-hidden-layer feed-forward network (sigmoid hidden units, linear
/// output) trained by batch gradient descent on standardized targets.
class NeuralNet {
public:
  NeuralNet() = default;

  static NeuralNet fit(std::span<const EncodedInstance> train, const NnOptions& opt) {
    if (train.size() < 2) throw Error("nn: at least 2 training instances required");
    if (opt.hidden < 1) throw Error("nn: hidden units must be >= 1");
    if (opt.max_iter < 1) throw Error("nn: max_iter must be >= 1");
    if (!(opt.decay >= 0.0)) throw Error("nn: decay must be non-negative");

    NeuralNet net;
    net.shape_ = {train.front().features.size(), opt.hidden};
    for (const auto& r : train)
      if (r.features.size() != net.shape_.inputs) throw Error("nn: inconsistent feature widths");

    double mean = 0.0;
    for (const auto& r : train) mean += r.target;
    mean /= static_cast<double>(train.size());
    double var = 0.0;
    for (const auto& r : train) var += (r.target - mean) * (r.target - mean);
    const double sd = std::sqrt(var / static_cast<double>(train.size()));
    net.target_mean_ = mean;
    net.target_scale_ = sd > 0.0 ? sd : 1.0;
    std::vector<double> targets;
    targets.reserve(train.size());
    for (const auto& r : train) targets.push_back((r.target - mean) / net.target_scale_);

    Rng rng(opt.seed);
    net.weights_.resize(net.shape_.size());
    for (auto& w : net.weights_) w = rng.uniform(-0.5, 0.5);

    double lr = 0.01;
    double current = nn::objective(net.shape_, net.weights_, train, targets, opt.decay);
    if (!std::isfinite(current)) throw Error("nn: non-finite loss at iteration 0");
    net.history_.push_back(current);
    std::size_t stalled = 0;
    std::vector<double> candidate(net.weights_.size());
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
      const auto g = nn::gradient(net.shape_, net.weights_, train, targets, opt.decay);
      for (std::size_t k = 0; k < candidate.size(); ++k) candidate[k] = net.weights_[k] - lr * g[k];
      const double next = nn::objective(net.shape_, candidate, train, targets, opt.decay);
      if (std::isfinite(next) && next <= current) {
        const double improvement = current - next;
        net.weights_.swap(candidate);
        current = next;
        net.history_.push_back(current);
        lr = std::min(lr * 1.05, 10.0);
        stalled = improvement < 1e-8 ? stalled + 1 : 0;
      } else {
        lr /= 2.0;
        ++stalled;
        if (lr < 1e-6) break;
      }
      net.iterations_ = it;
      if (stalled >= 10) break;
    }
    if (!std::isfinite(current)) throw Error("nn: non-finite loss at iteration " + std::to_string(net.iterations_));
    return net;
  }

  double predict(std::span<const double> x) const {
    return target_mean_ + target_scale_ * nn::forward(shape_, weights_, x);
  }

  const NnShape& shape() const { return shape_; }
  std::size_t width() const { return shape_.inputs; }
  const std::vector<double>& weights() const { return weights_; }
  /// Objective value after initialization and after every accepted step.
  const std::vector<double>& history() const { return history_; }
  std::size_t iterations() const { return iterations_; }

  nlohmann::json to_json() const {
    return {{"inputs", shape_.inputs}, {"hidden", shape_.hidden}, {"target_mean", target_mean_},
            {"target_scale", target_scale_}, {"iterations", iterations_}, {"weights", weights_}};
  }

  static NeuralNet from_json(const nlohmann::json& j) {
    NeuralNet net;
    net.shape_ = {j.at("inputs").get<std::size_t>(), j.at("hidden").get<std::size_t>()};
    net.target_mean_ = j.at("target_mean").get<double>();
    net.target_scale_ = j.at("target_scale").get<double>();
    net.iterations_ = j.at("iterations").get<std::size_t>();
    net.weights_ = j.at("weights").get<std::vector<double>>();
    if (net.weights_.size() != net.shape_.size()) throw Error("nn model: weight count does not match shape");
    return net;
  }

private:
  NnShape shape_;
  std::vector<double> weights_;
  double target_mean_ = 0.0;
  double target_scale_ = 1.0;
  std::size_t iterations_ = 0;
  std::vector<double> history_;
};

inline NeuralNet train_nn(std::span<const EncodedInstance> train, std::size_t hidden, std::size_t max_iter,
                          double decay, std::uint64_t seed) {
  return NeuralNet::fit(train, {hidden, max_iter, decay, seed});
}

} // namespace perfml
