#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "perfml/dataset.hpp"
#include "perfml/encoder.hpp"
#include "perfml/error.hpp"
#include "perfml/learners/knn.hpp"
#include "perfml/learners/nn.hpp"
#include "perfml/learners/poly.hpp"
#include "perfml/learners/tree.hpp"
#include "perfml/text.hpp"

namespace perfml {

enum class LearnerKind { tree, knn, nn, poly };

inline std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::tree: return "tree";
    case LearnerKind::knn: return "knn";
    case LearnerKind::nn: return "nn";
    case LearnerKind::poly: return "poly";
  }
  return "?";
}

inline LearnerKind parse_learner(std::string_view s) {
  if (s == "tree") return LearnerKind::tree;
  if (s == "knn") return LearnerKind::knn;
  if (s == "nn") return LearnerKind::nn;
  if (s == "poly") return LearnerKind::poly;
  throw UsageError("unknown learner '" + std::string(s) + "' (expected tree, knn, nn or poly)");
}

inline constexpr LearnerKind all_learners[] = {LearnerKind::tree, LearnerKind::knn, LearnerKind::nn,
                                               LearnerKind::poly};

/// Hyperparameters for every learner; each learner reads only its own.
/// Defaults are the best-performing published settings.
struct HyperParams {
  std::size_t tree_min_instances = 5;
  std::size_t knn_k = 3;
  std::size_t nn_hidden = 5;
  std::size_t nn_max_iter = 1000;
  double nn_decay = 5e-4;
  int poly_degree = 3;
  std::uint64_t seed = 1;

  void validate(LearnerKind kind) const {
    switch (kind) {
      case LearnerKind::tree:
        if (tree_min_instances < 1) throw UsageError("tree M must be >= 1");
        break;
      case LearnerKind::knn:
        if (knn_k < 1) throw UsageError("knn K must be >= 1");
        break;
      case LearnerKind::nn:
        if (nn_hidden < 1 || nn_max_iter < 1 || !(nn_decay >= 0.0))
          throw UsageError("nn needs hidden >= 1, max_iter >= 1, decay >= 0");
        break;
      case LearnerKind::poly:
        if (poly_degree < 1) throw UsageError("poly degree must be >= 1");
        break;
    }
  }

  /// Human-readable form of the parameters relevant to `kind`.
  std::string describe(LearnerKind kind) const {
    switch (kind) {
      case LearnerKind::tree: return "M = " + std::to_string(tree_min_instances);
      case LearnerKind::knn: return "K = " + std::to_string(knn_k);
      case LearnerKind::nn:
        return std::to_string(nn_hidden) + " neurons (1-hl), " + std::to_string(nn_max_iter) +
               " max-it, decay " + text::format_double(nn_decay);
      case LearnerKind::poly: return "degrees = " + std::to_string(poly_degree);
    }
    return {};
  }

  nlohmann::json to_json(LearnerKind kind) const {
    switch (kind) {
      case LearnerKind::tree: return {{"M", tree_min_instances}};
      case LearnerKind::knn: return {{"K", knn_k}};
      case LearnerKind::nn:
        return {{"hidden", nn_hidden}, {"max_iter", nn_max_iter}, {"decay", nn_decay}, {"seed", seed}};
      case LearnerKind::poly: return {{"degree", poly_degree}};
    }
    return {};
  }

  static HyperParams from_json(LearnerKind kind, const nlohmann::json& j) {
    HyperParams p;
    switch (kind) {
      case LearnerKind::tree: p.tree_min_instances = j.at("M").get<std::size_t>(); break;
      case LearnerKind::knn: p.knn_k = j.at("K").get<std::size_t>(); break;
      case LearnerKind::nn:
        p.nn_hidden = j.at("hidden").get<std::size_t>();
        p.nn_max_iter = j.at("max_iter").get<std::size_t>();
        p.nn_decay = j.at("decay").get<double>();
        p.seed = j.at("seed").get<std::uint64_t>();
        break;
      case LearnerKind::poly: p.poly_degree = j.at("degree").get<int>(); break;
    }
    return p;
  }
};

/// FNV-1a over ids, targets and feature cells; identifies a training set.
inline std::uint64_t fingerprint(const Dataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  for (const auto& r : data.records)
    for (const auto& cell : r.text) mix(cell);
  return h;
}

struct TrainingInfo {
  std::uint64_t fingerprint = 0;
  std::vector<std::int64_t> train_ids;
  /// Caller-supplied label; left empty by default so model files stay reproducible.
  std::string trained_at;
};

using FittedLearner = std::variant<RegressionTree, KnnRegressor, NeuralNet, PolyRegressor>;

/// A fitted learner together with the encoder and hyperparameters that
/// produced it. Immutable once built.
class TrainedModel {
public:
  static constexpr int format_version = 1;

  TrainedModel(LearnerKind kind, HyperParams params, Encoder encoder, FittedLearner learner, TrainingInfo info)
      : kind_(kind), params_(params), encoder_(std::move(encoder)), learner_(std::move(learner)),
        info_(std::move(info)) {}

  LearnerKind kind() const { return kind_; }
  const HyperParams& params() const { return params_; }
  const Encoder& encoder() const { return encoder_; }
  const FittedLearner& learner() const { return learner_; }
  const TrainingInfo& info() const { return info_; }

  double predict(std::span<const double> features) const {
    if (features.size() != encoder_.width())
      throw Error("feature length mismatch: model expects " + std::to_string(encoder_.width()) + ", got " +
                  std::to_string(features.size()));
    return std::visit([&](const auto& m) { return m.predict(features); }, learner_);
  }

  double predict(const EncodedInstance& instance) const { return predict(instance.features); }

  double predict(const ExecutionRecord& record, EncodeReport* report = nullptr) const {
    return predict(encoder_.encode(record, report).features);
  }

  std::vector<double> predict_all(const Dataset& data, EncodeReport* report = nullptr) const {
    std::vector<double> out;
    out.reserve(data.size());
    for (const auto& r : data.records) out.push_back(predict(r, report));
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json learner = std::visit([](const auto& m) { return m.to_json(); }, learner_);
    return {{"format", "perfml-model"},
            {"version", format_version},
            {"kind", std::string(to_string(kind_))},
            {"hyperparams", params_.to_json(kind_)},
            {"encoder", encoder_.to_json()},
            {"model", std::move(learner)},
            {"training",
             {{"fingerprint", info_.fingerprint}, {"train_ids", info_.train_ids}, {"trained_at", info_.trained_at}}}};
  }

  static TrainedModel from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "perfml-model") throw Error("not a perfml model file");
    if (j.at("version").get<int>() > format_version)
      throw Error("model file version " + std::to_string(j.at("version").get<int>()) + " is newer than supported");
    const LearnerKind kind = parse_learner(j.at("kind").get<std::string>());
    const auto& jm = j.at("model");
    FittedLearner learner = [&]() -> FittedLearner {
      switch (kind) {
        case LearnerKind::tree: return RegressionTree::from_json(jm);
        case LearnerKind::knn: return KnnRegressor::from_json(jm);
        case LearnerKind::nn: return NeuralNet::from_json(jm);
        case LearnerKind::poly: return PolyRegressor::from_json(jm);
      }
      throw Error("unreachable");
    }();
    TrainingInfo info;
    const auto& jt = j.at("training");
    info.fingerprint = jt.at("fingerprint").get<std::uint64_t>();
    info.train_ids = jt.at("train_ids").get<std::vector<std::int64_t>>();
    info.trained_at = jt.value("trained_at", "");
    return {kind, HyperParams::from_json(kind, j.at("hyperparams")), Encoder::from_json(j.at("encoder")),
            std::move(learner), std::move(info)};
  }

  std::string serialize() const { return to_json().dump(1) + "\n"; }
  static TrainedModel deserialize(std::string_view s) {
    try {
      return from_json(nlohmann::json::parse(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("malformed model file: ") + e.what());
    }
  }

  void save(const std::string& path) const { text::write_file(path, serialize()); }
  static TrainedModel load(const std::string& path) { return deserialize(text::read_file(path)); }

private:
  LearnerKind kind_;
  HyperParams params_;
  Encoder encoder_;
  FittedLearner learner_;
  TrainingInfo info_;
};

/// Fits one learner on already-encoded instances.
inline FittedLearner fit_learner(LearnerKind kind, const HyperParams& p, std::span<const EncodedInstance> train) {
  p.validate(kind);
  switch (kind) {
    case LearnerKind::tree: return train_tree(train, p.tree_min_instances);
    case LearnerKind::knn: return train_knn(train, p.knn_k);
    case LearnerKind::nn: return train_nn(train, p.nn_hidden, p.nn_max_iter, p.nn_decay, p.seed);
    case LearnerKind::poly: return train_poly(train, p.poly_degree);
  }
  throw Error("unreachable");
}

/// Fits the encoder on `train`, encodes it and fits the learner.
inline TrainedModel train_model(LearnerKind kind, const HyperParams& p, const Dataset& train) {
  if (train.empty()) throw Error(std::string(to_string(kind)) + ": empty training set");
  for (const auto& r : train.records)
    if (!r.has_target()) throw Error("training record " + std::to_string(r.id) + " has no target");
  Encoder encoder = Encoder::fit(train);
  const auto encoded = encoder.encode_all(train);
  FittedLearner learner = fit_learner(kind, p, encoded);
  return {kind, p, std::move(encoder), std::move(learner), {fingerprint(train), train.ids(), {}}};
}

} // namespace perfml
