#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "perfml/encoder.hpp"
#include "perfml/error.hpp"

namespace perfml {

/// Least-squares polynomial regression on per-feature powers 1..degree (no
/// interaction terms), solved through damped normal equations.
class PolyRegressor {
public:
  static constexpr double default_ridge = 1e-8;

  PolyRegressor() = default;

  static PolyRegressor fit(std::span<const EncodedInstance> train, int degree, double ridge = default_ridge) {
    if (degree < 1) throw Error("poly: degree must be >= 1");
    if (train.empty()) throw Error("poly: empty training set");
    PolyRegressor m;
    m.degree_ = degree;
    m.width_ = train.front().features.size();
    const auto cols = static_cast<Eigen::Index>(1 + m.width_ * static_cast<std::size_t>(degree));

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(cols, cols);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(cols);
    Eigen::VectorXd row(cols);
    for (const auto& r : train) {
      if (r.features.size() != m.width_) throw Error("poly: inconsistent feature widths");
      m.expand(r.features, row);
      gram.selfadjointView<Eigen::Lower>().rankUpdate(row);
      rhs += r.target * row;
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    for (Eigen::Index i = 1; i < cols; ++i) gram(i, i) += ridge;
    const Eigen::VectorXd beta = gram.ldlt().solve(rhs);
    if (!beta.allFinite()) throw Error("poly: normal equations produced non-finite coefficients");
    m.coef_.assign(beta.data(), beta.data() + beta.size());
    return m;
  }

  double predict(std::span<const double> x) const {
    double y = coef_[0];
    std::size_t k = 1;
    for (std::size_t j = 0; j < width_; ++j) {
      double p = 1.0;
      for (int d = 1; d <= degree_; ++d) {
        p *= x[j];
        y += coef_[k++] * p;
      }
    }
    return y;
  }

  int degree() const { return degree_; }
  std::size_t width() const { return width_; }
  /// Intercept, then for each feature its coefficients for powers 1..degree.
  const std::vector<double>& coefficients() const { return coef_; }

  nlohmann::json to_json() const { return {{"degree", degree_}, {"width", width_}, {"coef", coef_}}; }

  static PolyRegressor from_json(const nlohmann::json& j) {
    PolyRegressor m;
    m.degree_ = j.at("degree").get<int>();
    m.width_ = j.at("width").get<std::size_t>();
    m.coef_ = j.at("coef").get<std::vector<double>>();
    if (m.coef_.size() != 1 + m.width_ * static_cast<std::size_t>(m.degree_))
      throw Error("poly model: coefficient count does not match degree and width");
    return m;
  }

private:
  void expand(std::span<const double> x, Eigen::VectorXd& row) const {
    row(0) = 1.0;
    Eigen::Index k = 1;
    for (std::size_t j = 0; j < width_; ++j) {
      double p = 1.0;
      for (int d = 1; d <= degree_; ++d) {
        p *= x[j];
        row(k++) = p;
      }
    }
  }

  int degree_ = 1;
  std::size_t width_ = 0;
  std::vector<double> coef_;
};

inline PolyRegressor train_poly(std::span<const EncodedInstance> train, int degree) {
  return PolyRegressor::fit(train, degree);
}

} // namespace perfml
