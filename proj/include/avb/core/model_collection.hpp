#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <vector>

namespace avb {

struct ModelEntry {
  std::string id;
  std::string prior_spec; // free-form description of the within-model prior
  double complexity = 0.0; // ζ_m ≥ 0, supplied by the application
};

/// A finite family of models with prior model weights α.
///
/// Weights are kept in log form as well, since α_m for large models is far
/// below the smallest normal double.
class ModelCollection {
public:
  ModelCollection() = default;

  /// Explicit α; validated to be a probability vector over unique ids.
  ModelCollection(std::vector<ModelEntry> models, const Eigen::VectorXd &alpha,
                  double prior_exponent = 1.0, double b0 = 1.0);

  /// α_m ∝ exp(−b0 · L · scale · ζ_m²).
  static ModelCollection from_complexity(std::vector<ModelEntry> models,
                                         double b0, double prior_exponent,
                                         double scale);

  /// α_m ∝ exp(log_weights_m); normalization in log domain.
  static ModelCollection from_log_weights(std::vector<ModelEntry> models,
                                          const Eigen::VectorXd &log_weights,
                                          double prior_exponent = 1.0,
                                          double b0 = 1.0);

  [[nodiscard]] std::size_t size() const noexcept { return models_.size(); }
  [[nodiscard]] const std::vector<ModelEntry> &models() const noexcept { return models_; }
  [[nodiscard]] const ModelEntry &model(std::size_t i) const { return models_.at(i); }
  [[nodiscard]] const Eigen::VectorXd &alpha() const noexcept { return alpha_; }
  [[nodiscard]] const Eigen::VectorXd &log_alpha() const noexcept { return log_alpha_; }
  [[nodiscard]] double prior_exponent() const noexcept { return prior_exponent_; }
  [[nodiscard]] double b0() const noexcept { return b0_; }

  /// Position of a model id; throws MissingModelFit-free std::out_of_range.
  [[nodiscard]] std::size_t index_of(const std::string &id) const;
  [[nodiscard]] bool contains(const std::string &id) const noexcept;

private:
  void check_ids() const;

  std::vector<ModelEntry> models_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd log_alpha_;
  double prior_exponent_ = 1.0;
  double b0_ = 1.0;
};

} // namespace avb
