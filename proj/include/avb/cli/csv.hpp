#pragma once

#include "avb/quasi/sbm.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace avb::cli {

/// Per-column affine map x ↦ (x − mean) / scale.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale; // 1 for constant columns

  /// Fitted on the rows of features (n × d).
  static Standardizer fit(const Eigen::MatrixXd &features);
  [[nodiscard]] Eigen::MatrixXd transform(const Eigen::MatrixXd &features) const;
  [[nodiscard]] Eigen::MatrixXd inverse(const Eigen::MatrixXd &standardized) const;
};

struct RegressionDataset {
  std::vector<std::string> feature_names;
  std::string target_name;
  Eigen::MatrixXd features; // n × d, standardized
  Eigen::VectorXd targets;  // as read
  Standardizer transform;
};

/// Header row, then numeric rows. The target column is named; every other
/// column is a feature. Errors carry the 1-based line number.
[[nodiscard]] RegressionDataset read_regression_csv(std::istream &in, const std::string &target);
[[nodiscard]] RegressionDataset ingest_csv(const std::filesystem::path &path,
                                           const std::string &target);

/// Lines "i,j" with 0-based node indices; blank lines and '#' comments are
/// skipped. Node count is max index + 1 unless given.
[[nodiscard]] quasi::SbmData read_edge_list(std::istream &in, int nodes = 0);
[[nodiscard]] quasi::SbmData ingest_edge_list(const std::filesystem::path &path, int nodes = 0);

} // namespace avb::cli
