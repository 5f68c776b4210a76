#include "avb/cli/csv.hpp"

#include "avb/core/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace avb::cli {

Standardizer Standardizer::fit(const Eigen::MatrixXd &features) {
  if (features.rows() == 0)
    throw ShapeError("cannot standardize an empty dataset");
  Standardizer s;
  s.mean = features.colwise().mean().transpose();
  s.scale.resize(features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double var = (features.col(j).array() - s.mean(j)).square().mean();
    s.scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd &features) const {
  if (features.cols() != mean.size())
    throw ShapeError("feature count differs from the fitted transform");
  return (features.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::MatrixXd Standardizer::inverse(const Eigen::MatrixXd &standardized) const {
  if (standardized.cols() != mean.size())
    throw ShapeError("feature count differs from the fitted transform");
  return (standardized.array().rowwise() * scale.transpose().array()).rowwise() +
         mean.transpose().array();
}

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ','))
    out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

double parse_number(const std::string &cell, std::size_t line) {
  double v = 0.0;
  const auto *end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (cell.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v))
    throw ParseError("non-numeric cell '" + cell + "'", line);
  return v;
}

bool skippable(const std::string &line) {
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

} // namespace

RegressionDataset read_regression_csv(std::istream &in, const std::string &target) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!skippable(line)) {
      header = split(line);
      break;
    }
  }
  if (header.empty())
    throw ParseError("missing header row", lineno);
  const auto tpos = std::find(header.begin(), header.end(), target);
  if (tpos == header.end())
    throw ParseError("target column '" + target + "' not in header", lineno);
  const auto tcol = static_cast<std::size_t>(tpos - header.begin());
  if (header.size() < 2)
    throw ParseError("need at least one feature column", lineno);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line))
      continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       lineno);
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto &c : cells)
      row.push_back(parse_number(c, lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw ParseError("no data rows", lineno);

  RegressionDataset ds;
  ds.target_name = target;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(header.size() - 1);
  Eigen::MatrixXd raw(n, d);
  ds.targets.resize(n);
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != tcol)
      ds.feature_names.push_back(header[c]);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const double v = rows[static_cast<std::size_t>(i)][c];
      if (c == tcol)
        ds.targets(i) = v;
      else
        raw(i, j++) = v;
    }
  }
  ds.transform = Standardizer::fit(raw);
  ds.features = ds.transform.transform(raw);
  return ds;
}

RegressionDataset ingest_csv(const std::filesystem::path &path, const std::string &target) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open " + path.string());
  return read_regression_csv(in, target);
}

quasi::SbmData read_edge_list(std::istream &in, int nodes) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<int, int>> edges;
  int max_index = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line))
      continue;
    const auto cells = split(line);
    if (cells.size() != 2)
      throw ParseError("edge lines need exactly two indices", lineno);
    int ij[2] = {0, 0};
    for (int k = 0; k < 2; ++k) {
      const auto &c = cells[static_cast<std::size_t>(k)];
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), ij[k]);
      if (c.empty() || ec != std::errc{} || ptr != c.data() + c.size() || ij[k] < 0)
        throw ParseError("invalid node index '" + c + "'", lineno);
    }
    if (ij[0] == ij[1])
      throw ParseError("self-loop", lineno);
    max_index = std::max({max_index, ij[0], ij[1]});
    edges.emplace_back(ij[0], ij[1]);
  }
  const int n = nodes > 0 ? nodes : max_index + 1;
  if (max_index >= n)
    throw ParseError("node index exceeds the declared node count", lineno);
  return quasi::SbmData::from_edges(n, edges);
}

quasi::SbmData ingest_edge_list(const std::filesystem::path &path, int nodes) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open " + path.string());
  return read_edge_list(in, nodes);
}

} // namespace avb::cli
