#pragma once

#include "avb/compare/compare.hpp"
#include "avb/core/combine.hpp"
#include "avb/core/elbo.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace avb::cli {

inline constexpr const char *kSchemaName = "avb.result";
inline constexpr int kSchemaVersion = 1;

/// Version string compiled into the library.
[[nodiscard]] std::string code_version();

[[nodiscard]] nlohmann::json to_json(const ElboBreakdown &elbo);

/// Models (with prior weights and objectives), γ, selection, dominance and
/// the combined-vs-selected total variation.
[[nodiscard]] nlohmann::json posterior_to_json(const ModelCollection &collection,
                                               const CombinedPosterior &combined,
                                               const compare::SelectionResult &selection,
                                               const compare::DominanceCheck &dominance);

struct ReplayReport {
  std::size_t models = 0;
  double max_abs_diff = 0.0;
  bool ok = false; // max_abs_diff ≤ 1e-12
};

/// Recomputes γ from the stored log α and objectives.
[[nodiscard]] ReplayReport replay(const nlohmann::json &result);
[[nodiscard]] ReplayReport replay_file(const std::filesystem::path &path);

/// Text form used for files and determinism comparisons; the "timing" block
/// is dropped when strip_timing is set.
[[nodiscard]] std::string canonical_dump(nlohmann::json doc, bool strip_timing);

void write_text(const std::filesystem::path &path, const std::string &text);

} // namespace avb::cli
