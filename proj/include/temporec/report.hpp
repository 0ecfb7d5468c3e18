#pragma once

// Side-by-side metric tables and Pareto-front comparison over result
// bundles. Nothing here writes to a bundle.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "temporec/metrics.hpp"
#include "temporec/moo.hpp"

namespace temporec {

struct Bundle {
  std::string label;  // "<experiment name>/<model>", directory name if unnamed
  std::vector<MetricReport> reports;
};

// Reads <dir>/metrics.json.
Bundle load_bundle(const std::filesystem::path& dir);

struct ReportTables {
  std::string text;
  std::string csv;
};

// One row per bundle and split, one column group per K. Throws
// ContractError when the bundles were evaluated at different Ks.
ReportTables metric_tables(std::span<const Bundle> bundles);

enum class FrontVerdict { a_dominates_b, b_dominates_a, neither };

std::string_view to_string(FrontVerdict v);

// A dominates B when every point of B is dominated by some point of A and
// the reverse does not hold.
FrontVerdict compare_fronts(const std::vector<ParetoEntry>& a,
                            const std::vector<ParetoEntry>& b);

// Reads a Pareto CSV; a file without entries is a ParseError.
std::vector<ParetoEntry> load_front(const std::filesystem::path& path);

// "recall,recency" point list for plotting, sorted by recall.
std::string front_points_csv(std::vector<ParetoEntry> entries);

}  // namespace temporec
