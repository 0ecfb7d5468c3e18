#include "temporec/report.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "temporec/error.hpp"

namespace temporec {
namespace {

std::set<std::size_t> ks_of(const Bundle& b) {
  std::set<std::size_t> ks;
  for (const auto& r : b.reports) ks.insert(r.k);
  return ks;
}

bool covers(const std::vector<ParetoEntry>& a, const std::vector<ParetoEntry>& b) {
  return std::all_of(b.begin(), b.end(), [&](const ParetoEntry& pb) {
    return std::any_of(a.begin(), a.end(), [&](const ParetoEntry& pa) {
      return pareto_dominates(pa.metrics, pb.metrics);
    });
  });
}

}  // namespace

Bundle load_bundle(const std::filesystem::path& dir) {
  const auto path = dir / "metrics.json";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
  Bundle b;
  b.label = doc.value("name", dir.filename().string());
  if (doc.contains("model")) b.label += "/" + doc["model"].get<std::string>();
  for (const auto& r : doc.at("reports")) b.reports.push_back(metric_report_from_json(r));
  return b;
}

ReportTables metric_tables(std::span<const Bundle> bundles) {
  if (bundles.empty()) throw ContractError("report needs at least one bundle");
  const auto ks = ks_of(bundles.front());
  for (const auto& b : bundles) {
    if (ks_of(b) != ks) {
      throw ContractError("bundle '" + b.label + "' was evaluated at different K values than '" +
                          bundles.front().label + "'");
    }
  }

  std::ostringstream text, csv;
  csv << "model,split,protocol,k,n_users,recall,precision,recency,recency_normalized\n";
  csv << std::setprecision(17);
  std::size_t label_width = 5;
  for (const auto& b : bundles) label_width = std::max(label_width, b.label.size());

  text << std::left << std::setw(static_cast<int>(label_width)) << "model"
       << "  " << std::setw(14) << "split" << std::right;
  for (const auto k : ks) {
    for (const char* metric : {"Recall", "Prec", "Recency"}) {
      text << std::setw(12) << (std::string(metric) + "@" + std::to_string(k));
    }
  }
  text << "\n";

  for (const auto& b : bundles) {
    std::vector<std::string> splits;
    for (const auto& r : b.reports) {
      if (std::find(splits.begin(), splits.end(), r.split) == splits.end()) {
        splits.push_back(r.split);
      }
    }
    for (const auto& split : splits) {
      text << std::left << std::setw(static_cast<int>(label_width)) << b.label << "  "
           << std::setw(14) << split << std::right << std::fixed << std::setprecision(4);
      for (const auto k : ks) {
        const auto it = std::find_if(b.reports.begin(), b.reports.end(),
                                     [&](const MetricReport& r) {
                                       return r.split == split && r.k == k;
                                     });
        if (it == b.reports.end()) {
          text << std::setw(12) << "-" << std::setw(12) << "-" << std::setw(12) << "-";
          continue;
        }
        text << std::setw(12) << it->recall << std::setw(12) << it->precision
             << std::setw(12) << it->recency;
        csv << b.label << "," << it->split << "," << it->protocol << "," << it->k << ","
            << it->n_users << "," << it->recall << "," << it->precision << ","
            << it->recency << "," << it->recency_normalized << "\n";
      }
      text << "\n";
    }
  }
  return {text.str(), csv.str()};
}

std::string_view to_string(FrontVerdict v) {
  switch (v) {
    case FrontVerdict::a_dominates_b: return "A dominates B";
    case FrontVerdict::b_dominates_a: return "B dominates A";
    case FrontVerdict::neither: return "neither";
  }
  return "";
}

FrontVerdict compare_fronts(const std::vector<ParetoEntry>& a,
                            const std::vector<ParetoEntry>& b) {
  if (a.empty() || b.empty()) throw ContractError("cannot compare an empty front");
  const bool ab = covers(a, b);
  const bool ba = covers(b, a);
  if (ab && !ba) return FrontVerdict::a_dominates_b;
  if (ba && !ab) return FrontVerdict::b_dominates_a;
  return FrontVerdict::neither;
}

std::vector<ParetoEntry> load_front(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_pareto_csv(in);
}

std::string front_points_csv(std::vector<ParetoEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const ParetoEntry& x, const ParetoEntry& y) {
    return x.metrics < y.metrics;
  });
  std::ostringstream out;
  out << std::setprecision(17) << "recall,recency,epoch\n";
  for (const auto& e : entries) {
    out << e.metrics.at(0) << "," << e.metrics.at(1) << "," << e.epoch << "\n";
  }
  return out.str();
}

}  // namespace temporec
