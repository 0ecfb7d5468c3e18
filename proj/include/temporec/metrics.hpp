#pragma once

// Item recency weights and top-K ranking metrics.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temporec/corpus.hpp"
#include "temporec/protocols.hpp"

namespace temporec {

// Shape of the recency curve: items whose min-max scaled first-seen time is
// at least `threshold` get weight 1, older ones decay as
// base^((threshold - s) * slope).
struct RecencyParams {
  double threshold = 0.8;
  double base = 0.3;
  double slope = 10.0 / 3.0;
};

// Throws ContractError if t is outside [t_min, t_max]. A degenerate range
// (t_min == t_max) maps every item to 1.
double recency_value(Timestamp t, Timestamp t_min, Timestamp t_max,
                     const RecencyParams& params = {});

struct RecencyWeights {
  std::vector<double> weights;  // per item, in (0, 1]
  RecencyParams params;

  std::size_t size() const { return weights.size(); }
  double operator[](ItemIndex i) const { return weights[i]; }
  static RecencyWeights uniform(std::size_t items);
};

RecencyWeights build_recency_weights(const ItemCatalog& catalog,
                                     const RecencyParams& params = {});

// Top-k items by descending score, ties by ascending item index, skipping
// the excluded items. Returns fewer than k items only if the catalog runs out.
std::vector<ItemIndex> top_k(std::span<const double> scores,
                             std::span<const ItemIndex> exclude, std::size_t k);

// `targets` must be sorted ascending and nonempty.
double recall_at_k(std::span<const ItemIndex> ranked,
                   std::span<const ItemIndex> targets, std::size_t k);
double precision_at_k(std::span<const ItemIndex> ranked,
                      std::span<const ItemIndex> targets, std::size_t k);
// Unnormalized: sum of the weights of relevant items in the top k.
double recency_at_k(std::span<const ItemIndex> ranked,
                    std::span<const ItemIndex> targets, std::size_t k,
                    const RecencyWeights& weights);

// Anything that produces a full score vector over the catalog for a user
// described by their input items.
class ScoreProvider {
 public:
  virtual ~ScoreProvider() = default;
  virtual std::size_t num_items() const = 0;
  virtual std::vector<double> score(std::span<const ItemIndex> inputs) const = 0;
};

struct UserMetrics {
  UserIndex user = 0;
  double recall = 0.0;
  double precision = 0.0;
  double recency = 0.0;
  double recency_normalized = 0.0;
};

struct MetricReport {
  std::string split;     // e.g. "val_cutoff"
  std::string protocol;  // "traditional" | "proportional" | "cutoff"
  std::size_t k = 20;
  std::size_t n_users = 0;
  double recall = 0.0;
  double precision = 0.0;
  double recency = 0.0;
  double recency_normalized = 0.0;  // recency / min(k, |targets|) per user
  std::vector<UserMetrics> per_user;
};

// One report per k. Input items are masked before ranking; means are summed
// in user order.
std::vector<MetricReport> evaluate(const ScoreProvider& model,
                                   const EvalSplit& split,
                                   std::span<const std::size_t> ks,
                                   const RecencyWeights& weights,
                                   bool keep_per_user = false);

nlohmann::json to_json(const MetricReport& report);
MetricReport metric_report_from_json(const nlohmann::json& j);

}  // namespace temporec
