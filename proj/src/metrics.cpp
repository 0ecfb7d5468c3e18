#include "temporec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "temporec/error.hpp"

namespace temporec {

namespace {

std::size_t hits_at_k(std::span<const ItemIndex> ranked,
                      std::span<const ItemIndex> targets, std::size_t k) {
  const std::size_t depth = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < depth; ++r) {
    if (std::binary_search(targets.begin(), targets.end(), ranked[r])) ++hits;
  }
  return hits;
}

void require_k(std::size_t k) {
  if (k == 0) throw ContractError("k must be at least 1");
}

}  // namespace

double recency_value(Timestamp t, Timestamp t_min, Timestamp t_max,
                     const RecencyParams& params) {
  if (t < t_min || t > t_max) {
    throw ContractError("timestamp " + std::to_string(t) +
                        " outside the catalog range [" + std::to_string(t_min) +
                        ", " + std::to_string(t_max) + "]");
  }
  if (t_max == t_min) return 1.0;
  const double scaled =
      static_cast<double>(t - t_min) / static_cast<double>(t_max - t_min);
  if (scaled >= params.threshold) return 1.0;
  return std::pow(params.base, (params.threshold - scaled) * params.slope);
}

RecencyWeights RecencyWeights::uniform(std::size_t items) {
  return RecencyWeights{std::vector<double>(items, 1.0), {}};
}

RecencyWeights build_recency_weights(const ItemCatalog& catalog,
                                     const RecencyParams& params) {
  if (catalog.size() == 0) throw ContractError("empty catalog");
  RecencyWeights w;
  w.params = params;
  w.weights.reserve(catalog.size());
  for (const Timestamp t : catalog.first_seen) {
    w.weights.push_back(recency_value(t, catalog.t_min, catalog.t_max, params));
  }
  return w;
}

std::vector<ItemIndex> top_k(std::span<const double> scores,
                             std::span<const ItemIndex> exclude,
                             std::size_t k) {
  std::vector<char> masked(scores.size(), 0);
  for (const ItemIndex i : exclude) {
    if (i < masked.size()) masked[i] = 1;
  }
  std::vector<ItemIndex> candidates;
  candidates.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!masked[i]) candidates.push_back(static_cast<ItemIndex>(i));
  }
  const auto better = [&](ItemIndex a, ItemIndex b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  };
  const std::size_t depth = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + depth,
                    candidates.end(), better);
  candidates.resize(depth);
  return candidates;
}

double recall_at_k(std::span<const ItemIndex> ranked,
                   std::span<const ItemIndex> targets, std::size_t k) {
  require_k(k);
  if (targets.empty()) throw ContractError("recall of an empty target set");
  return static_cast<double>(hits_at_k(ranked, targets, k)) /
         static_cast<double>(std::min(k, targets.size()));
}

double precision_at_k(std::span<const ItemIndex> ranked,
                      std::span<const ItemIndex> targets, std::size_t k) {
  require_k(k);
  return static_cast<double>(hits_at_k(ranked, targets, k)) /
         static_cast<double>(k);
}

double recency_at_k(std::span<const ItemIndex> ranked,
                    std::span<const ItemIndex> targets, std::size_t k,
                    const RecencyWeights& weights) {
  require_k(k);
  const std::size_t depth = std::min(k, ranked.size());
  double total = 0.0;
  for (std::size_t r = 0; r < depth; ++r) {
    if (std::binary_search(targets.begin(), targets.end(), ranked[r])) {
      total += weights[ranked[r]];
    }
  }
  return total;
}

std::vector<MetricReport> evaluate(const ScoreProvider& model,
                                   const EvalSplit& split,
                                   std::span<const std::size_t> ks,
                                   const RecencyWeights& weights,
                                   bool keep_per_user) {
  if (ks.empty()) throw ContractError("no cutoffs k requested");
  for (const std::size_t k : ks) require_k(k);
  if (weights.size() != model.num_items()) {
    throw ContractError("recency weights cover " +
                        std::to_string(weights.size()) + " items, model has " +
                        std::to_string(model.num_items()));
  }
  const std::size_t max_k = *std::max_element(ks.begin(), ks.end());

  std::vector<MetricReport> reports(ks.size());
  for (std::size_t j = 0; j < ks.size(); ++j) {
    reports[j].split = split.name;
    reports[j].protocol = std::string(to_string(split.protocol));
    reports[j].k = ks[j];
  }
  for (const auto& eu : split.users) {
    const auto inputs = eu.input_items();
    const auto targets = eu.target_items();
    if (targets.empty()) continue;
    const auto scores = model.score(inputs);
    if (scores.size() != model.num_items()) {
      throw ContractError("model returned " + std::to_string(scores.size()) +
                          " scores for a catalog of " +
                          std::to_string(model.num_items()));
    }
    const auto ranked = top_k(scores, inputs, max_k);
    for (std::size_t j = 0; j < ks.size(); ++j) {
      const std::size_t k = ks[j];
      UserMetrics m;
      m.user = eu.user;
      m.recall = recall_at_k(ranked, targets, k);
      m.precision = precision_at_k(ranked, targets, k);
      m.recency = recency_at_k(ranked, targets, k, weights);
      m.recency_normalized =
          m.recency / static_cast<double>(std::min(k, targets.size()));
      auto& rep = reports[j];
      rep.recall += m.recall;
      rep.precision += m.precision;
      rep.recency += m.recency;
      rep.recency_normalized += m.recency_normalized;
      ++rep.n_users;
      if (keep_per_user) rep.per_user.push_back(m);
    }
  }
  for (auto& rep : reports) {
    if (rep.n_users == 0) continue;
    const auto n = static_cast<double>(rep.n_users);
    rep.recall /= n;
    rep.precision /= n;
    rep.recency /= n;
    rep.recency_normalized /= n;
  }
  return reports;
}

nlohmann::json to_json(const MetricReport& report) {
  nlohmann::json j = {{"split", report.split},
                      {"protocol", report.protocol},
                      {"K", report.k},
                      {"n_users", report.n_users},
                      {"recall", report.recall},
                      {"precision", report.precision},
                      {"recency", report.recency},
                      {"recency_normalized", report.recency_normalized}};
  return j;
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
  MetricReport r;
  r.split = j.value("split", std::string{});
  r.protocol = j.at("protocol").get<std::string>();
  r.k = j.at("K").get<std::size_t>();
  r.n_users = j.at("n_users").get<std::size_t>();
  r.recall = j.at("recall").get<double>();
  r.precision = j.at("precision").get<double>();
  r.recency = j.at("recency").get<double>();
  r.recency_normalized = j.at("recency_normalized").get<double>();
  return r;
}

}  // namespace temporec
