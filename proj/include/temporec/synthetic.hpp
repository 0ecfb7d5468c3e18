#pragma once

// Synthetic interaction logs with a controllable pull towards new items.

#include <cstdint>
#include <vector>

#include "temporec/corpus.hpp"

namespace temporec {

// Items arrive over [0, horizon]: a share is available from the start, the
// rest arrive at uniformly random times. A user's choice at time t among the
// items already available is proportional to
//   popularity * taste * exp(-recency_affinity * (t - arrival) / horizon)
// and never repeats an item for the same user.
struct DriftCorpusSpec {
  std::size_t users = 2000;
  std::size_t items = 500;
  Timestamp horizon = 1'000'000;
  double initial_item_fraction = 0.2;
  double popularity_decay = 1.0;  // Zipf exponent over a random item order
  double recency_affinity = 0.0;
  // Each user is active over a window of this share of the horizon, placed
  // uniformly at random; events fall uniformly inside the window.
  double activity_span = 0.3;
  std::size_t min_events = 10;
  std::size_t max_events = 50;
  std::size_t taste_clusters = 8;
  double taste_boost = 3.0;  // weight multiplier for items in the user's cluster
  std::uint64_t seed = 0;

  bool operator==(const DriftCorpusSpec&) const = default;
};

// Throws ContractError for zero counts, negative rates or an empty event range.
void validate(const DriftCorpusSpec& spec);

struct DriftCorpus {
  InteractionLog log;
  std::vector<Timestamp> arrivals;  // by item number, matching the "i" ids
  std::vector<std::string> item_ids;
};

DriftCorpus generate_drift(const DriftCorpusSpec& spec);

inline InteractionLog generate_drift_corpus(const DriftCorpusSpec& spec) {
  return generate_drift(spec).log;
}

}  // namespace temporec
