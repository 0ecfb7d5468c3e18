#include "temporec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "temporec/error.hpp"
#include "temporec/rng.hpp"

namespace temporec {
namespace {

std::string padded(char prefix, std::size_t value, std::size_t count) {
  const int width = static_cast<int>(std::to_string(count > 0 ? count - 1 : 0).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, value);
  return buf;
}

}  // namespace

void validate(const DriftCorpusSpec& spec) {
  if (spec.users == 0 || spec.items == 0) {
    throw ContractError("drift corpus needs at least one user and one item");
  }
  if (spec.horizon < 1) throw ContractError("horizon must be positive");
  if (!(spec.initial_item_fraction > 0.0 && spec.initial_item_fraction <= 1.0)) {
    throw ContractError("initial_item_fraction must lie in (0, 1]");
  }
  if (!(spec.popularity_decay >= 0.0) || !(spec.recency_affinity >= 0.0)) {
    throw ContractError("popularity_decay and recency_affinity must be >= 0");
  }
  if (!(spec.activity_span > 0.0 && spec.activity_span <= 1.0)) {
    throw ContractError("activity_span must lie in (0, 1]");
  }
  if (spec.min_events == 0 || spec.min_events > spec.max_events) {
    throw ContractError("need 1 <= min_events <= max_events");
  }
  if (spec.taste_clusters == 0) throw ContractError("taste_clusters must be >= 1");
  if (!(spec.taste_boost >= 1.0)) throw ContractError("taste_boost must be >= 1");
}

DriftCorpus generate_drift(const DriftCorpusSpec& spec) {
  validate(spec);
  const std::size_t n_items = spec.items;
  const auto horizon = static_cast<double>(spec.horizon);

  DriftCorpus out;
  out.arrivals.assign(n_items, 0);
  std::vector<double> popularity(n_items);
  std::vector<std::size_t> item_cluster(n_items);
  {
    Rng rng(derive_seed(spec.seed, "items"));
    std::vector<std::size_t> order(n_items);
    for (std::size_t j = 0; j < n_items; ++j) order[j] = j;
    shuffle_in_place(order, rng);
    const auto initial = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(spec.initial_item_fraction * static_cast<double>(n_items))));
    for (std::size_t r = initial; r < n_items; ++r) {
      out.arrivals[order[r]] =
          1 + static_cast<Timestamp>(rng.uniform_index(static_cast<std::uint64_t>(spec.horizon)));
    }
    // Popularity rank is an independent permutation, so arrival carries no
    // information about base popularity.
    shuffle_in_place(order, rng);
    for (std::size_t r = 0; r < n_items; ++r) {
      popularity[order[r]] = std::pow(static_cast<double>(r + 1), -spec.popularity_decay);
    }
    for (auto& c : item_cluster) c = rng.uniform_index(spec.taste_clusters);
  }
  for (std::size_t j = 0; j < n_items; ++j) out.item_ids.push_back(padded('i', j, n_items));

  std::vector<double> cumulative(n_items);
  std::vector<char> taken(n_items);
  const std::uint64_t user_root = derive_seed(spec.seed, "users");
  for (std::size_t u = 0; u < spec.users; ++u) {
    Rng rng(derive_seed(user_root, static_cast<std::uint64_t>(u)));
    const std::size_t cluster = rng.uniform_index(spec.taste_clusters);
    const std::size_t n_events =
        spec.min_events + rng.uniform_index(spec.max_events - spec.min_events + 1);
    const double span = spec.activity_span * horizon;
    const double start = rng.uniform() * (horizon - span);
    std::vector<Timestamp> times(n_events);
    for (auto& t : times) t = static_cast<Timestamp>(std::floor(start + rng.uniform() * span));
    std::sort(times.begin(), times.end());

    const std::string user_id = padded('u', u, spec.users);
    std::fill(taken.begin(), taken.end(), 0);
    for (const Timestamp t : times) {
      double total = 0.0;
      for (std::size_t j = 0; j < n_items; ++j) {
        double w = 0.0;
        if (!taken[j] && out.arrivals[j] <= t) {
          w = popularity[j];
          if (item_cluster[j] == cluster) w *= spec.taste_boost;
          w *= std::exp(-spec.recency_affinity *
                        static_cast<double>(t - out.arrivals[j]) / horizon);
        }
        total += w;
        cumulative[j] = total;
      }
      if (!(total > 0.0)) continue;  // nothing left to choose at this time
      const double x = std::min(rng.uniform() * total, std::nextafter(total, 0.0));
      // First cumulative weight above x; that item has positive weight.
      const auto j = static_cast<std::size_t>(
          std::upper_bound(cumulative.begin(), cumulative.end(), x) - cumulative.begin());
      taken[j] = 1;
      out.log.records.push_back({user_id, out.item_ids[j], t, std::nullopt});
    }
  }
  out.log.sort();
  return out;
}

}  // namespace temporec
