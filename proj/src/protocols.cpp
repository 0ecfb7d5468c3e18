#include "temporec/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "temporec/error.hpp"
#include "temporec/rng.hpp"

namespace temporec {

namespace {

bool time_order(const TimedItem& a, const TimedItem& b) {
  return a.timestamp != b.timestamp ? a.timestamp < b.timestamp
                                    : a.item < b.item;
}

// Sizes for `n` elements split by `fractions`, largest remainder rounding,
// ties going to the earlier group.
std::vector<std::size_t> largest_remainder(std::size_t n,
                                           const std::vector<double>& fractions) {
  std::vector<std::size_t> sizes(fractions.size());
  std::vector<double> remainders(fractions.size());
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < fractions.size(); ++k) {
    const double quota = fractions[k] * static_cast<double>(n);
    // Guard against 0.1 * 10 landing a hair below 1.
    const double whole = std::floor(quota + 1e-9);
    sizes[k] = static_cast<std::size_t>(whole);
    remainders[k] = std::max(0.0, quota - whole);
    assigned += sizes[k];
  }
  std::vector<std::size_t> order(fractions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainders[a] > remainders[b];
  });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) {
    ++sizes[order[k % order.size()]];
  }
  return sizes;
}

std::vector<UserIndex> shuffled(std::vector<UserIndex> users,
                                std::uint64_t seed) {
  std::sort(users.begin(), users.end());
  Rng rng(seed);
  shuffle_in_place(users, rng);
  return users;
}

// Picks round(fraction * n) users, at least one, leaving at least one behind.
std::vector<UserIndex> sample_validation_users(const std::vector<UserIndex>& users,
                                               double fraction,
                                               std::uint64_t seed) {
  if (users.size() < 2) {
    throw EmptyCorpusError("need at least two users to hold out validation users");
  }
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ContractError("validation user fraction must lie in (0, 1)");
  }
  auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(users.size()) + 0.5));
  count = std::clamp<std::size_t>(count, 1, users.size() - 1);
  auto order = shuffled(users, seed);
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

bool include_user(std::size_t n, Exclusions& excluded, UserIndex user) {
  if (n >= 2) return true;
  ++excluded.too_few;
  excluded.users.push_back(user);
  return false;
}

std::vector<UserEvents> events_of(const Corpus& corpus,
                                  const std::vector<UserIndex>& users,
                                  std::optional<Timestamp> until = std::nullopt) {
  std::vector<UserEvents> out;
  out.reserve(users.size());
  for (const UserIndex u : users) {
    UserEvents ue{u, {}};
    for (const auto& e : corpus.histories[u]) {
      if (!until || e.timestamp <= *until) ue.events.push_back(e);
    }
    out.push_back(std::move(ue));
  }
  return out;
}

std::vector<UserIndex> all_users(const Corpus& corpus) {
  std::vector<UserIndex> users(corpus.num_users());
  std::iota(users.begin(), users.end(), 0);
  return users;
}

SparseUserItemMatrix train_matrix(const Corpus& corpus,
                                  const std::vector<UserIndex>& train_users,
                                  std::optional<Timestamp> until) {
  std::vector<std::vector<ItemIndex>> rows(corpus.num_users());
  for (const UserIndex u : train_users) {
    for (const auto& e : corpus.histories[u]) {
      if (!until || e.timestamp <= *until) rows[u].push_back(e.item);
    }
  }
  return SparseUserItemMatrix::from_rows(corpus.num_items(), std::move(rows));
}

std::vector<Timestamp> all_times(const Corpus& corpus,
                                 std::optional<Timestamp> until = std::nullopt) {
  std::vector<Timestamp> times;
  times.reserve(corpus.num_interactions());
  for (const auto& h : corpus.histories) {
    for (const auto& e : h) {
      if (!until || e.timestamp <= *until) times.push_back(e.timestamp);
    }
  }
  return times;
}

EvalSplit make_validation(const std::vector<UserEvents>& sources,
                          const SplitParams& params, Timestamp val_cutoff) {
  EvalSplit split;
  split.phase = params.phase;
  split.protocol = params.protocol;
  HoldoutResult held;
  switch (params.protocol) {
    case Protocol::traditional:
      held = holdout_random(sources, params.holdout_fraction,
                            derive_seed(params.seed, "validation-holdout"));
      split.name = "val_trad";
      split.holdout_fraction = params.holdout_fraction;
      split.seed = derive_seed(params.seed, "validation-holdout");
      break;
    case Protocol::proportional:
      held = holdout_proportional(sources, params.holdout_fraction);
      split.name = "val_prop";
      split.holdout_fraction = params.holdout_fraction;
      break;
    case Protocol::strict_cutoff:
      held = holdout_cutoff(sources, val_cutoff);
      split.name = "val_cutoff";
      split.cutoff_time = val_cutoff;
      break;
  }
  split.users = std::move(held.users);
  split.excluded = std::move(held.excluded);
  return split;
}

}  // namespace

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::traditional: return "traditional";
    case Protocol::proportional: return "proportional";
    case Protocol::strict_cutoff: return "cutoff";
  }
  return "?";
}

std::string_view to_string(Phase p) {
  return p == Phase::development ? "development" : "deployment_ready";
}

std::string_view to_string(TestDesign d) {
  return d == TestDesign::temporal ? "temporal" : "traditional";
}

Protocol parse_protocol(std::string_view s) {
  if (s == "traditional" || s == "trad") return Protocol::traditional;
  if (s == "proportional" || s == "prop") return Protocol::proportional;
  if (s == "cutoff" || s == "strict_cutoff") return Protocol::strict_cutoff;
  throw ContractError("unknown protocol '" + std::string(s) + "'");
}

Phase parse_phase(std::string_view s) {
  if (s == "development") return Phase::development;
  if (s == "deployment_ready" || s == "deployment-ready" || s == "deployment") {
    return Phase::deployment_ready;
  }
  throw ContractError("unknown phase '" + std::string(s) + "'");
}

TestDesign parse_test_design(std::string_view s) {
  if (s == "temporal") return TestDesign::temporal;
  if (s == "traditional") return TestDesign::traditional;
  throw ContractError("unknown test design '" + std::string(s) + "'");
}

std::vector<ItemIndex> EvalUser::input_items() const {
  std::vector<ItemIndex> out;
  out.reserve(inputs.size());
  for (const auto& e : inputs) out.push_back(e.item);
  return out;
}

std::vector<ItemIndex> EvalUser::target_items() const {
  std::vector<ItemIndex> out;
  out.reserve(targets.size());
  for (const auto& e : targets) out.push_back(e.item);
  std::sort(out.begin(), out.end());
  return out;
}

UserPartition partition_users(const std::vector<UserIndex>& users,
                              double train, double validation, double test,
                              std::uint64_t seed) {
  if (train < 0 || validation < 0 || test < 0 ||
      std::abs(train + validation + test - 1.0) > 1e-9) {
    throw ContractError("user fractions must be nonnegative and sum to 1");
  }
  const auto sizes =
      largest_remainder(users.size(), {train, validation, test});
  if (sizes[0] == 0 || sizes[1] == 0 || sizes[2] == 0) {
    throw ContractError("user fractions leave a partition empty");
  }
  const auto order = shuffled(users, seed);
  UserPartition p;
  p.train.assign(order.begin(), order.begin() + sizes[0]);
  p.validation.assign(order.begin() + sizes[0],
                      order.begin() + sizes[0] + sizes[1]);
  p.test.assign(order.begin() + sizes[0] + sizes[1], order.end());
  std::sort(p.train.begin(), p.train.end());
  std::sort(p.validation.begin(), p.validation.end());
  std::sort(p.test.begin(), p.test.end());
  return p;
}

std::size_t holdout_count(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ContractError("holdout fraction must lie in (0, 1)");
  }
  if (n < 2) return 0;
  auto k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

HoldoutResult holdout_random(const std::vector<UserEvents>& users,
                             double fraction, std::uint64_t seed) {
  holdout_count(2, fraction);  // validates the fraction
  HoldoutResult out;
  for (const auto& ue : users) {
    const std::size_t n = ue.events.size();
    const std::size_t k = holdout_count(n, fraction);
    if (!include_user(n, out.excluded, ue.user)) continue;
    // Partial Fisher-Yates: the first k positions become targets.
    std::vector<std::size_t> pos(n);
    std::iota(pos.begin(), pos.end(), 0);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(ue.user)));
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
      std::swap(pos[i], pos[j]);
    }
    std::vector<bool> is_target(n, false);
    for (std::size_t i = 0; i < k; ++i) is_target[pos[i]] = true;
    EvalUser eu{ue.user, {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
      (is_target[i] ? eu.targets : eu.inputs).push_back(ue.events[i]);
    }
    out.users.push_back(std::move(eu));
  }
  return out;
}

HoldoutResult holdout_proportional(const std::vector<UserEvents>& users,
                                   double fraction) {
  holdout_count(2, fraction);  // validates the fraction
  HoldoutResult out;
  for (const auto& ue : users) {
    const std::size_t n = ue.events.size();
    const std::size_t k = holdout_count(n, fraction);
    if (!include_user(n, out.excluded, ue.user)) continue;
    auto events = ue.events;
    std::sort(events.begin(), events.end(), time_order);
    EvalUser eu{ue.user, {}, {}};
    eu.inputs.assign(events.begin(), events.end() - static_cast<long>(k));
    eu.targets.assign(events.end() - static_cast<long>(k), events.end());
    out.users.push_back(std::move(eu));
  }
  return out;
}

HoldoutResult holdout_cutoff(const std::vector<UserEvents>& users,
                             Timestamp cutoff) {
  HoldoutResult out;
  for (const auto& ue : users) {
    EvalUser eu{ue.user, {}, {}};
    for (const auto& e : ue.events) {
      (e.timestamp <= cutoff ? eu.inputs : eu.targets).push_back(e);
    }
    if (eu.inputs.empty()) {
      ++out.excluded.no_input;
      out.excluded.users.push_back(ue.user);
      continue;
    }
    if (eu.targets.empty()) {
      ++out.excluded.no_target;
      out.excluded.users.push_back(ue.user);
      continue;
    }
    std::sort(eu.inputs.begin(), eu.inputs.end(), time_order);
    std::sort(eu.targets.begin(), eu.targets.end(), time_order);
    out.users.push_back(std::move(eu));
  }
  if (out.users.empty()) {
    throw EmptyCorpusError("cutoff at t=" + std::to_string(cutoff) +
                           " leaves no user with both inputs and targets");
  }
  return out;
}

Timestamp cutoff_at_quantile(std::vector<Timestamp> times, double q) {
  if (times.empty()) throw EmptyCorpusError("no interaction times");
  if (!(q > 0.0 && q < 1.0)) {
    throw ContractError("cutoff quantile must lie in (0, 1)");
  }
  std::sort(times.begin(), times.end());
  const double pos = std::ceil(q * static_cast<double>(times.size()) - 1e-9);
  const auto idx = static_cast<std::size_t>(
      std::clamp(pos - 1.0, 0.0, static_cast<double>(times.size() - 1)));
  return times[idx];
}

PhaseSets assemble_phase_sets(const Corpus& corpus, const SplitParams& params) {
  PhaseSets sets;
  const auto users = all_users(corpus);

  if (params.phase == Phase::development &&
      params.test_design == TestDesign::traditional) {
    const auto part = partition_users(users, 0.8, 0.1, 0.1,
                                      derive_seed(params.seed, "partition"));
    const Timestamp val_cutoff =
        params.validation_cutoff_time.value_or(params.cutoff_time.value_or(
            cutoff_at_quantile(all_times(corpus), params.cutoff_quantile)));
    sets.validation =
        make_validation(events_of(corpus, part.validation), params, val_cutoff);
    const auto test_seed = derive_seed(params.seed, "test-holdout");
    auto held = holdout_random(events_of(corpus, part.test),
                               params.holdout_fraction, test_seed);
    EvalSplit test;
    test.phase = params.phase;
    test.protocol = Protocol::traditional;
    test.name = "test_trad";
    test.users = std::move(held.users);
    test.excluded = std::move(held.excluded);
    test.holdout_fraction = params.holdout_fraction;
    test.seed = test_seed;
    sets.test = std::move(test);
    sets.train_users = part.train;
    sets.validation_users = part.validation;
    sets.train = train_matrix(corpus, sets.train_users, std::nullopt);
    return sets;
  }

  sets.validation_users = sample_validation_users(
      users, params.validation_user_fraction,
      derive_seed(params.seed, "validation-users"));
  std::set_difference(users.begin(), users.end(),
                      sets.validation_users.begin(),
                      sets.validation_users.end(),
                      std::back_inserter(sets.train_users));

  if (params.phase == Phase::deployment_ready) {
    const Timestamp val_cutoff =
        params.validation_cutoff_time.value_or(params.cutoff_time.value_or(
            cutoff_at_quantile(all_times(corpus), params.cutoff_quantile)));
    sets.validation = make_validation(
        events_of(corpus, sets.validation_users), params, val_cutoff);
    sets.train = train_matrix(corpus, sets.train_users, std::nullopt);
    return sets;
  }

  // Development phase with a temporal test set: everything after the test
  // cutoff is held out from training and validation alike.
  const Timestamp test_cutoff = params.cutoff_time.value_or(
      cutoff_at_quantile(all_times(corpus), params.cutoff_quantile));
  sets.test_cutoff = test_cutoff;
  const Timestamp val_cutoff = params.validation_cutoff_time.value_or(
      cutoff_at_quantile(all_times(corpus, test_cutoff), params.cutoff_quantile));
  if (val_cutoff >= test_cutoff) {
    throw ContractError("validation cutoff must precede the test cutoff");
  }
  sets.validation = make_validation(
      events_of(corpus, sets.validation_users, test_cutoff), params, val_cutoff);
  sets.train = train_matrix(corpus, sets.train_users, test_cutoff);

  // Test inputs: every pre-cutoff interaction except validation targets.
  std::unordered_set<std::uint64_t> val_targets;
  for (const auto& eu : sets.validation.users) {
    for (const auto& t : eu.targets) {
      val_targets.insert((static_cast<std::uint64_t>(eu.user) << 32) | t.item);
    }
  }
  std::vector<UserEvents> test_sources;
  test_sources.reserve(users.size());
  for (const UserIndex u : users) {
    UserEvents ue{u, {}};
    for (const auto& e : corpus.histories[u]) {
      if (!val_targets.contains((static_cast<std::uint64_t>(u) << 32) | e.item)) {
        ue.events.push_back(e);
      }
    }
    test_sources.push_back(std::move(ue));
  }
  auto held = holdout_cutoff(test_sources, test_cutoff);
  EvalSplit test;
  test.phase = params.phase;
  test.protocol = Protocol::strict_cutoff;
  test.name = "test_temporal";
  test.users = std::move(held.users);
  test.excluded = std::move(held.excluded);
  test.cutoff_time = test_cutoff;
  sets.test = std::move(test);
  return sets;
}

nlohmann::json split_manifest(const EvalSplit& split,
                              const SplitParams& params) {
  nlohmann::json j;
  j["format"] = "temporec-split v1";
  j["name"] = split.name;
  j["protocol"] = to_string(split.protocol);
  j["phase"] = to_string(split.phase);
  j["params"] = {
      {"holdout_fraction", params.holdout_fraction},
      {"validation_user_fraction", params.validation_user_fraction},
      {"cutoff_quantile", params.cutoff_quantile},
      {"test_design", to_string(params.test_design)},
  };
  if (split.cutoff_time) j["cutoff_time"] = *split.cutoff_time;
  if (split.holdout_fraction) j["holdout_fraction"] = *split.holdout_fraction;
  j["seed"] = params.seed;
  j["excluded"] = {{"too_few", split.excluded.too_few},
                   {"no_input", split.excluded.no_input},
                   {"no_target", split.excluded.no_target},
                   {"users", split.excluded.users}};
  auto& users = j["users"] = nlohmann::json::array();
  for (const auto& eu : split.users) {
    users.push_back({{"user", eu.user},
                     {"inputs", eu.input_items()},
                     {"targets", eu.target_items()}});
  }
  return j;
}

}  // namespace temporec
