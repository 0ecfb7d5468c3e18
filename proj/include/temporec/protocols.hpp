#pragma once

// Train/validation/test construction under random and temporal holdout.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "temporec/corpus.hpp"

namespace temporec {

enum class Protocol { traditional, proportional, strict_cutoff };
enum class Phase { development, deployment_ready };
// How the development-phase test set is built: a temporal holdout over all
// users after the global cutoff, or an 80/10/10 user partition with random
// holdout on the test users.
enum class TestDesign { temporal, traditional };

std::string_view to_string(Protocol p);
std::string_view to_string(Phase p);
std::string_view to_string(TestDesign d);
Protocol parse_protocol(std::string_view s);  // accepts "cutoff" as well
Phase parse_phase(std::string_view s);
TestDesign parse_test_design(std::string_view s);

// One user's time-ordered events, the input to every holdout.
struct UserEvents {
  UserIndex user = 0;
  std::vector<TimedItem> events;  // sorted by (timestamp, item)
};

struct EvalUser {
  UserIndex user = 0;
  std::vector<TimedItem> inputs;   // time order
  std::vector<TimedItem> targets;  // time order

  std::vector<ItemIndex> input_items() const;
  std::vector<ItemIndex> target_items() const;  // ascending
};

// Users left out of an evaluation set, never dropped silently.
struct Exclusions {
  std::size_t too_few = 0;    // fewer than two interactions
  std::size_t no_input = 0;   // nothing at or before the cutoff
  std::size_t no_target = 0;  // nothing after the cutoff
  std::vector<UserIndex> users;

  std::size_t total() const { return too_few + no_input + no_target; }
};

struct HoldoutResult {
  std::vector<EvalUser> users;
  Exclusions excluded;
};

struct EvalSplit {
  Phase phase = Phase::development;
  Protocol protocol = Protocol::traditional;
  std::string name;  // e.g. "val_cutoff", "test_temporal"
  std::vector<EvalUser> users;
  Exclusions excluded;
  std::optional<Timestamp> cutoff_time;
  std::optional<double> holdout_fraction;
  std::uint64_t seed = 0;
};

struct UserPartition {
  std::vector<UserIndex> train;
  std::vector<UserIndex> validation;
  std::vector<UserIndex> test;
};

// Shuffles the users with `seed` and cuts them into three groups whose sizes
// follow the fractions under largest-remainder rounding. Throws
// ContractError when the fractions do not sum to 1 or a group would be empty.
UserPartition partition_users(const std::vector<UserIndex>& users,
                              double train, double validation, double test,
                              std::uint64_t seed);

// Number of targets for a history of n events: ceil(fraction * n), clamped
// so at least one input remains.
std::size_t holdout_count(std::size_t n, double fraction);

HoldoutResult holdout_random(const std::vector<UserEvents>& users,
                             double fraction, std::uint64_t seed);
HoldoutResult holdout_proportional(const std::vector<UserEvents>& users,
                                   double fraction);
// Inputs are events at or before the cutoff, targets those after it.
// Throws EmptyCorpusError if no user has both.
HoldoutResult holdout_cutoff(const std::vector<UserEvents>& users,
                             Timestamp cutoff);

// Timestamp at the q-quantile of the given interaction times, such that
// roughly a (1 - q) share of interactions lies strictly after it.
Timestamp cutoff_at_quantile(std::vector<Timestamp> times, double q);

struct SplitParams {
  Protocol protocol = Protocol::strict_cutoff;
  Phase phase = Phase::development;
  TestDesign test_design = TestDesign::temporal;
  double holdout_fraction = 0.2;
  double validation_user_fraction = 0.05;
  double cutoff_quantile = 0.9;
  std::optional<Timestamp> cutoff_time;             // test cutoff
  std::optional<Timestamp> validation_cutoff_time;  // strict-cutoff validation
  std::uint64_t seed = 0;
};

struct PhaseSets {
  SparseUserItemMatrix train;  // one row per corpus user
  std::vector<UserIndex> train_users;
  EvalSplit validation;
  std::optional<EvalSplit> test;
  std::optional<Timestamp> test_cutoff;
  std::vector<UserIndex> validation_users;
};

PhaseSets assemble_phase_sets(const Corpus& corpus, const SplitParams& params);

// Split manifest: protocol, phase, params, seed, exclusion tallies and the
// per-user item lists.
nlohmann::json split_manifest(const EvalSplit& split,
                              const SplitParams& params);

}  // namespace temporec
