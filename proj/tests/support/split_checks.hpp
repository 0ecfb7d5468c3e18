#pragma once

// Independent checkers for the split invariants: leakage, temporal order,
// conservation. They only look at the corpus and the produced sets.

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "temporec/corpus.hpp"
#include "temporec/protocols.hpp"

namespace temporec::checks {

// Empty string means the invariant holds, otherwise a description.
inline std::string leakage(const PhaseSets& sets) {
  std::vector<const EvalSplit*> splits{&sets.validation};
  if (sets.test) splits.push_back(&*sets.test);
  for (const auto* s : splits) {
    for (const auto& eu : s->users) {
      for (const auto& t : eu.targets) {
        if (sets.train.contains(eu.user, t.item)) {
          return s->name + ": target (" + std::to_string(eu.user) + ", " +
                 std::to_string(t.item) + ") in training matrix";
        }
      }
      for (const auto& t : eu.targets) {
        for (const auto& in : eu.inputs) {
          if (in.item == t.item) return s->name + ": item both input and target";
        }
      }
      if (eu.inputs.empty() || eu.targets.empty()) {
        return s->name + ": evaluated user with an empty side";
      }
    }
  }
  return {};
}

inline std::string temporal_order(const EvalSplit& split) {
  if (split.protocol == Protocol::traditional) return {};
  for (const auto& eu : split.users) {
    Timestamp max_in = eu.inputs.front().timestamp;
    for (const auto& e : eu.inputs) max_in = std::max(max_in, e.timestamp);
    Timestamp min_t = eu.targets.front().timestamp;
    for (const auto& e : eu.targets) min_t = std::min(min_t, e.timestamp);
    if (max_in > min_t) return split.name + ": input after a target";
    if (split.protocol == Protocol::strict_cutoff) {
      if (!split.cutoff_time) return split.name + ": cutoff missing";
      if (min_t <= *split.cutoff_time) return split.name + ": target before cutoff";
      if (max_in > *split.cutoff_time) return split.name + ": input after cutoff";
    }
  }
  return {};
}

// `source` maps every user of the split's population to the interactions
// the split was built from. Each evaluated user's inputs and targets must
// partition their source exactly; every other population user must be
// reported as excluded.
inline std::string conservation(
    const EvalSplit& split,
    const std::map<UserIndex, std::multiset<std::pair<ItemIndex, Timestamp>>>& source) {
  std::set<UserIndex> covered;
  for (const auto& eu : split.users) {
    if (!covered.insert(eu.user).second) return split.name + ": user listed twice";
    std::multiset<std::pair<ItemIndex, Timestamp>> seen;
    for (const auto& e : eu.inputs) seen.insert({e.item, e.timestamp});
    for (const auto& e : eu.targets) seen.insert({e.item, e.timestamp});
    const auto it = source.find(eu.user);
    if (it == source.end() || it->second != seen) {
      return split.name + ": user " + std::to_string(eu.user) +
             " inputs + targets differ from the source interactions";
    }
  }
  for (const UserIndex u : split.excluded.users) {
    if (!covered.insert(u).second) return split.name + ": user both kept and excluded";
    if (!source.count(u)) return split.name + ": excluded user outside the population";
  }
  if (split.excluded.users.size() != split.excluded.total()) {
    return split.name + ": exclusion tallies disagree with the excluded list";
  }
  for (const auto& [u, events] : source) {
    if (!covered.count(u)) {
      return split.name + ": user " + std::to_string(u) + " silently dropped";
    }
  }
  return {};
}

}  // namespace temporec::checks
