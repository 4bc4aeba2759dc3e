#pragma once

#include <algorithm>
#include <map>
#include <variant>

#include "radfeed/feeder.hpp"

namespace radfeed {

/// Holds every controllable inverter at a fixed baseline output (default zero).
/// Buses absent from `baseline` use zero.
template <typename Scalar>
SetpointProfile<Scalar> apply_no_action(const RadialFeeder<Scalar>& feeder,
                                        const std::map<BusId, Scalar>& baseline = {}) {
  std::map<BusId, Scalar> q_gen;
  for (BusId id : feeder.controllable_buses()) {
    auto it = baseline.find(id);
    q_gen[id] = it == baseline.end() ? Scalar(0) : it->second;
  }
  for (const auto& [id, q] : baseline)
    if (!q_gen.count(id) && q != Scalar(0))
      throw Error(ErrorCode::SetpointOutOfRange, "baseline on a bus without inverter capability", id);
  SetpointProfile<Scalar> profile(std::move(q_gen));
  validate_profile(feeder, profile);
  return profile;
}

/// Local compensation: recipients saturate at q_max, senders cover their own
/// reactive load. Both reduce to min(q_load, q_max), clamped at zero.
template <typename Scalar>
SetpointProfile<Scalar> apply_heuristic(const RadialFeeder<Scalar>& feeder) {
  std::map<BusId, Scalar> q_gen;
  for (BusId id : feeder.controllable_buses()) {
    const auto& bus = feeder.bus(id);
    switch (classify_node(bus)) {
      case NodeClass::Recipient: q_gen[id] = bus.q_max; break;
      case NodeClass::Sender: q_gen[id] = std::max(bus.q_load, Scalar(0)); break;
      case NodeClass::Passive: break;
    }
  }
  return SetpointProfile<Scalar>(std::move(q_gen));
}

struct NoActionPolicy {};
struct HeuristicPolicy {};
template <typename Scalar>
struct FixedPolicy {
  SetpointProfile<Scalar> profile;
};

template <typename Scalar>
using Policy = std::variant<NoActionPolicy, HeuristicPolicy, FixedPolicy<Scalar>>;

template <typename Scalar>
SetpointProfile<Scalar> apply_policy(const RadialFeeder<Scalar>& feeder, const Policy<Scalar>& policy) {
  if (std::holds_alternative<NoActionPolicy>(policy)) return apply_no_action(feeder);
  if (std::holds_alternative<HeuristicPolicy>(policy)) return apply_heuristic(feeder);
  const auto& fixed = std::get<FixedPolicy<Scalar>>(policy);
  validate_profile(feeder, fixed.profile);
  return fixed.profile;
}

}  // namespace radfeed
