#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radfeed/error.hpp"

namespace radfeed {

/// Per-unit complex quantity (injection, current, voltage, impedance).
template <typename Scalar>
using Complex = std::complex<Scalar>;

template <typename Scalar>
bool is_finite(const Complex<Scalar>& z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

/// One node of a radial feeder. Branch fields describe the line to `parent`
/// and are meaningless on the slack bus.
template <typename Scalar>
struct Bus {
  BusId id = 0;
  std::optional<BusId> parent;
  Scalar p_load = 0;
  Scalar q_load = 0;
  Scalar p_gen = 0;
  Scalar q_max = 0;
  Scalar branch_r = 0;
  Scalar branch_x = 0;

  bool is_slack() const { return !parent.has_value(); }
  bool is_controllable() const { return !is_slack() && q_max > 0; }
  Complex<Scalar> branch_impedance() const { return {branch_r, branch_x}; }

  bool operator==(const Bus&) const = default;
};

enum class NodeClass { Passive, Sender, Recipient };

constexpr const char* to_string(NodeClass c) {
  switch (c) {
    case NodeClass::Passive: return "Passive";
    case NodeClass::Sender: return "Sender";
    case NodeClass::Recipient: return "Recipient";
  }
  return "Unknown";
}

/// Recipient iff 0 < q_max < q_load. A bus that can exactly cover its load
/// is a sender.
template <typename Scalar>
NodeClass classify_node(const Bus<Scalar>& bus) {
  if (!(bus.q_max > 0)) return NodeClass::Passive;
  return bus.q_max < bus.q_load ? NodeClass::Recipient : NodeClass::Sender;
}

/// Unvalidated input to `validate_feeder`.
template <typename Scalar>
struct FeederDraft {
  std::vector<Bus<Scalar>> buses;
  Complex<Scalar> slack_voltage{1, 0};
};

template <typename Scalar>
class RadialFeeder;

template <typename Scalar>
RadialFeeder<Scalar> validate_feeder(FeederDraft<Scalar> draft);

/// Validated rooted tree. Buses are indexed by id; `order()` lists every bus
/// with parents before children. Immutable once constructed.
template <typename Scalar>
class RadialFeeder {
 public:
  std::size_t size() const { return buses_.size(); }
  std::size_t branch_count() const { return buses_.size() - 1; }
  const Bus<Scalar>& bus(BusId id) const { return buses_.at(id); }
  std::span<const Bus<Scalar>> buses() const { return buses_; }
  BusId slack() const { return slack_; }
  const Complex<Scalar>& slack_voltage() const { return slack_voltage_; }
  std::span<const BusId> order() const { return order_; }
  std::span<const BusId> children(BusId id) const { return children_.at(id); }

  std::vector<BusId> controllable_buses() const {
    std::vector<BusId> ids;
    for (const auto& b : buses_)
      if (b.is_controllable()) ids.push_back(b.id);
    return ids;
  }

  FeederDraft<Scalar> draft() const { return {buses_, slack_voltage_}; }

  bool operator==(const RadialFeeder&) const = default;

 private:
  friend RadialFeeder validate_feeder<Scalar>(FeederDraft<Scalar>);
  RadialFeeder() = default;

  std::vector<Bus<Scalar>> buses_;
  Complex<Scalar> slack_voltage_{1, 0};
  BusId slack_ = 0;
  std::vector<BusId> order_;
  std::vector<std::vector<BusId>> children_;
};

namespace detail {

template <typename Scalar>
void check_finite(const Bus<Scalar>& b) {
  for (Scalar v : {b.p_load, b.q_load, b.p_gen, b.q_max, b.branch_r, b.branch_x})
    if (!std::isfinite(v))
      throw Error(ErrorCode::NonFiniteValue, "bus field is not finite", b.id);
}

}  // namespace detail

template <typename Scalar>
RadialFeeder<Scalar> validate_feeder(FeederDraft<Scalar> draft) {
  const std::size_t n = draft.buses.size();
  if (n == 0) throw Error(ErrorCode::MissingSlack, "feeder has no buses");
  if (!is_finite(draft.slack_voltage) || std::abs(draft.slack_voltage) == Scalar(0))
    throw Error(ErrorCode::NonFiniteValue, "slack voltage must be finite and nonzero");

  for (const auto& b : draft.buses) detail::check_finite(b);

  std::vector<const Bus<Scalar>*> by_id(n, nullptr);
  for (const auto& b : draft.buses) {
    if (b.id >= n)
      throw Error(ErrorCode::NonDenseId, "ids must cover 0.." + std::to_string(n - 1), b.id);
    if (by_id[b.id]) throw Error(ErrorCode::DuplicateId, "", b.id);
    by_id[b.id] = &b;
  }

  std::optional<BusId> slack;
  for (const auto* b : by_id) {
    if (!b->is_slack()) continue;
    if (slack) throw Error(ErrorCode::MultipleSlack, "second bus without parent", b->id);
    slack = b->id;
  }
  if (!slack) throw Error(ErrorCode::MissingSlack, "no bus without parent");

  for (const auto* b : by_id) {
    if (b->is_slack()) continue;
    if (*b->parent == b->id) throw Error(ErrorCode::CycleDetected, "bus is its own parent", b->id);
    if (*b->parent >= n) throw Error(ErrorCode::DisconnectedBus, "parent not in feeder", b->id);
  }

  // 0 = unvisited, 1 = on current walk, 2 = reaches slack
  std::vector<int> state(n, 0);
  state[*slack] = 2;
  std::vector<BusId> walk;
  for (BusId start = 0; start < n; ++start) {
    walk.clear();
    BusId cur = start;
    while (state[cur] == 0) {
      state[cur] = 1;
      walk.push_back(cur);
      cur = *by_id[cur]->parent;
    }
    if (state[cur] == 1) {
      auto first = std::find(walk.begin(), walk.end(), cur);
      throw Error(ErrorCode::CycleDetected, "parent chain does not reach slack",
                  *std::min_element(first, walk.end()));
    }
    for (BusId id : walk) state[id] = 2;
  }

  RadialFeeder<Scalar> feeder;
  feeder.slack_ = *slack;
  feeder.slack_voltage_ = draft.slack_voltage;
  feeder.buses_.reserve(n);
  for (const auto* b : by_id) {
    Bus<Scalar> bus = *b;
    if (bus.is_slack()) {
      bus = Bus<Scalar>{};
      bus.id = b->id;
    } else {
      if (bus.branch_r < 0 || bus.branch_x < 0)
        throw Error(ErrorCode::NegativeImpedance, "branch r and x must be >= 0", bus.id);
      if (bus.q_max < 0)
        throw Error(ErrorCode::NegativeCapability, "q_max must be >= 0", bus.id);
    }
    feeder.buses_.push_back(bus);
  }

  feeder.children_.assign(n, {});
  for (const auto& b : feeder.buses_)
    if (!b.is_slack()) feeder.children_[*b.parent].push_back(b.id);

  feeder.order_.reserve(n);
  feeder.order_.push_back(*slack);
  for (std::size_t head = 0; head < feeder.order_.size(); ++head)
    for (BusId child : feeder.children_[feeder.order_[head]]) feeder.order_.push_back(child);

  return feeder;
}

/// Re-validation of an already validated feeder yields an identical feeder.
template <typename Scalar>
RadialFeeder<Scalar> validate_feeder(const RadialFeeder<Scalar>& feeder) {
  return validate_feeder(feeder.draft());
}

/// Reactive generation per controllable bus.
template <typename Scalar>
class SetpointProfile {
 public:
  SetpointProfile() = default;
  explicit SetpointProfile(std::map<BusId, Scalar> q_gen) : q_gen_(std::move(q_gen)) {}

  const std::map<BusId, Scalar>& entries() const { return q_gen_; }
  std::size_t size() const { return q_gen_.size(); }
  bool contains(BusId id) const { return q_gen_.count(id) != 0; }
  Scalar at(BusId id) const { return q_gen_.at(id); }

  /// Setpoint of `id`, zero for buses without an entry.
  Scalar q_gen(BusId id) const {
    auto it = q_gen_.find(id);
    return it == q_gen_.end() ? Scalar(0) : it->second;
  }

  bool operator==(const SetpointProfile&) const = default;
  auto operator<=>(const SetpointProfile&) const = default;

 private:
  std::map<BusId, Scalar> q_gen_;
};

/// Checks that `profile` has exactly one in-range entry per controllable bus.
template <typename Scalar>
void validate_profile(const RadialFeeder<Scalar>& feeder, const SetpointProfile<Scalar>& profile) {
  const auto ids = feeder.controllable_buses();
  if (profile.size() != ids.size())
    throw Error(ErrorCode::ProfileFeederMismatch,
                "profile has " + std::to_string(profile.size()) + " entries, feeder has " +
                    std::to_string(ids.size()) + " controllable buses");
  for (BusId id : ids)
    if (!profile.contains(id))
      throw Error(ErrorCode::ProfileFeederMismatch, "no setpoint for controllable bus", id);
  for (const auto& [id, q] : profile.entries()) {
    const auto& b = feeder.bus(id);
    if (!std::isfinite(q) || q < 0 || q > b.q_max)
      throw Error(ErrorCode::SetpointOutOfRange, "setpoint outside [0, q_max]", id);
  }
}

}  // namespace radfeed
