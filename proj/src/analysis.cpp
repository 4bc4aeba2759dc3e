#include "radfeed/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "radfeed/control.hpp"
#include "radfeed/random.hpp"

namespace radfeed::analysis {

namespace {

struct CaseInfo {
  CaseId id;
  std::string_view name;
  std::string_view tag;
  ClassSpec classes;
};

constexpr std::array<CaseInfo, 8> kCases{{
    {CaseId::BothRecipient_6A, "BothRecipient_6A", "6A", {NodeClass::Recipient, NodeClass::Recipient}},
    {CaseId::MRecipient_12A, "MRecipient_12A", "12A", {NodeClass::Recipient, NodeClass::Sender}},
    {CaseId::MRecipient_13A, "MRecipient_13A", "13A", {NodeClass::Recipient, NodeClass::Sender}},
    {CaseId::M1Recipient_15A, "M1Recipient_15A", "15A", {NodeClass::Sender, NodeClass::Recipient}},
    {CaseId::M1Recipient_16A, "M1Recipient_16A", "16A", {NodeClass::Sender, NodeClass::Recipient}},
    {CaseId::BothSender_MainPaper, "BothSender_MainPaper", "sender", {NodeClass::Sender, NodeClass::Sender}},
    {CaseId::FirstComponent_10A, "FirstComponent_10A", "10A", {NodeClass::Recipient, NodeClass::Recipient}},
    {CaseId::VoltageOrder_7A, "VoltageOrder_7A", "7A", {NodeClass::Recipient, NodeClass::Recipient}},
}};

const CaseInfo& info(CaseId id) {
  for (const auto& c : kCases)
    if (c.id == id) return c;
  throw Error(ErrorCode::InvalidArgument, "unknown case id");
}

NodeClass classify(double q_max, double q_load) {
  Bus<double> b;
  b.parent = 0;
  b.q_max = q_max;
  b.q_load = q_load;
  return classify_node(b);
}

double heuristic_setpoint(double q_max, double q_load) {
  switch (classify(q_max, q_load)) {
    case NodeClass::Recipient: return q_max;
    case NodeClass::Sender: return std::max(q_load, 0.0);
    case NodeClass::Passive: return 0.0;
  }
  return 0.0;
}

SetpointPair baseline_pair(const TwoBusCase& c) { return {c.q0_m, c.q0_m1}; }
SetpointPair saturated_pair(const TwoBusCase& c) { return {c.q_max_m, c.q_max_m1}; }
SetpointPair heuristic_pair(const TwoBusCase& c) {
  return {heuristic_setpoint(c.q_max_m, c.q_load_m), heuristic_setpoint(c.q_max_m1, c.q_load_m1)};
}

struct Comparison {
  SetpointPair left;
  SetpointPair right;
  bool left_greater;
};

Comparison comparison_for(const TwoBusCase& c, CaseId id) {
  const auto heur = heuristic_pair(c);
  const auto base = baseline_pair(c);
  switch (id) {
    case CaseId::BothRecipient_6A: return {base, saturated_pair(c), true};
    case CaseId::MRecipient_12A:
      return {heur, {c.q_max_m, recipient_reference_setpoint(c.q0_m1, c.q_load_m1)}, false};
    case CaseId::MRecipient_13A: return {heur, base, false};
    case CaseId::M1Recipient_15A:
      return {heur, {recipient_reference_setpoint(c.q0_m, c.q_load_m), c.q_max_m1}, false};
    case CaseId::M1Recipient_16A: return {heur, base, false};
    case CaseId::BothSender_MainPaper: return {heur, base, false};
    default: break;
  }
  throw Error(ErrorCode::InvalidArgument, "case id is not a loss comparison");
}

}  // namespace

void TwoBusCase::validate() const {
  const std::array values{r_br, c_m, c_m1, q_load_m, q_load_m1, q_max_m, q_max_m1, q0_m, q0_m1};
  if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); }))
    throw Error(ErrorCode::InvalidArgument, "two-bus case has a non-finite field");
  if (!(r_br > 0)) throw Error(ErrorCode::InvalidArgument, "r_br must be positive");
  if (q_max_m < 0 || q_max_m1 < 0) throw Error(ErrorCode::InvalidArgument, "q_max must be >= 0");
  if (q0_m < 0 || q0_m1 < 0 || q0_m > q_max_m || q0_m1 > q_max_m1)
    throw Error(ErrorCode::InvalidArgument, "baseline must lie in [0, q_max]");
  if (q0_m > q_load_m || q0_m1 > q_load_m1)
    throw Error(ErrorCode::InvalidArgument, "baseline must not exceed q_load");
}

std::string_view to_string(CaseId id) { return info(id).name; }
std::string_view short_tag(CaseId id) { return info(id).tag; }

std::optional<CaseId> parse_case_id(std::string_view text) {
  for (const auto& c : kCases)
    if (text == c.name || text == c.tag) return c.id;
  return std::nullopt;
}

const std::vector<CaseId>& all_case_ids() {
  static const std::vector<CaseId> ids = [] {
    std::vector<CaseId> out;
    for (const auto& c : kCases) out.push_back(c.id);
    return out;
  }();
  return ids;
}

std::string_view to_string(Mode mode) { return mode == Mode::ClosedForm ? "closed" : "exact"; }

ClassSpec required_classes(CaseId id) { return info(id).classes; }

ClassSpec classify_case(const TwoBusCase& c) {
  return {classify(c.q_max_m, c.q_load_m), classify(c.q_max_m1, c.q_load_m1)};
}

RadialFeeder<double> build_canonical_feeder(const TwoBusCase& c, std::optional<double> reactance) {
  c.validate();
  const double x = reactance.value_or(0.0);
  FeederDraft<double> draft;
  draft.buses.resize(3);
  draft.buses[kSlackBus].id = kSlackBus;

  auto& up = draft.buses[kUpstreamBus];
  up.id = kUpstreamBus;
  up.parent = kSlackBus;
  up.branch_r = c.r_br;
  up.branch_x = x;
  up.p_load = c.c_m1;
  up.q_load = c.q_load_m1;
  up.q_max = c.q_max_m1;

  auto& leaf = draft.buses[kLeafBus];
  leaf.id = kLeafBus;
  leaf.parent = kUpstreamBus;
  leaf.branch_r = c.r_br;
  leaf.branch_x = x;
  leaf.p_load = c.c_m;
  leaf.q_load = c.q_load_m;
  leaf.q_max = c.q_max_m;

  return validate_feeder(std::move(draft));
}

SetpointProfile<double> canonical_profile(const TwoBusCase& c, SetpointPair s) {
  std::map<BusId, double> q;
  if (c.q_max_m > 0) q[kLeafBus] = s.m;
  else if (s.m != 0) throw Error(ErrorCode::SetpointOutOfRange, "node m has no capability", kLeafBus);
  if (c.q_max_m1 > 0) q[kUpstreamBus] = s.m1;
  else if (s.m1 != 0) throw Error(ErrorCode::SetpointOutOfRange, "node m-1 has no capability", kUpstreamBus);
  return SetpointProfile<double>(std::move(q));
}

double closed_form_loss(const TwoBusCase& c, double setpoint_m, double setpoint_m1, double v_m, double v_m1) {
  if (!(v_m > 0) || !(v_m1 > 0)) throw Error(ErrorCode::NonpositiveVoltage, "voltage magnitudes must be positive");
  const double d_m = setpoint_m - c.q_load_m;
  const double d_m1 = setpoint_m1 - c.q_load_m1;
  const double leaf = 2.0 * (c.c_m * c.c_m + d_m * d_m) / (v_m * v_m);
  const double cross = 2.0 * (c.c_m * c.c_m1 + d_m * d_m1) / (v_m * v_m1);
  const double upstream = (c.c_m1 * c.c_m1 + d_m1 * d_m1) / (v_m1 * v_m1);
  return c.r_br * (leaf + cross + upstream);
}

double recipient_reference_setpoint(double q0, double q_load) { return 0.5 * (q0 + q_load); }

LossEvaluation evaluate_case_loss(const TwoBusCase& c, SetpointPair s, Mode mode, const CertifyOptions& options) {
  const auto feeder = build_canonical_feeder(c, options.reactance);
  const auto state = solve(feeder, canonical_profile(c, s), options.solver);
  LossEvaluation out;
  out.voltage = {state.voltage_magnitude(kLeafBus), state.voltage_magnitude(kUpstreamBus)};
  out.iterations = state.iterations;
  out.balance_error = std::abs(state.total_loss - power_balance_loss(state, feeder));
  out.loss = mode == Mode::ExactPowerFlow ? state.total_loss
                                          : closed_form_loss(c, s.m, s.m1, out.voltage.m, out.voltage.m1);
  return out;
}

CaseVerdict check_first_component_dominance(const TwoBusCase& c, VoltagePair baseline, VoltagePair saturated,
                                            double strict_margin) {
  const double vb = baseline.m;
  const double vs = saturated.m;
  if (!(vb > 0) || !(vs > 0)) throw Error(ErrorCode::NonpositiveVoltage, "voltage magnitudes must be positive");
  if (!(c.q_max_m < c.q_load_m))
    throw Error(ErrorCode::PreconditionViolated, "node m is not a recipient (q_max_m >= q_load_m)", kLeafBus);
  if (c.q0_m > c.q_max_m) throw Error(ErrorCode::PreconditionViolated, "baseline above capability", kLeafBus);
  if (vb > vs)
    throw Error(ErrorCode::PreconditionViolated, "baseline voltage exceeds saturated voltage", kLeafBus);

  const double c2 = c.c_m * c.c_m;
  const double base_q2 = (c.q0_m - c.q_load_m) * (c.q0_m - c.q_load_m);
  const double sat_q2 = (c.q_max_m - c.q_load_m) * (c.q_max_m - c.q_load_m);
  const double vb2 = vb * vb;
  const double vs2 = vs * vs;

  FirstComponentForms forms;
  forms.form_8a = c2 * (vs2 - vb2) > sat_q2 * vb2 - base_q2 * vs2;
  forms.form_9a = vs2 * (c2 + base_q2) > vb2 * (c2 + sat_q2);
  const double lhs = 2.0 * (c2 + base_q2) / vb2;
  const double rhs = 2.0 * (c2 + sat_q2) / vs2;
  forms.form_10a = lhs > rhs;

  CaseVerdict v;
  v.case_id = CaseId::FirstComponent_10A;
  v.mode = Mode::ClosedForm;
  v.loss_left = lhs;
  v.loss_right = rhs;
  v.margin = lhs - rhs;
  v.forms = forms;
  v.holds = forms.agree() && forms.form_10a && v.margin > strict_margin;
  return v;
}

CaseVerdict certify_case(const TwoBusCase& c, CaseId id, Mode mode, const CertifyOptions& options) {
  c.validate();
  const auto need = required_classes(id);
  const auto have = classify_case(c);
  if (need.m != have.m || need.m1 != have.m1)
    throw Error(ErrorCode::ClassMismatch, std::string(to_string(id)) + " requires (m, m-1) = (" +
                                              to_string(need.m) + ", " + to_string(need.m1) + "), case is (" +
                                              to_string(have.m) + ", " + to_string(have.m1) + ")");

  CaseVerdict v;
  v.case_id = id;
  v.mode = mode;

  auto track = [&v](const LossEvaluation& e) {
    v.iterations = std::max(v.iterations, e.iterations);
    v.balance_error = std::max(v.balance_error, e.balance_error);
    return e;
  };

  const auto no_action = track(evaluate_case_loss(c, baseline_pair(c), mode, options));
  const auto heuristic = track(evaluate_case_loss(c, heuristic_pair(c), mode, options));
  v.loss_no_action = no_action.loss;
  v.loss_heuristic = heuristic.loss;

  if (id == CaseId::VoltageOrder_7A || id == CaseId::FirstComponent_10A) {
    // Both-recipient cases: heuristic setpoints are the saturated ones.
    v.mode = Mode::ExactPowerFlow;
    if (id == CaseId::FirstComponent_10A) {
      auto fc = check_first_component_dominance(c, no_action.voltage, heuristic.voltage, options.strict_margin);
      fc.loss_no_action = v.loss_no_action;
      fc.loss_heuristic = v.loss_heuristic;
      fc.iterations = v.iterations;
      fc.balance_error = v.balance_error;
      fc.mode = Mode::ExactPowerFlow;
      return fc;
    }
    v.loss_left = no_action.voltage.m;
    v.loss_right = heuristic.voltage.m;
    v.margin = std::min(heuristic.voltage.m - no_action.voltage.m, heuristic.voltage.m1 - no_action.voltage.m1);
    v.holds = v.margin > options.strict_margin;
    return v;
  }

  const auto cmp = comparison_for(c, id);
  const auto left = track(evaluate_case_loss(c, cmp.left, mode, options));
  const auto right = track(evaluate_case_loss(c, cmp.right, mode, options));
  v.loss_left = left.loss;
  v.loss_right = right.loss;
  v.margin = cmp.left_greater ? left.loss - right.loss : right.loss - left.loss;
  v.holds = v.margin > options.strict_margin;
  return v;
}

std::size_t brute_force_size(std::size_t controllable, std::size_t grid_points_per_bus) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < controllable; ++i) {
    if (grid_points_per_bus != 0 && total > std::numeric_limits<std::size_t>::max() / grid_points_per_bus)
      return std::numeric_limits<std::size_t>::max();
    total *= grid_points_per_bus;
  }
  return total;
}

BruteForceResult brute_force_best(const RadialFeeder<double>& feeder, std::size_t grid_points_per_bus,
                                  const SolverConfig<double>& config) {
  if (grid_points_per_bus < 2)
    throw Error(ErrorCode::InvalidArgument, "grid needs at least 2 points per bus");
  const auto ids = feeder.controllable_buses();
  const std::size_t total = brute_force_size(ids.size(), grid_points_per_bus);
  if (ids.size() > kMaxBruteForceBuses || grid_points_per_bus > kMaxGridPoints || total > kMaxBruteForceSolves)
    throw Error(ErrorCode::TooLarge,
                std::to_string(ids.size()) + " controllable buses x " + std::to_string(grid_points_per_bus) +
                    " grid points = " + std::to_string(total) + " solves (limits: " +
                    std::to_string(kMaxBruteForceBuses) + " buses, " + std::to_string(kMaxGridPoints) +
                    " points, " + std::to_string(kMaxBruteForceSolves) + " solves)",
                std::nullopt, total);

  const double last = static_cast<double>(grid_points_per_bus - 1);
  auto grid_value = [&](BusId id, std::size_t k) {
    const double q_max = feeder.bus(id).q_max;
    if (k + 1 == grid_points_per_bus) return q_max;
    return std::min(q_max, q_max * static_cast<double>(k) / last);
  };

  BruteForceResult best;
  best.loss = std::numeric_limits<double>::infinity();
  bool found = false;
  std::vector<std::size_t> index(ids.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::map<BusId, double> q;
    for (std::size_t i = 0; i < ids.size(); ++i) q[ids[i]] = grid_value(ids[i], index[i]);
    SetpointProfile<double> profile(std::move(q));
    ++best.evaluated;
    try {
      const auto state = solve(feeder, profile, config);
      // Enumeration runs in lexicographic order, so strict improvement keeps the smallest tie.
      if (state.total_loss < best.loss) {
        best.loss = state.total_loss;
        best.profile = std::move(profile);
        found = true;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Diverged) throw;
      ++best.diverged;
    }
    for (std::size_t i = ids.size(); i-- > 0;) {
      if (++index[i] < grid_points_per_bus) break;
      index[i] = 0;
    }
  }
  if (!found) throw Error(ErrorCode::Diverged, "every grid point diverged", std::nullopt, best.diverged);
  return best;
}

TwoBusCase random_case(std::uint64_t seed, ClassSpec spec) {
  UniformSource rng(seed);
  TwoBusCase c;
  c.r_br = rng.uniform(0.005, 0.05);
  c.c_m = rng.uniform(0.0, 0.2);
  c.c_m1 = rng.uniform(0.0, 0.2);
  c.q_load_m = rng.uniform(0.01, 0.2);
  c.q_load_m1 = rng.uniform(0.01, 0.2);
  auto capability = [&rng](NodeClass cls, double q_load) {
    switch (cls) {
      case NodeClass::Recipient: return q_load * rng.uniform(0.05, 0.95);
      case NodeClass::Sender: return q_load * rng.uniform(1.0, 2.0);
      case NodeClass::Passive: return 0.0;
    }
    return 0.0;
  };
  c.q_max_m = capability(spec.m, c.q_load_m);
  c.q_max_m1 = capability(spec.m1, c.q_load_m1);
  c.q0_m = 0;
  c.q0_m1 = 0;
  return c;
}

std::uint64_t trial_seed(std::uint64_t seed, CaseId id, std::uint64_t trial) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ static_cast<std::uint64_t>(id));
  return splitmix64(s ^ trial);
}

}  // namespace radfeed::analysis
