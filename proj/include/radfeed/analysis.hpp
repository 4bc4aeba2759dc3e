#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "radfeed/feeder.hpp"
#include "radfeed/powerflow.hpp"

namespace radfeed::analysis {

/// Two controllable nodes m-1 (upstream) and m (downstream, the leaf) behind
/// equal-resistance branches. `c` is net active withdrawal p_load - p_gen.
struct TwoBusCase {
  double r_br = 0.01;
  double c_m = 0;
  double c_m1 = 0;
  double q_load_m = 0;
  double q_load_m1 = 0;
  double q_max_m = 0;
  double q_max_m1 = 0;
  double q0_m = 0;
  double q0_m1 = 0;

  /// Throws InvalidArgument unless r_br > 0, q_max >= 0, 0 <= q0 <= q_max, q0 <= q_load.
  void validate() const;

  bool operator==(const TwoBusCase&) const = default;
};

/// Bus ids of the canonical chain slack(0) -> m-1(1) -> m(2).
inline constexpr BusId kSlackBus = 0;
inline constexpr BusId kUpstreamBus = 1;
inline constexpr BusId kLeafBus = 2;

enum class CaseId {
  BothRecipient_6A,
  MRecipient_12A,
  MRecipient_13A,
  M1Recipient_15A,
  M1Recipient_16A,
  BothSender_MainPaper,
  FirstComponent_10A,
  VoltageOrder_7A,
};

std::string_view to_string(CaseId id);
/// Accepts the enum name or its short tag ("6A", "12A", ..., "sender").
std::optional<CaseId> parse_case_id(std::string_view text);
std::string_view short_tag(CaseId id);
const std::vector<CaseId>& all_case_ids();

enum class Mode { ClosedForm, ExactPowerFlow };
std::string_view to_string(Mode mode);

struct ClassSpec {
  NodeClass m = NodeClass::Recipient;
  NodeClass m1 = NodeClass::Recipient;
};

/// Node classes a case must have for `id` to apply.
ClassSpec required_classes(CaseId id);

/// Classes of nodes m and m-1 in `c`.
ClassSpec classify_case(const TwoBusCase& c);

struct SetpointPair {
  double m = 0;
  double m1 = 0;
};

struct VoltagePair {
  double m = 1;
  double m1 = 1;
};

/// 3-bus chain slack -> m-1 -> m, both branches with resistance r_br and
/// reactance `reactance` (default 0, purely resistive).
RadialFeeder<double> build_canonical_feeder(const TwoBusCase& c,
                                            std::optional<double> reactance = std::nullopt);

/// Setpoint profile placing `s.m` on node m and `s.m1` on node m-1; entries
/// are only emitted for controllable nodes.
SetpointProfile<double> canonical_profile(const TwoBusCase& c, SetpointPair s);

/// r [ 2(c_m^2 + d_m^2)/v_m^2 + 2(c_m c_m1 + d_m d_m1)/(v_m v_m1) + (c_m1^2 + d_m1^2)/v_m1^2 ]
/// with d = setpoint - q_load. Voltages are magnitudes consistent with the setpoints.
double closed_form_loss(const TwoBusCase& c, double setpoint_m, double setpoint_m1, double v_m, double v_m1);

/// Reference setting used in place of a sender's own saturation when comparing
/// against the both-recipient loss: halfway between its baseline and its load,
/// so the node still imports reactive power.
double recipient_reference_setpoint(double q0, double q_load);

/// Loss evaluation of one setpoint pair on the canonical feeder.
struct LossEvaluation {
  double loss = 0;
  VoltagePair voltage;
  std::size_t iterations = 0;
  /// |r sum |I|^2 - power-balance loss| of the underlying exact solve.
  double balance_error = 0;
};

struct CertifyOptions {
  std::optional<double> reactance;  // canonical branch reactance; default 0
  SolverConfig<double> solver{};
  /// Strictness threshold for "holds".
  double strict_margin = 1e-12;
};

LossEvaluation evaluate_case_loss(const TwoBusCase& c, SetpointPair s, Mode mode,
                                  const CertifyOptions& options = {});

struct FirstComponentForms {
  bool form_8a = false;
  bool form_9a = false;
  bool form_10a = false;
  bool agree() const { return form_8a == form_9a && form_9a == form_10a; }
};

struct CaseVerdict {
  CaseId case_id = CaseId::BothRecipient_6A;
  Mode mode = Mode::ExactPowerFlow;
  /// Left and right operands of the inequality as written. Voltage magnitudes
  /// for VoltageOrder_7A, first-component values for FirstComponent_10A.
  double loss_left = 0;
  double loss_right = 0;
  /// Oriented so that a positive value means the inequality holds.
  double margin = 0;
  bool holds = false;
  double loss_no_action = 0;
  double loss_heuristic = 0;
  std::size_t iterations = 0;
  double balance_error = 0;
  std::optional<FirstComponentForms> forms;
};

/// Evaluates the three equivalent forms of the first-component dominance of
/// baseline loss over saturated loss at node m. `holds` requires all forms
/// true and a margin above the strictness threshold.
CaseVerdict check_first_component_dominance(const TwoBusCase& c, VoltagePair baseline,
                                            VoltagePair saturated, double strict_margin = 1e-12);

CaseVerdict certify_case(const TwoBusCase& c, CaseId id, Mode mode, const CertifyOptions& options = {});

struct BruteForceResult {
  SetpointProfile<double> profile;
  double loss = 0;
  std::size_t evaluated = 0;
  std::size_t diverged = 0;
};

inline constexpr std::size_t kMaxBruteForceBuses = 6;
inline constexpr std::size_t kMaxGridPoints = 21;
inline constexpr std::size_t kMaxBruteForceSolves = 1'000'000;

/// Number of solves `brute_force_best` would run; saturates instead of overflowing.
std::size_t brute_force_size(std::size_t controllable, std::size_t grid_points_per_bus);

/// Exhaustive search over {0, q_max/(g-1), ..., q_max} per controllable bus.
/// Ties go to the lexicographically smallest profile. Diverging grid points are
/// skipped; throws Diverged only if all of them diverge.
BruteForceResult brute_force_best(const RadialFeeder<double>& feeder, std::size_t grid_points_per_bus,
                                  const SolverConfig<double>& config = {});

/// Deterministic random case with the requested node classes:
/// r in [0.005, 0.05], c in [0, 0.2], q_load in [0.01, 0.2], q0 = 0.
TwoBusCase random_case(std::uint64_t seed, ClassSpec spec);

/// Seed of trial `trial` of case `id` in a campaign seeded with `seed`.
std::uint64_t trial_seed(std::uint64_t seed, CaseId id, std::uint64_t trial);

struct RandomFeederOptions {
  std::size_t min_buses = 3;
  std::size_t max_buses = 8;
  double r_lo = 0.005, r_hi = 0.05;
  double x_lo = 0.005, x_hi = 0.05;
  double load_lo = 0.0, load_hi = 0.2;
  double q_max_lo = 0.01, q_max_hi = 0.2;
  /// Upper bound on buses with q_max > 0.
  std::size_t max_controllable = 4;
};

/// Random radial feeder: each bus i > 0 hangs off a uniformly drawn earlier bus.
RadialFeeder<double> random_feeder(std::uint64_t seed, const RandomFeederOptions& options = {});

}  // namespace radfeed::analysis
