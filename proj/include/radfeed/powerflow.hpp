#pragma once

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "radfeed/error.hpp"
#include "radfeed/feeder.hpp"

namespace radfeed {

template <typename Scalar>
using ComplexVector = Eigen::Matrix<Complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
struct SolverConfig {
  Scalar tolerance = Scalar(1e-10);
  std::size_t max_iterations = 100;

  void validate() const {
    if (!(tolerance > 0) || !std::isfinite(tolerance))
      throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
    if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  }
};

/// Converged operating point. Vectors are indexed by bus id; the slack entry of
/// `nodal_currents` and `branch_currents` is zero (no branch enters the slack).
template <typename Scalar>
struct SolvedState {
  ComplexVector<Scalar> voltages;
  ComplexVector<Scalar> nodal_currents;
  ComplexVector<Scalar> branch_currents;
  Scalar total_loss = 0;
  std::size_t iterations = 0;
  Scalar residual = 0;
  /// Residual of the iteration before the last one; +inf after a single iteration.
  Scalar previous_residual = std::numeric_limits<Scalar>::infinity();

  Scalar voltage_magnitude(BusId id) const { return std::abs(voltages(Eigen::Index(id))); }

  /// Angle phi with V = |V| exp(-j phi).
  Scalar voltage_angle(BusId id) const { return -std::arg(voltages(Eigen::Index(id))); }
};

/// S = (p_load - p_gen) + j (q_load - q_gen), the complex power withdrawn at the bus.
template <typename Scalar>
Complex<Scalar> nodal_injection(const Bus<Scalar>& bus, Scalar q_gen) {
  if (!std::isfinite(q_gen) || q_gen < 0 || q_gen > bus.q_max)
    throw Error(ErrorCode::SetpointOutOfRange, "setpoint outside [0, q_max]", bus.id);
  return {bus.p_load - bus.p_gen, bus.q_load - q_gen};
}

/// I = conj(S / V).
template <typename Scalar>
Complex<Scalar> nodal_current(const Complex<Scalar>& injection, const Complex<Scalar>& voltage) {
  if (!is_finite(voltage) || std::abs(voltage) == Scalar(0))
    throw Error(ErrorCode::ZeroVoltage, "voltage iterate collapsed");
  return std::conj(injection / voltage);
}

/// Backward sweep: branch current into each bus is its nodal current plus the
/// branch currents into its children. Leaves carry only their own current.
template <typename Scalar>
ComplexVector<Scalar> sweep_branch_currents(const ComplexVector<Scalar>& nodal_currents,
                                            const RadialFeeder<Scalar>& feeder) {
  ComplexVector<Scalar> branch = nodal_currents;
  const auto order = feeder.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto& bus = feeder.bus(*it);
    if (bus.is_slack()) {
      branch(Eigen::Index(bus.id)) = Complex<Scalar>(0);
      continue;
    }
    for (BusId child : feeder.children(bus.id))
      branch(Eigen::Index(bus.id)) += branch(Eigen::Index(child));
  }
  return branch;
}

/// Forward sweep: V_child = V_parent - z_branch * I_branch, root to leaves.
template <typename Scalar>
ComplexVector<Scalar> forward_voltage_update(const ComplexVector<Scalar>& branch_currents,
                                             const RadialFeeder<Scalar>& feeder,
                                             const Complex<Scalar>& slack_voltage) {
  ComplexVector<Scalar> voltages(Eigen::Index(feeder.size()));
  for (BusId id : feeder.order()) {
    const auto& bus = feeder.bus(id);
    const auto k = Eigen::Index(id);
    if (bus.is_slack()) {
      voltages(k) = slack_voltage;
    } else {
      voltages(k) = voltages(Eigen::Index(*bus.parent)) - bus.branch_impedance() * branch_currents(k);
    }
  }
  return voltages;
}

/// Sum over branches of r |I_br|^2.
template <typename Scalar>
Scalar total_losses(const ComplexVector<Scalar>& branch_currents, const RadialFeeder<Scalar>& feeder) {
  Scalar loss = 0;
  for (const auto& bus : feeder.buses())
    if (!bus.is_slack()) loss += bus.branch_r * std::norm(branch_currents(Eigen::Index(bus.id)));
  return loss;
}

/// Complex power delivered by the slack into the feeder.
template <typename Scalar>
Complex<Scalar> slack_power(const SolvedState<Scalar>& state, const RadialFeeder<Scalar>& feeder) {
  Complex<Scalar> outflow(0);
  for (BusId child : feeder.children(feeder.slack())) outflow += state.branch_currents(Eigen::Index(child));
  return state.voltages(Eigen::Index(feeder.slack())) * std::conj(outflow);
}

/// Loss implied by active power balance: P_slack + sum p_gen - sum p_load.
template <typename Scalar>
Scalar power_balance_loss(const SolvedState<Scalar>& state, const RadialFeeder<Scalar>& feeder) {
  Scalar net = slack_power(state, feeder).real();
  for (const auto& bus : feeder.buses()) net += bus.p_gen - bus.p_load;
  return net;
}

/// Backward-forward sweep from a flat start. Converged when the largest complex
/// voltage update is within `config.tolerance`.
template <typename Scalar>
SolvedState<Scalar> solve(const RadialFeeder<Scalar>& feeder, const SetpointProfile<Scalar>& setpoints,
                          const SolverConfig<Scalar>& config = {}) {
  config.validate();
  validate_profile(feeder, setpoints);

  const auto n = Eigen::Index(feeder.size());
  ComplexVector<Scalar> injections = ComplexVector<Scalar>::Zero(n);
  for (const auto& bus : feeder.buses())
    if (!bus.is_slack()) injections(Eigen::Index(bus.id)) = nodal_injection(bus, setpoints.q_gen(bus.id));

  SolvedState<Scalar> state;
  state.voltages = ComplexVector<Scalar>::Constant(n, feeder.slack_voltage());
  state.nodal_currents = ComplexVector<Scalar>::Zero(n);

  for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
    try {
      for (const auto& bus : feeder.buses())
        if (!bus.is_slack()) {
          const auto k = Eigen::Index(bus.id);
          state.nodal_currents(k) = nodal_current(injections(k), state.voltages(k));
        }
    } catch (const Error& e) {
      throw Error(ErrorCode::Diverged, e.what(), std::nullopt, iter);
    }
    state.branch_currents = sweep_branch_currents(state.nodal_currents, feeder);
    ComplexVector<Scalar> updated = forward_voltage_update(state.branch_currents, feeder, feeder.slack_voltage());

    const Scalar residual = (updated - state.voltages).cwiseAbs().maxCoeff();
    state.voltages = std::move(updated);
    state.previous_residual = iter == 1 ? std::numeric_limits<Scalar>::infinity() : state.residual;
    state.residual = residual;
    state.iterations = iter;

    if (!std::isfinite(residual))
      throw Error(ErrorCode::Diverged, "non-finite voltage update", std::nullopt, iter);
    if (residual <= config.tolerance) {
      state.total_loss = total_losses(state.branch_currents, feeder);
      return state;
    }
  }
  throw Error(ErrorCode::Diverged,
              "no convergence after " + std::to_string(config.max_iterations) + " iterations",
              std::nullopt, config.max_iterations);
}

}  // namespace radfeed
