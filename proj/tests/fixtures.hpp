#pragma once

#include <optional>
#include <vector>

#include "radfeed/feeder.hpp"

namespace radfeed::test {

inline Bus<double> slack_bus(BusId id = 0) {
  Bus<double> b;
  b.id = id;
  return b;
}

inline Bus<double> load_bus(BusId id, BusId parent, double r, double x, double p_load = 0, double q_load = 0,
                            double q_max = 0, double p_gen = 0) {
  Bus<double> b;
  b.id = id;
  b.parent = parent;
  b.branch_r = r;
  b.branch_x = x;
  b.p_load = p_load;
  b.q_load = q_load;
  b.q_max = q_max;
  b.p_gen = p_gen;
  return b;
}

inline RadialFeeder<double> make_feeder(std::vector<Bus<double>> buses) {
  return validate_feeder(FeederDraft<double>{std::move(buses), {1.0, 0.0}});
}

/// Slack plus one load bus.
inline RadialFeeder<double> two_bus(double r, double x, double p, double q, double q_max = 0) {
  return make_feeder({slack_bus(), load_bus(1, 0, r, x, p, q, q_max)});
}

}  // namespace radfeed::test
