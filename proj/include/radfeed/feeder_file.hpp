#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "radfeed/feeder.hpp"

namespace radfeed {

/// Feeder file contents. Bases are carried through for reporting only; every
/// quantity in the file is already per-unit.
struct FeederFile {
  double base_mva = 1.0;
  double base_kv = 1.0;
  /// Slack voltage as written in the file; `feeder.slack_voltage()` is derived from it.
  double slack_magnitude = 1.0;
  double slack_angle = 0.0;
  RadialFeeder<double> feeder;
};

/// Wraps an in-memory feeder for writing; the slack magnitude and angle are
/// recovered from its complex slack voltage.
FeederFile to_feeder_file(const RadialFeeder<double>& feeder, double base_mva = 1.0, double base_kv = 1.0);

/// Line-oriented text format:
///
///   # comment
///   base_mva = 10
///   base_kv = 12.47
///   slack_voltage = 1.0 0.0          # magnitude, angle_rad with V = |V| exp(-j angle)
///   bus id=0 parent=null r=0 x=0 p_load=0 q_load=0 p_gen=0 q_max=0
///   bus id=1 parent=0 r=0.01 x=0.01 p_load=0.1 q_load=0.05 p_gen=0 q_max=0.03
///
/// Every bus record needs all eight fields. Syntax errors throw ParseError naming
/// the line and bus record; topology errors come from `validate_feeder`.
FeederFile parse_feeder(std::istream& in, const std::string& source = "<input>");
FeederFile read_feeder(const std::filesystem::path& path);

/// Writes `file` in the format above; numbers use shortest round-trip form.
void write_feeder(std::ostream& out, const FeederFile& file);

}  // namespace radfeed
