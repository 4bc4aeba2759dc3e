#include "radfeed/feeder_file.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

namespace radfeed {

namespace {

constexpr std::array<std::string_view, 8> kBusFields{"id", "parent", "r", "x", "p_load", "q_load", "p_gen", "q_max"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto start = s.find_first_not_of(" \t\r", pos);
    if (start == std::string_view::npos) break;
    auto end = s.find_first_of(" \t\r", start);
    if (end == std::string_view::npos) end = s.size();
    out.push_back(s.substr(start, end - start));
    pos = end;
  }
  return out;
}

class LineContext {
 public:
  LineContext(const std::string& source, std::size_t line) : source_(source), line_(line) {}

  void set_record(std::size_t record) { record_ = record; }

  [[noreturn]] void fail(const std::string& what) const {
    std::string where = fmt::format("{}:{}", source_, line_);
    if (record_) where += fmt::format(" (bus record {})", *record_);
    throw Error(ErrorCode::ParseError, where + ": " + what);
  }

  double number(std::string_view key, std::string_view text) const {
    double value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) fail(fmt::format("{}: '{}' is not a number", key, text));
    if (!std::isfinite(value)) fail(fmt::format("{}: value must be finite", key));
    return value;
  }

  std::size_t index(std::string_view key, std::string_view text) const {
    std::size_t value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) fail(fmt::format("{}: '{}' is not a non-negative integer", key, text));
    return value;
  }

 private:
  const std::string& source_;
  std::size_t line_;
  std::optional<std::size_t> record_;
};

Bus<double> parse_bus(std::string_view body, const LineContext& ctx) {
  std::array<std::optional<std::string_view>, kBusFields.size()> values;
  for (auto token : split_ws(body)) {
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) ctx.fail(fmt::format("expected key=value, got '{}'", token));
    const auto key = token.substr(0, eq);
    const auto it = std::find(kBusFields.begin(), kBusFields.end(), key);
    if (it == kBusFields.end()) ctx.fail(fmt::format("unknown bus field '{}'", key));
    auto& slot = values[static_cast<std::size_t>(it - kBusFields.begin())];
    if (slot) ctx.fail(fmt::format("duplicate field '{}'", key));
    slot = token.substr(eq + 1);
  }
  for (std::size_t i = 0; i < kBusFields.size(); ++i)
    if (!values[i]) ctx.fail(fmt::format("missing field '{}'", kBusFields[i]));

  Bus<double> bus;
  bus.id = ctx.index("id", *values[0]);
  if (*values[1] != "null") bus.parent = ctx.index("parent", *values[1]);
  bus.branch_r = ctx.number("r", *values[2]);
  bus.branch_x = ctx.number("x", *values[3]);
  bus.p_load = ctx.number("p_load", *values[4]);
  bus.q_load = ctx.number("q_load", *values[5]);
  bus.p_gen = ctx.number("p_gen", *values[6]);
  bus.q_max = ctx.number("q_max", *values[7]);
  return bus;
}

}  // namespace

FeederFile parse_feeder(std::istream& in, const std::string& source) {
  FeederDraft<double> draft;
  double base_mva = 1.0;
  double base_kv = 1.0;
  double slack_mag = 1.0;
  double slack_ang = 0.0;

  std::string raw;
  std::size_t line_no = 0;
  std::size_t record = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    LineContext ctx(source, line_no);
    if (line.substr(0, 4) == "bus " || line == "bus") {
      ctx.set_record(record++);
      draft.buses.push_back(parse_bus(line.substr(3), ctx));
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) ctx.fail(fmt::format("unrecognised line '{}'", line));
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "base_mva") {
      base_mva = ctx.number(key, value);
    } else if (key == "base_kv") {
      base_kv = ctx.number(key, value);
    } else if (key == "slack_voltage") {
      const auto parts = split_ws(value);
      if (parts.size() != 2) ctx.fail("slack_voltage expects '<magnitude> <angle_rad>'");
      slack_mag = ctx.number("slack_voltage magnitude", parts[0]);
      slack_ang = ctx.number("slack_voltage angle", parts[1]);
      if (!(slack_mag > 0)) ctx.fail("slack_voltage magnitude must be positive");
    } else {
      ctx.fail(fmt::format("unknown key '{}'", key));
    }
  }
  if (draft.buses.empty()) throw Error(ErrorCode::ParseError, source + ": no bus records");

  draft.slack_voltage = std::polar(slack_mag, -slack_ang);
  return FeederFile{base_mva, base_kv, slack_mag, slack_ang, validate_feeder(std::move(draft))};
}

FeederFile to_feeder_file(const RadialFeeder<double>& feeder, double base_mva, double base_kv) {
  return FeederFile{base_mva, base_kv, std::abs(feeder.slack_voltage()), -std::arg(feeder.slack_voltage()), feeder};
}

FeederFile read_feeder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  return parse_feeder(in, path.string());
}

void write_feeder(std::ostream& out, const FeederFile& file) {
  const auto& f = file.feeder;
  fmt::print(out, "# radfeed feeder. All quantities per-unit; base_mva and base_kv are informational.\n");
  fmt::print(out, "# slack_voltage = <magnitude> <angle_rad> with V = |V| exp(-j angle)\n");
  fmt::print(out, "base_mva = {}\n", file.base_mva);
  fmt::print(out, "base_kv = {}\n", file.base_kv);
  fmt::print(out, "slack_voltage = {} {}\n", file.slack_magnitude, file.slack_angle);
  for (const auto& b : f.buses()) {
    fmt::print(out, "bus id={} parent={} r={} x={} p_load={} q_load={} p_gen={} q_max={}\n", b.id,
               b.parent ? std::to_string(*b.parent) : std::string("null"), b.branch_r, b.branch_x, b.p_load,
               b.q_load, b.p_gen, b.q_max);
  }
}

}  // namespace radfeed
