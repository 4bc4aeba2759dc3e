#include "radfeed/cli.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <CLI11.hpp>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "radfeed/analysis.hpp"
#include "radfeed/control.hpp"
#include "radfeed/feeder_file.hpp"
#include "radfeed/powerflow.hpp"

namespace radfeed::cli {

namespace {

using json = nlohmann::json;
namespace an = analysis;

struct CommonFlags {
  double tolerance = 1e-10;
  std::string output;
};

struct SolveFlags {
  std::string feeder;
  std::string policy = "heuristic";
  std::string echo;
};

struct VerifyFlags {
  std::vector<std::string> cases{"all"};
  long long trials = 100;
  std::uint64_t seed = 0;
  std::string mode = "both";
};

struct SweepFlags {
  std::string feeder;
  std::size_t grid = 11;
};

/// Thrown for flag combinations CLI11 cannot check by itself.
struct FlagError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) { return fmt::format("{:.15g}", v); }

std::string class_name(const Bus<double>& b) {
  if (b.is_slack()) return "slack";
  switch (classify_node(b)) {
    case NodeClass::Passive: return "passive";
    case NodeClass::Sender: return "sender";
    case NodeClass::Recipient: return "recipient";
  }
  return "unknown";
}

SolverConfig<double> solver_config(const CommonFlags& common) {
  SolverConfig<double> cfg;
  cfg.tolerance = common.tolerance;
  return cfg;
}

void write_json(const std::string& path, const json& doc) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw FlagError("cannot write --output " + path);
  out << doc.dump(2) << '\n';
}

std::string profile_text(const SetpointProfile<double>& p) {
  std::string s;
  for (const auto& [id, q] : p.entries()) s += fmt::format(" q_gen[{}]={}", id, num(q));
  return s.empty() ? " (no controllable buses)" : s;
}

json profile_json(const SetpointProfile<double>& p) {
  json j = json::object();
  for (const auto& [id, q] : p.entries()) j[std::to_string(id)] = q;
  return j;
}

int cmd_solve(const SolveFlags& flags, const CommonFlags& common, std::ostream& out) {
  if (flags.policy != "none" && flags.policy != "heuristic")
    throw FlagError("--policy must be 'none' or 'heuristic'");
  const auto file = read_feeder(flags.feeder);
  const auto& feeder = file.feeder;
  if (!flags.echo.empty()) {
    std::ofstream echo(flags.echo);
    if (!echo) throw FlagError("cannot write --echo " + flags.echo);
    write_feeder(echo, file);
  }

  const auto profile = flags.policy == "none" ? apply_no_action(feeder) : apply_heuristic(feeder);
  const auto state = solve(feeder, profile, solver_config(common));

  fmt::print(out, "# radfeed solve; per-unit; angle_rad is phi with V = |V| exp(-j phi)\n");
  fmt::print(out, "feeder path={} buses={} branches={} base_mva={} base_kv={}\n", flags.feeder, feeder.size(),
             feeder.branch_count(), num(file.base_mva), num(file.base_kv));
  json buses = json::array();
  for (const auto& b : feeder.buses()) {
    const auto k = Eigen::Index(b.id);
    const auto i = state.nodal_currents(k);
    const auto ibr = state.branch_currents(k);
    fmt::print(out, "bus id={} class={} vm={} angle_rad={} q_gen={} i_re={} i_im={} ibr_re={} ibr_im={}\n", b.id,
               class_name(b), num(state.voltage_magnitude(b.id)), num(state.voltage_angle(b.id)),
               num(profile.q_gen(b.id)), num(i.real()), num(i.imag()), num(ibr.real()), num(ibr.imag()));
    buses.push_back({{"id", b.id},
                     {"class", class_name(b)},
                     {"vm", state.voltage_magnitude(b.id)},
                     {"angle_rad", state.voltage_angle(b.id)},
                     {"q_gen", profile.q_gen(b.id)},
                     {"i", {i.real(), i.imag()}},
                     {"ibr", {ibr.real(), ibr.imag()}}});
  }
  fmt::print(out, "summary policy={} loss={} iterations={} residual={}\n", flags.policy, num(state.total_loss),
             state.iterations, num(state.residual));
  write_json(common.output, {{"command", "solve"},
                             {"policy", flags.policy},
                             {"buses", buses},
                             {"loss", state.total_loss},
                             {"iterations", state.iterations},
                             {"residual", state.residual}});
  return kOk;
}

int cmd_compare(const std::string& path, const CommonFlags& common, std::ostream& out) {
  const auto file = read_feeder(path);
  const auto& feeder = file.feeder;
  const auto cfg = solver_config(common);
  const auto none = solve(feeder, apply_no_action(feeder), cfg);
  const auto heur_profile = apply_heuristic(feeder);
  const auto heur = solve(feeder, heur_profile, cfg);
  const double reduction = none.total_loss > 0 ? 100.0 * (none.total_loss - heur.total_loss) / none.total_loss : 0.0;
  const auto controllable = feeder.controllable_buses().size();

  fmt::print(out, "# radfeed compare; per-unit\n");
  fmt::print(out, "compare path={} controllable={} loss_no_action={} loss_heuristic={} reduction_pct={}\n", path,
             controllable, num(none.total_loss), num(heur.total_loss), num(reduction));
  fmt::print(out, "setpoints heuristic{}\n", profile_text(heur_profile));
  if (controllable == 0) fmt::print(out, "note no controllable buses\n");

  // Allow for solver-tolerance noise when the two policies coincide.
  const bool violation = heur.total_loss > none.total_loss + 1e-12;
  if (violation)
    fmt::print(out, "VIOLATION heuristic loss {} exceeds no-action loss {}\n", num(heur.total_loss),
               num(none.total_loss));
  write_json(common.output, {{"command", "compare"},
                             {"loss_no_action", none.total_loss},
                             {"loss_heuristic", heur.total_loss},
                             {"reduction_pct", reduction},
                             {"controllable", controllable},
                             {"heuristic_setpoints", profile_json(heur_profile)},
                             {"violation", violation}});
  return violation ? kInequalityFailed : kOk;
}

std::vector<an::CaseId> selected_cases(const std::vector<std::string>& names) {
  std::vector<an::CaseId> ids;
  for (const auto& raw : names) {
    std::stringstream ss(raw);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (name.empty()) continue;
      if (name == "all") {
        for (auto id : an::all_case_ids())
          if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
        continue;
      }
      const auto id = an::parse_case_id(name);
      if (!id) throw FlagError("unknown case '" + name + "'");
      if (std::find(ids.begin(), ids.end(), *id) == ids.end()) ids.push_back(*id);
    }
  }
  if (ids.empty()) throw FlagError("--cases selects no cases");
  return ids;
}

std::vector<an::Mode> selected_modes(const std::string& mode) {
  if (mode == "closed") return {an::Mode::ClosedForm};
  if (mode == "exact") return {an::Mode::ExactPowerFlow};
  if (mode == "both") return {an::Mode::ClosedForm, an::Mode::ExactPowerFlow};
  throw FlagError("--mode must be closed, exact or both");
}

int cmd_verify(const VerifyFlags& flags, const CommonFlags& common, std::ostream& out) {
  if (flags.trials < 1) throw FlagError("--trials must be >= 1");
  const auto cases = selected_cases(flags.cases);
  const auto modes = selected_modes(flags.mode);
  an::CertifyOptions options;
  options.solver = solver_config(common);

  std::string case_list;
  for (auto id : cases) case_list += (case_list.empty() ? "" : ",") + std::string(an::short_tag(id));
  fmt::print(out, "# radfeed verify; per-unit; margin > 0 means the inequality holds\n");
  fmt::print(out, "campaign cases={} trials={} seed={} mode={} strict_margin={}\n", case_list, flags.trials,
             flags.seed, flags.mode, num(options.strict_margin));

  std::size_t total = 0, passed = 0, failed = 0, diverged = 0;
  json records = json::array();
  for (auto id : cases) {
    // Voltage-order and first-component checks depend only on exact voltages.
    const bool voltage_only = id == an::CaseId::VoltageOrder_7A || id == an::CaseId::FirstComponent_10A;
    const auto case_modes = voltage_only ? std::vector<an::Mode>{an::Mode::ExactPowerFlow} : modes;
    for (long long trial = 0; trial < flags.trials; ++trial) {
      const auto seed = an::trial_seed(flags.seed, id, static_cast<std::uint64_t>(trial));
      const auto tb = an::random_case(seed, an::required_classes(id));
      for (auto mode : case_modes) {
        ++total;
        try {
          const auto v = an::certify_case(tb, id, mode, options);
          (v.holds ? passed : failed)++;
          fmt::print(out,
                     "record case={} mode={} trial={} seed={} loss_no_action={} loss_heuristic={} loss_left={} "
                     "loss_right={} margin={} verdict={} iterations={}\n",
                     an::to_string(id), an::to_string(v.mode), trial, seed, num(v.loss_no_action),
                     num(v.loss_heuristic), num(v.loss_left), num(v.loss_right), num(v.margin),
                     v.holds ? "pass" : "fail", v.iterations);
          records.push_back({{"case", an::to_string(id)},
                             {"mode", an::to_string(v.mode)},
                             {"trial", trial},
                             {"seed", seed},
                             {"loss_no_action", v.loss_no_action},
                             {"loss_heuristic", v.loss_heuristic},
                             {"loss_left", v.loss_left},
                             {"loss_right", v.loss_right},
                             {"margin", v.margin},
                             {"verdict", v.holds ? "pass" : "fail"},
                             {"iterations", v.iterations}});
        } catch (const Error& e) {
          const bool div = e.code() == ErrorCode::Diverged;
          (div ? diverged : failed)++;
          fmt::print(out, "record case={} mode={} trial={} seed={} verdict={} error=\"{}\"\n", an::to_string(id),
                     an::to_string(mode), trial, seed, div ? "diverged" : "fail", e.what());
          records.push_back({{"case", an::to_string(id)},
                             {"mode", an::to_string(mode)},
                             {"trial", trial},
                             {"seed", seed},
                             {"verdict", div ? "diverged" : "fail"},
                             {"error", e.what()}});
        }
      }
    }
  }
  fmt::print(out, "summary total={} pass={} fail={} diverged={}\n", total, passed, failed, diverged);
  write_json(common.output, {{"command", "verify"},
                             {"seed", flags.seed},
                             {"trials", flags.trials},
                             {"mode", flags.mode},
                             {"records", records},
                             {"summary", {{"total", total}, {"pass", passed}, {"fail", failed}, {"diverged", diverged}}}});
  if (diverged > 0) return kDiverged;
  return failed > 0 ? kInequalityFailed : kOk;
}

int cmd_sweep(const SweepFlags& flags, const CommonFlags& common, std::ostream& out) {
  const auto file = read_feeder(flags.feeder);
  const auto& feeder = file.feeder;
  const auto cfg = solver_config(common);
  const auto best = an::brute_force_best(feeder, flags.grid, cfg);
  const auto heur_profile = apply_heuristic(feeder);
  const auto heur = solve(feeder, heur_profile, cfg);
  const auto none = solve(feeder, apply_no_action(feeder), cfg);
  const double gap = heur.total_loss - best.loss;
  const double gap_pct = best.loss > 0 ? 100.0 * gap / best.loss : 0.0;

  fmt::print(out, "# radfeed sweep; per-unit; gap = heuristic loss - best grid loss\n");
  fmt::print(out, "sweep path={} grid={} controllable={} solves={} diverged={}\n", flags.feeder, flags.grid,
             feeder.controllable_buses().size(), best.evaluated, best.diverged);
  fmt::print(out, "best loss={}{}\n", num(best.loss), profile_text(best.profile));
  fmt::print(out, "heuristic loss={}{}\n", num(heur.total_loss), profile_text(heur_profile));
  fmt::print(out, "no_action loss={}\n", num(none.total_loss));
  fmt::print(out, "summary gap={} gap_pct={}\n", num(gap), num(gap_pct));
  write_json(common.output, {{"command", "sweep"},
                             {"grid", flags.grid},
                             {"solves", best.evaluated},
                             {"diverged", best.diverged},
                             {"best", {{"loss", best.loss}, {"setpoints", profile_json(best.profile)}}},
                             {"heuristic", {{"loss", heur.total_loss}, {"setpoints", profile_json(heur_profile)}}},
                             {"no_action", {{"loss", none.total_loss}}},
                             {"gap", gap}});
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Diverged:
    case ErrorCode::ZeroVoltage: return kDiverged;
    case ErrorCode::TooLarge:
    case ErrorCode::InvalidArgument: return kInvalidFlags;
    default: return kParseError;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Radial feeder power flow and inverter reactive-power analysis", "radfeed"};
  app.require_subcommand(1);

  CommonFlags common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--tolerance", common.tolerance, "Voltage residual tolerance (per-unit)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--output", common.output, "Also write a JSON document to this path");
  };

  SolveFlags solve_flags;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one feeder under a policy");
  solve_cmd->add_option("feeder", solve_flags.feeder, "Feeder file")->required();
  solve_cmd->add_option("--policy", solve_flags.policy, "none | heuristic");
  solve_cmd->add_option("--echo", solve_flags.echo, "Write the parsed feeder back out to this path");
  add_common(solve_cmd);

  std::string compare_path;
  auto* compare_cmd = app.add_subcommand("compare", "Compare no-action and heuristic losses");
  compare_cmd->add_option("feeder", compare_path, "Feeder file")->required();
  add_common(compare_cmd);

  VerifyFlags verify_flags;
  auto* verify_cmd = app.add_subcommand("verify", "Certify loss orderings on random two-node cases");
  verify_cmd->add_option("--cases", verify_flags.cases, "Case tags (6A,12A,13A,15A,16A,sender,10A,7A) or all")
      ->delimiter(',');
  verify_cmd->add_option("--trials", verify_flags.trials, "Trials per case");
  verify_cmd->add_option("--seed", verify_flags.seed, "Campaign seed");
  verify_cmd->add_option("--mode", verify_flags.mode, "closed | exact | both");
  add_common(verify_cmd);

  SweepFlags sweep_flags;
  auto* sweep_cmd = app.add_subcommand("sweep", "Brute-force setpoint grid search");
  sweep_cmd->add_option("feeder", sweep_flags.feeder, "Feeder file")->required();
  sweep_cmd->add_option("--grid", sweep_flags.grid, "Grid points per controllable bus");
  add_common(sweep_cmd);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInvalidFlags;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve_flags, common, out);
    if (*compare_cmd) return cmd_compare(compare_path, common, out);
    if (*verify_cmd) return cmd_verify(verify_flags, common, out);
    if (*sweep_cmd) return cmd_sweep(sweep_flags, common, out);
  } catch (const FlagError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kInvalidFlags;
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_code_for(e);
  }
  return kInvalidFlags;
}

}  // namespace radfeed::cli
