// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if all pass.

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "radfeed/analysis.hpp"
#include "radfeed/cli.hpp"
#include "radfeed/control.hpp"
#include "radfeed/powerflow.hpp"
#include "radfeed/random.hpp"

using namespace radfeed;
namespace an = radfeed::analysis;

namespace {

constexpr std::uint64_t kSeed = 1;
constexpr std::uint64_t kSuiteTrials = 1000;
constexpr std::uint64_t kChainTrials = 10000;
constexpr std::uint64_t kMonotoneFeeders = 500;
constexpr std::uint64_t kSandwichFeeders = 200;
constexpr std::size_t kSandwichGrid = 11;
constexpr double kStep = 0.01;
constexpr double kStrictMargin = 1e-12;
constexpr double kVoltageDropTol = 1e-12;
constexpr double kOracleTol = 1e-9;
constexpr double kConservationTol = 1e-8;
constexpr double kRelativeTol = 0.10;
constexpr double kSandwichNoise = 1e-12;
constexpr double kSuite1Seconds = 10;
constexpr double kSuite2Seconds = 30;
constexpr double kSandwichSeconds = 120;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Worst conservation error seen by any converged solve in any suite.
double g_worst_balance = 0;
std::size_t g_balance_solves = 0;

void record_balance(double e) {
  g_worst_balance = std::max(g_worst_balance, e);
  ++g_balance_solves;
}

void record_balance(const SolvedState<double>& s, const RadialFeeder<double>& f) {
  record_balance(std::abs(s.total_loss - power_balance_loss(s, f)));
}

int g_failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail) {
  if (!ok) ++g_failures;
  fmt::print("[{}] criterion {}: {} ({})\n", ok ? "PASS" : "FAIL", number, name, detail);
}

struct SuiteTally {
  std::size_t pass = 0, fail = 0, diverged = 0;
  double min_margin = INFINITY;
};

SuiteTally run_suite(an::CaseId id, an::Mode mode, std::uint64_t trials,
                     const std::function<void(const an::TwoBusCase&, const an::CaseVerdict&)>& extra = {}) {
  SuiteTally t;
  an::CertifyOptions opt;
  opt.strict_margin = kStrictMargin;
  for (std::uint64_t k = 0; k < trials; ++k) {
    const auto c = an::random_case(an::trial_seed(kSeed, id, k), an::required_classes(id));
    try {
      const auto v = an::certify_case(c, id, mode, opt);
      if (v.mode == an::Mode::ExactPowerFlow) record_balance(v.balance_error);
      (v.holds ? t.pass : t.fail) += 1;
      t.min_margin = std::min(t.min_margin, v.margin);
      if (extra) extra(c, v);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Diverged) throw;
      ++t.diverged;
    }
  }
  return t;
}

std::string tally_text(const SuiteTally& t) {
  return fmt::format("{} pass, {} fail, {} diverged, min margin {:.3g}", t.pass, t.fail, t.diverged, t.min_margin);
}

void criterion_1() {
  const auto t0 = Clock::now();
  const auto t = run_suite(an::CaseId::BothRecipient_6A, an::Mode::ExactPowerFlow, kSuiteTrials);
  const double secs = seconds_since(t0);
  report(1, "both-recipient ordering, exact power flow",
         t.pass == kSuiteTrials && secs <= kSuite1Seconds, fmt::format("{}, {:.2f} s", tally_text(t), secs));
}

bool same_sign(double a, double b) { return (a > 0) == (b > 0) && (a < 0) == (b < 0); }

bool within(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

/// Mode agreement collected while running suite 2.
struct ModeAgreement {
  std::size_t cases = 0, sign_mismatch = 0, magnitude_mismatch = 0;
  double worst_rel = 0;
};

void criteria_2_and_9() {
  const an::CaseId ids[] = {an::CaseId::MRecipient_12A, an::CaseId::MRecipient_13A, an::CaseId::M1Recipient_15A,
                            an::CaseId::M1Recipient_16A};
  const auto t0 = Clock::now();
  bool all = true;
  std::string detail;
  for (auto id : ids)
    for (auto mode : {an::Mode::ClosedForm, an::Mode::ExactPowerFlow}) {
      const auto t = run_suite(id, mode, kSuiteTrials);
      all = all && t.pass == kSuiteTrials;
      detail += fmt::format("{} {}: {}/{}; ", an::short_tag(id), an::to_string(mode), t.pass, kSuiteTrials);
    }
  const double secs = seconds_since(t0);
  report(2, "mixed-class orderings, closed form and exact", all && secs <= kSuite2Seconds,
         fmt::format("{}{:.2f} s", detail, secs));

  // Pairwise differences among the four losses each verdict reports.
  ModeAgreement agree;
  an::CertifyOptions opt;
  opt.strict_margin = kStrictMargin;
  for (auto id : ids)
    for (std::uint64_t k = 0; k < kSuiteTrials; ++k) {
      const auto c = an::random_case(an::trial_seed(kSeed, id, k), an::required_classes(id));
      const auto a = an::certify_case(c, id, an::Mode::ClosedForm, opt);
      const auto b = an::certify_case(c, id, an::Mode::ExactPowerFlow, opt);
      const double la[] = {a.loss_left, a.loss_right, a.loss_no_action, a.loss_heuristic};
      const double lb[] = {b.loss_left, b.loss_right, b.loss_no_action, b.loss_heuristic};
      ++agree.cases;
      for (int i = 0; i < 4; ++i) {
        if (!within(la[i], lb[i], kRelativeTol)) ++agree.magnitude_mismatch;
        agree.worst_rel = std::max(agree.worst_rel, std::abs(la[i] - lb[i]) / std::max(la[i], lb[i]));
        for (int j = i + 1; j < 4; ++j) {
          const double da = la[i] - la[j], db = lb[i] - lb[j];
          // Equal operands (for example left == heuristic) are identical in both modes.
          if (da == 0 && db == 0) continue;
          if (!same_sign(da, db)) ++agree.sign_mismatch;
          if (!within(da, db, kRelativeTol)) ++agree.magnitude_mismatch;
          agree.worst_rel = std::max(agree.worst_rel, std::abs(da - db) / std::max(std::abs(da), std::abs(db)));
        }
      }
    }
  report(9, "closed form and exact power flow agree on loss orderings",
         agree.sign_mismatch == 0 && agree.magnitude_mismatch == 0,
         fmt::format("{} cases, {} sign mismatches, {} outside 10%, worst relative gap {:.3g}", agree.cases,
                     agree.sign_mismatch, agree.magnitude_mismatch, agree.worst_rel));
}

void criterion_3() {
  const auto id = an::CaseId::BothSender_MainPaper;
  std::size_t unloaded = 0;
  const auto t = run_suite(id, an::Mode::ExactPowerFlow, kSuiteTrials,
                           [&](const an::TwoBusCase& c, const an::CaseVerdict&) {
                             unloaded += !(c.q_load_m > 0 || c.q_load_m1 > 0);
                           });
  report(3, "both-sender heuristic beats no action", t.fail == 0 && t.pass > 0 && unloaded == 0,
         fmt::format("{}, {} without reactive load", tally_text(t), unloaded));
}

void criterion_4() {
  std::size_t agree = 0, disagree = 0, holds = 0;
  an::CertifyOptions opt;
  opt.strict_margin = kStrictMargin;
  const auto id = an::CaseId::FirstComponent_10A;
  for (std::uint64_t k = 0; k < kChainTrials; ++k) {
    const auto c = an::random_case(an::trial_seed(kSeed, id, k), an::required_classes(id));
    const auto v = an::certify_case(c, id, an::Mode::ExactPowerFlow, opt);
    record_balance(v.balance_error);
    (v.forms && v.forms->agree() ? agree : disagree) += 1;
    holds += v.holds;
  }
  report(4, "three forms of the first-component inequality agree", disagree == 0,
         fmt::format("{} inputs, {} disagreements, {} hold", kChainTrials, disagree, holds));
}

void criterion_5() {
  an::RandomFeederOptions opt;  // 3-8 buses, r,x in [0.005, 0.05], loads in [0, 0.2]
  opt.max_controllable = opt.max_buses - 1;
  std::size_t steps = 0, violations = 0, skipped = 0;
  double worst_drop = 0;
  for (std::uint64_t k = 0; k < kMonotoneFeeders; ++k) {
    const auto f = an::random_feeder(an::trial_seed(kSeed + 5, an::CaseId::VoltageOrder_7A, k), opt);
    UniformSource rng(k);
    std::map<BusId, double> base;
    for (BusId id : f.controllable_buses()) base[id] = rng.uniform(0, f.bus(id).q_max);
    const SetpointProfile<double> p0(base);
    SolvedState<double> s0;
    try {
      s0 = solve(f, p0);
    } catch (const Error&) {
      ++skipped;
      continue;
    }
    record_balance(s0, f);
    for (BusId id : f.controllable_buses()) {
      const double q_max = f.bus(id).q_max;
      if (q_max < kStep) continue;
      auto lower = base;
      lower[id] = std::min(base[id], q_max - kStep);
      auto raised = lower;
      raised[id] += kStep;
      try {
        const auto lo = solve(f, SetpointProfile<double>(lower));
        const auto hi = solve(f, SetpointProfile<double>(raised));
        record_balance(lo, f);
        record_balance(hi, f);
        ++steps;
        for (std::size_t i = 0; i < f.size(); ++i) {
          const double drop = lo.voltage_magnitude(i) - hi.voltage_magnitude(i);
          worst_drop = std::max(worst_drop, drop);
          if (drop > kVoltageDropTol) ++violations;
        }
      } catch (const Error&) {
        ++skipped;
      }
    }
  }
  report(5, "raising one setpoint never lowers a voltage magnitude", violations == 0 && steps > 0,
         fmt::format("{} feeders, {} steps, {} violations, {} skipped, worst drop {:.3g}", kMonotoneFeeders, steps,
                     violations, skipped, worst_drop));
}

void criterion_7() {
  const auto t0 = Clock::now();
  an::RandomFeederOptions opt;
  opt.max_controllable = 4;
  std::size_t ok = 0, bad = 0, solves = 0;
  double worst_gap = -INFINITY;
  for (std::uint64_t k = 0; k < kSandwichFeeders; ++k) {
    const auto f = an::random_feeder(an::trial_seed(kSeed + 7, an::CaseId::BothSender_MainPaper, k), opt);
    const auto heur_profile = apply_heuristic(f);
    const auto heur = solve(f, heur_profile);
    const auto none = solve(f, apply_no_action(f));
    record_balance(heur, f);
    record_balance(none, f);
    const auto best = an::brute_force_best(f, kSandwichGrid);
    solves += best.evaluated;

    // Grid slack: what snapping the heuristic onto the grid costs.
    std::map<BusId, double> snapped;
    for (const auto& [id, q] : heur_profile.entries()) {
      const double q_max = f.bus(id).q_max;
      const double k_near = std::round(q / q_max * double(kSandwichGrid - 1));
      snapped[id] = k_near == double(kSandwichGrid - 1) ? q_max : std::min(q_max, q_max * k_near / double(kSandwichGrid - 1));
    }
    const auto snap = solve(f, SetpointProfile<double>(snapped));
    const double slack = std::max(0.0, snap.total_loss - heur.total_loss) + kSandwichNoise;

    const bool lower = best.loss <= heur.total_loss + slack;
    const bool upper = heur.total_loss <= none.total_loss + kSandwichNoise;
    (lower && upper ? ok : bad) += 1;
    worst_gap = std::max(worst_gap, heur.total_loss - best.loss);
  }
  const double secs = seconds_since(t0);
  report(7, "grid optimum <= heuristic <= no action", bad == 0 && secs <= kSandwichSeconds,
         fmt::format("{} feeders, {} violations, {} grid solves, worst heuristic excess {:.3g}, {:.2f} s",
                     kSandwichFeeders, bad, solves, worst_gap, secs));
}

void criterion_8() {
  const std::vector<std::string> args = {"radfeed", "verify", "--cases", "all", "--trials", "100", "--seed", "1"};
  std::ostringstream out1, err1, out2, err2;
  const int c1 = cli::run(args, out1, err1);
  const int c2 = cli::run(args, out2, err2);
  const bool same = out1.str() == out2.str() && err1.str() == err2.str() && c1 == c2;
  report(8, "verify reports are byte-identical across runs", same && c1 == cli::kOk,
         fmt::format("{} bytes, exit {}", out1.str().size(), c1));
}

void criterion_6() {
  std::size_t cases = 0;
  double worst = 0;
  UniformSource rng(kSeed);
  for (; cases < 2000; ++cases) {
    const double r = rng.uniform(0.001, 0.05), x = rng.uniform(0, 0.05);
    const double p = rng.uniform(-0.2, 0.5), q = rng.uniform(-0.2, 0.5);
    const auto f = test::two_bus(r, x, p, q);
    const auto s = solve(f, SetpointProfile<double>{});
    record_balance(s, f);
    const auto v = oracle::two_bus_voltage(r, x, p, q);
    worst = std::max(worst, std::abs(s.voltage_magnitude(1) - *v));
  }
  report(6, "two-bus analytic agreement and loss conservation",
         worst <= kOracleTol && g_worst_balance <= kConservationTol,
         fmt::format("{} two-bus cases, worst |V| error {:.3g}; {} converged solves, worst conservation error {:.3g}",
                     cases, worst, g_balance_solves, g_worst_balance));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  criterion_1();
  criteria_2_and_9();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_7();
  criterion_8();
  criterion_6();  // last, so the conservation bound covers every suite above
  fmt::print("{} criteria failed, {:.1f} s total\n", g_failures, seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
