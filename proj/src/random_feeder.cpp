#include <algorithm>
#include <numeric>

#include "radfeed/analysis.hpp"
#include "radfeed/random.hpp"

namespace radfeed::analysis {

RadialFeeder<double> random_feeder(std::uint64_t seed, const RandomFeederOptions& options) {
  if (options.min_buses < 2 || options.max_buses < options.min_buses)
    throw Error(ErrorCode::InvalidArgument, "random feeder needs 2 <= min_buses <= max_buses");
  UniformSource rng(seed);
  const auto n = static_cast<std::size_t>(rng.integer(options.min_buses, options.max_buses));

  FeederDraft<double> draft;
  draft.buses.resize(n);
  draft.buses[0].id = 0;
  for (std::size_t i = 1; i < n; ++i) {
    auto& b = draft.buses[i];
    b.id = i;
    b.parent = static_cast<BusId>(rng.integer(0, i - 1));
    b.branch_r = rng.uniform(options.r_lo, options.r_hi);
    b.branch_x = rng.uniform(options.x_lo, options.x_hi);
    b.p_load = rng.uniform(options.load_lo, options.load_hi);
    b.q_load = rng.uniform(options.load_lo, options.load_hi);
  }

  // Partial Fisher-Yates over the non-slack buses picks the controllable set.
  std::vector<BusId> candidates(n - 1);
  std::iota(candidates.begin(), candidates.end(), BusId{1});
  const std::size_t limit = std::min(options.max_controllable, n - 1);
  const auto count = limit == 0 ? std::size_t{0} : static_cast<std::size_t>(rng.integer(1, limit));
  for (std::size_t k = 0; k < count; ++k) {
    const auto j = static_cast<std::size_t>(rng.integer(k, candidates.size() - 1));
    std::swap(candidates[k], candidates[j]);
    draft.buses[candidates[k]].q_max = rng.uniform(options.q_max_lo, options.q_max_hi);
  }
  return validate_feeder(std::move(draft));
}

}  // namespace radfeed::analysis
