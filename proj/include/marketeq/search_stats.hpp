#pragma once

#include <cstdint>

namespace marketeq {

struct SearchStats {
  std::uint64_t lp_count = 0;     // linear programs solved
  std::uint64_t grid_points = 0;  // size of the search space
  std::uint64_t probes = 0;       // search points actually evaluated
};

}  // namespace marketeq
