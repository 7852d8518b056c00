// SPDX-License-Identifier: Apache-2.0
#include "oracles/bucket_oracle.hpp"

#include <algorithm>

namespace oracle {

std::vector<std::uint64_t> bucket_completions(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& msgs,
                                              std::uint64_t bandwidth_bps, std::uint64_t depth_us) {
  // Units: bits * 1e6, so one microsecond adds exactly bandwidth_bps units.
  const std::uint64_t cap = bandwidth_bps * depth_us;
  std::uint64_t tokens = cap;
  std::uint64_t t = 0;
  std::vector<std::uint64_t> done;
  for (const auto& [send, bytes] : msgs) {
    while (t < send) {
      ++t;
      tokens = std::min(cap, tokens + bandwidth_bps);
    }
    std::uint64_t remaining = bytes * 8 * 1'000'000;
    for (;;) {
      const std::uint64_t take = std::min(tokens, remaining);
      tokens -= take;
      remaining -= take;
      if (remaining == 0) break;
      ++t;
      tokens = std::min(cap, tokens + bandwidth_bps);
    }
    done.push_back(t);
  }
  return done;
}

}  // namespace oracle
