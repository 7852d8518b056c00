// SPDX-License-Identifier: Apache-2.0
//
// One direction of an emulated access link: FIFO token bucket (capacity of
// 0.25 s worth of tokens, starting full), fixed propagation delay plus
// uniform jitter, reliable in-order delivery.
#pragma once

#include <cstddef>
#include <cstdint>

#include "holo/common/random.hpp"

namespace holo::harness {

struct LinkModel {
  std::uint64_t base_delay_us = 5'000;
  std::uint64_t jitter_us = 1'000;  // uniform in [-jitter, +jitter]
  std::uint64_t bandwidth_bps = 200'000'000;

  void validate() const;  // ConfigError
  friend bool operator==(const LinkModel&, const LinkModel&) = default;
};

inline constexpr std::uint64_t kBucketMicros = 250'000;  // bucket depth in seconds of tokens, as microseconds

class Link {
 public:
  Link(LinkModel model, std::uint64_t seed);

  /// Delivery time of a message handed to the link at `t_send_us`. Calls must
  /// come in non-decreasing `t_send_us`.
  std::uint64_t transfer(std::size_t bytes, std::uint64_t t_send_us);

  /// Time the last queued message finished draining through the bucket.
  std::uint64_t drained_at() const noexcept { return queue_free_us_; }
  const LinkModel& model() const noexcept { return model_; }

 private:
  LinkModel model_;
  SplitMix64 rng_;
  // Token unit is bit-microseconds: one bit equals 1e6 units, the refill rate
  // is bandwidth_bps units per microsecond. Keeps everything integral.
  std::uint64_t tokens_;
  std::uint64_t capacity_;
  std::uint64_t last_refill_us_ = 0;
  std::uint64_t queue_free_us_ = 0;
  std::uint64_t last_delivery_us_ = 0;
};

}  // namespace holo::harness
