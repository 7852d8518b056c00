// SPDX-License-Identifier: Apache-2.0
#include "holo/harness/link.hpp"

#include <algorithm>

#include "holo/common/error.hpp"

namespace holo::harness {

void LinkModel::validate() const {
  if (bandwidth_bps == 0) throw Error(Errc::ConfigError, "link bandwidth must be positive");
  if (bandwidth_bps > 100'000'000'000ull) throw Error(Errc::ConfigError, "link bandwidth above 100 Gbps");
  if (base_delay_us > 10'000'000 || jitter_us > 10'000'000)
    throw Error(Errc::ConfigError, "link delay or jitter above 10 s");
}

Link::Link(LinkModel model, std::uint64_t seed)
    : model_(model), rng_(seed), tokens_(0), capacity_(0) {
  model_.validate();
  capacity_ = model_.bandwidth_bps * kBucketMicros;
  tokens_ = capacity_;
}

std::uint64_t Link::transfer(std::size_t bytes, std::uint64_t t_send_us) {
  const std::uint64_t start = std::max(t_send_us, queue_free_us_);
  if (start > last_refill_us_) {
    const std::uint64_t dt = start - last_refill_us_;
    // Saturating refill; dt * rate can only overflow after the bucket is full.
    tokens_ = dt >= kBucketMicros ? capacity_ : std::min(capacity_, tokens_ + dt * model_.bandwidth_bps);
    last_refill_us_ = start;
  }

  const std::uint64_t need = std::uint64_t(bytes) * 8 * 1'000'000;
  std::uint64_t done = start;
  if (tokens_ >= need) {
    tokens_ -= need;
  } else {
    const std::uint64_t deficit = need - tokens_;
    const std::uint64_t wait = (deficit + model_.bandwidth_bps - 1) / model_.bandwidth_bps;
    done = start + wait;
    tokens_ = wait * model_.bandwidth_bps - deficit;
    last_refill_us_ = done;
  }
  queue_free_us_ = done;

  const std::int64_t j = model_.jitter_us ? rng_.uniform_int(-std::int64_t(model_.jitter_us), std::int64_t(model_.jitter_us)) : 0;
  const std::int64_t flight = std::max<std::int64_t>(0, std::int64_t(model_.base_delay_us) + j);
  const std::uint64_t delivery = std::max(done + std::uint64_t(flight), last_delivery_us_);
  last_delivery_us_ = delivery;
  return delivery;
}

}  // namespace holo::harness
