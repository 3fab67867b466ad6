#pragma once

#include <cstddef>
#include <deque>

#include "dpl/time.hpp"

namespace dpl {

inline constexpr double kDefaultVarianceFloor = 1e-12;

struct Sample {
  Timestamp timestamp;
  double value = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Running mean and corrected sum of squares (Welford), with the inverse step
// used to forget expired samples.
//
// A freshly seeded model holds one sample and reports the prior variance 1
// until a second sample arrives; the stored sum of squares is kept at 0 so the
// update identities hold exactly from the first update on.
class RunningGaussian {
public:
  // Throws InvalidArgument for non-finite x0.
  explicit RunningGaussian(double x0);

  // Restores a model from persisted fields. Throws InvalidArgument when the
  // fields cannot describe a reachable state (count < 1, negative sum_sq, ...).
  static RunningGaussian from_parts(std::size_t count, double mean, double sum_sq);

  // Learns x. Throws InvalidArgument for non-finite x.
  void update(double x);

  // Forgets x_old, which must have been learned earlier. Refuses (throws
  // RevertGuardError) when fewer than three samples are held, since the
  // result would have no sample variance. Negative round-off in sum_sq is
  // clamped to zero.
  void revert(double x_old);

  bool can_revert() const noexcept { return count_ >= 3; }

  std::size_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double sum_sq() const noexcept { return sum_sq_; }

  // Sample variance S/(n-1); 1 while n < 2; never below floor.
  double variance(double floor = kDefaultVarianceFloor) const noexcept;

  friend bool operator==(const RunningGaussian&, const RunningGaussian&) = default;

private:
  RunningGaussian() = default;

  std::size_t count_ = 1;
  double mean_ = 0.0;
  double sum_sq_ = 0.0;
};

// Learned samples that still contribute to a model, oldest first.
class TimedBuffer {
public:
  explicit TimedBuffer(Duration max_age);

  Duration max_age() const noexcept { return max_age_; }

  // Throws InvalidArgument if s is older than the newest entry.
  void push(const Sample& s);
  void pop_front();

  const Sample& front() const { return entries_.front(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }

  // Whether the oldest entry is due: timestamp <= now - max_age.
  bool front_expired(Timestamp now) const;

  const std::deque<Sample>& entries() const noexcept { return entries_; }

private:
  std::deque<Sample> entries_;
  Duration max_age_;
};

// Forgets every buffered sample with timestamp <= now - max_age, oldest first,
// stopping early once stats can no longer be reverted. Returns the number of
// samples removed.
std::size_t expire(TimedBuffer& buffer, RunningGaussian& stats, Timestamp now);

} // namespace dpl
