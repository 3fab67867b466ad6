#include "dpl/rolling_stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpl/error.hpp"

namespace dpl {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw InvalidArgument(std::string(what) + ": value is not finite");
  }
}

} // namespace

RunningGaussian::RunningGaussian(double x0) : mean_(x0) {
  require_finite(x0, "RunningGaussian");
}

RunningGaussian RunningGaussian::from_parts(std::size_t count, double mean, double sum_sq) {
  if (count < 1) throw InvalidArgument("RunningGaussian: count must be >= 1");
  if (!std::isfinite(mean) || !std::isfinite(sum_sq) || sum_sq < 0.0) {
    throw InvalidArgument("RunningGaussian: mean/sum_sq out of range");
  }
  if (count == 1 && sum_sq != 0.0) {
    throw InvalidArgument("RunningGaussian: single-sample model must have sum_sq == 0");
  }
  RunningGaussian g;
  g.count_ = count;
  g.mean_ = mean;
  g.sum_sq_ = sum_sq;
  return g;
}

void RunningGaussian::update(double x) {
  require_finite(x, "RunningGaussian::update");
  ++count_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  sum_sq_ += delta * (x - mean_);
}

void RunningGaussian::revert(double x_old) {
  require_finite(x_old, "RunningGaussian::revert");
  if (!can_revert()) {
    throw RevertGuardError("RunningGaussian::revert: needs at least 3 samples, have " +
                           std::to_string(count_));
  }
  --count_;
  const double previous_mean = mean_;
  mean_ -= (x_old - previous_mean) / static_cast<double>(count_);
  sum_sq_ -= (x_old - mean_) * (x_old - previous_mean);
  if (sum_sq_ < 0.0) sum_sq_ = 0.0;
}

double RunningGaussian::variance(double floor) const noexcept {
  if (count_ < 2) return std::max(1.0, floor);
  return std::max(sum_sq_ / static_cast<double>(count_ - 1), floor);
}

TimedBuffer::TimedBuffer(Duration max_age) : max_age_(max_age) {
  if (max_age <= Duration::zero()) {
    throw InvalidArgument("TimedBuffer: max_age must be positive");
  }
}

void TimedBuffer::push(const Sample& s) {
  if (!entries_.empty() && s.timestamp < entries_.back().timestamp) {
    throw InvalidArgument("TimedBuffer::push: timestamps must be non-decreasing");
  }
  entries_.push_back(s);
}

void TimedBuffer::pop_front() { entries_.pop_front(); }

bool TimedBuffer::front_expired(Timestamp now) const {
  return !entries_.empty() && entries_.front().timestamp <= now - max_age_;
}

std::size_t expire(TimedBuffer& buffer, RunningGaussian& stats, Timestamp now) {
  std::size_t removed = 0;
  while (buffer.front_expired(now) && stats.can_revert()) {
    stats.revert(buffer.front().value);
    buffer.pop_front();
    ++removed;
  }
  return removed;
}

} // namespace dpl
