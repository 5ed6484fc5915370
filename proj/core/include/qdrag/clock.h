#pragma once

namespace qdrag {

// Monotonic time source for stage timings, in seconds.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() const = 0;
};

class SteadyClock final : public Clock {
 public:
  double now() const override;
};

// Deterministic clock for mock runs. Time is per thread and only advances when a
// mock provider charges its simulated latency, so a query's stage timings do not
// depend on scheduling or machine speed.
class VirtualClock final : public Clock {
 public:
  double now() const override;
  static void charge(double seconds);
  // Rewinds this thread to 0. Called before each unit of work so stage
  // durations round identically whichever thread ran what before.
  static void reset();
};

}  // namespace qdrag
