#include "qdrag/clock.h"

#include <chrono>

namespace qdrag {
namespace {
thread_local double virtual_seconds = 0.0;
}  // namespace

double SteadyClock::now() const {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

double VirtualClock::now() const { return virtual_seconds; }

void VirtualClock::charge(double seconds) { virtual_seconds += seconds; }

void VirtualClock::reset() { virtual_seconds = 0.0; }

}  // namespace qdrag
