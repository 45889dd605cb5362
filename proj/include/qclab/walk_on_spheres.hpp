#pragma once

#include <cstdint>

#include "qclab/measure_engine.hpp"

namespace qclab {

struct WosOptions {
  double eps_rel = 1e-4;  // absorbing shell, relative to the domain diameter
  int max_steps = 10000;
  /// 0 picks QCLAB_THREADS or the hardware concurrency.
  int threads = 0;
};

/// splitmix64 finalizer; walk k of a run with seed s draws from an
/// mt19937_64 seeded with splitmix64(s + k * golden gamma).
std::uint64_t splitmix64(std::uint64_t x);

/// Walk-on-spheres exit distribution from the pole. A walk ends inside the
/// eps shell and deposits on the arc of its closest boundary point. Counts are
/// integers, so results do not depend on the thread count.
BoundaryMeasure harmonic_measure_wos(const DomainSpec& omega, Point pole, const BoundaryPartition& partition,
                                     std::size_t n_samples, std::uint64_t seed, const WosOptions& opts = {});

int thread_count(int requested = 0);

}  // namespace qclab
