#include "qclab/walk_on_spheres.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

namespace qclab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("QCLAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct Tally {
  std::vector<std::uint64_t> hits;
  std::uint64_t leaked = 0, abandoned = 0, steps = 0;
};

void run_walks(const DomainSpec& omega, Point pole, const BoundaryPartition& partition, std::uint64_t seed,
               std::size_t begin, std::size_t end, double eps, int max_steps, Tally& t) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  for (std::size_t w = begin; w < end; ++w) {
    std::mt19937_64 rng(splitmix64(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(w)));
    Point x = pole;
    bool done = false;
    for (int step = 0; step < max_steps; ++step) {
      const double d = omega.safe_distance(x);
      if (d <= eps) {
        const BoundaryLocation loc = omega.closest_point(x);
        const int arc = loc.loop >= 0 ? partition.arc_of(loc.loop, loc.s) : -1;
        if (arc >= 0)
          ++t.hits[arc];
        else
          ++t.leaked;
        t.steps += step;
        done = true;
        break;
      }
      x += std::polar(d, angle(rng));
    }
    if (!done) {
      ++t.abandoned;
      t.steps += max_steps;
    }
  }
}

}  // namespace

BoundaryMeasure harmonic_measure_wos(const DomainSpec& omega, Point pole, const BoundaryPartition& partition,
                                     std::size_t n_samples, std::uint64_t seed, const WosOptions& opts) {
  if (!omega.contains(pole)) throw Error(ErrorCode::DomainError, "pole outside the domain");
  if (n_samples == 0) throw Error(ErrorCode::DomainError, "need at least one walk");
  const double eps = opts.eps_rel * omega.diameter();
  const int nt = std::min<int>(thread_count(opts.threads), static_cast<int>(std::max<std::size_t>(1, n_samples / 1000)));
  std::vector<Tally> tallies(nt);
  for (auto& t : tallies) t.hits.assign(partition.size(), 0);
  std::vector<std::thread> pool;
  for (int k = 0; k < nt; ++k) {
    const std::size_t b = n_samples * k / nt, e = n_samples * (k + 1) / nt;
    if (nt == 1)
      run_walks(omega, pole, partition, seed, b, e, eps, opts.max_steps, tallies[k]);
    else
      pool.emplace_back(run_walks, std::cref(omega), pole, std::cref(partition), seed, b, e, eps, opts.max_steps,
                        std::ref(tallies[k]));
  }
  for (auto& th : pool) th.join();

  Tally all;
  all.hits.assign(partition.size(), 0);
  for (const auto& t : tallies) {
    for (std::size_t j = 0; j < t.hits.size(); ++j) all.hits[j] += t.hits[j];
    all.leaked += t.leaked;
    all.abandoned += t.abandoned;
    all.steps += t.steps;
  }
  if (static_cast<double>(all.abandoned) >= 1e-3 * static_cast<double>(n_samples))
    throw Error(ErrorCode::MaxStepsExceeded, std::to_string(all.abandoned) + " of " + std::to_string(n_samples) +
                                                  " walks hit the step limit");
  BoundaryMeasure m;
  m.partition = partition;
  m.pole = pole;
  m.method = "wos";
  m.samples = n_samples;
  m.abandoned = all.abandoned;
  m.mean_steps = static_cast<double>(all.steps) / static_cast<double>(n_samples);
  const double n = static_cast<double>(n_samples);
  m.weights.resize(partition.size());
  m.std_error.resize(partition.size());
  for (std::size_t j = 0; j < partition.size(); ++j) {
    const double p = static_cast<double>(all.hits[j]) / n;
    m.weights[j] = p;
    m.std_error[j] = std::sqrt(p * (1.0 - p) / n);
  }
  m.leakage = static_cast<double>(all.leaked + all.abandoned) / n;
  m.raw_sum = m.total();
  if (m.raw_sum > 0)
    for (double& w : m.weights) w /= m.raw_sum;
  return m;
}

}  // namespace qclab
