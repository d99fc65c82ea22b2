// Timing and identity comparison of the serial and multi-worker sweep
// kernels. The multi-worker pass must reproduce the serial results bit for
// bit; any mismatch is a hard failure.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dimer/explore.hpp"
#include "dimer/model.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() ||
          std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

struct BenchResult {
  dimer::SweepGrid grid;
  double best_seconds = 0.0;
};

BenchResult run_sweep(const dimer::SystemParams& params,
                      const dimer::AxisSpec& axis, dimer::Engine engine,
                      int workers, int repeats) {
  dimer::ExploreOptions opts;
  opts.workers = workers;
  BenchResult result;
  for (int rep = 0; rep < repeats; ++rep) {
    auto start = std::chrono::steady_clock::now();
    dimer::SweepGrid grid =
        dimer::sweep_detunings(params, axis, axis, engine, opts);
    double elapsed = seconds_since(start);
    if (rep == 0 || elapsed < result.best_seconds) {
      result.best_seconds = elapsed;
    }
    result.grid = std::move(grid);
  }
  return result;
}

int compare(const char* label, const dimer::SystemParams& params,
            const dimer::AxisSpec& axis, dimer::Engine engine, int workers,
            int repeats) {
  BenchResult serial = run_sweep(params, axis, engine, 1, repeats);
  BenchResult parallel = run_sweep(params, axis, engine, workers, repeats);
  double speedup = parallel.best_seconds > 0.0
                       ? serial.best_seconds / parallel.best_seconds
                       : 0.0;
  std::printf("%s %dx%d:\n", label, axis.count, axis.count);
  std::printf("  serial    (1 worker):  %8.3f s per sweep (best of %d)\n",
              serial.best_seconds, repeats);
  std::printf("  parallel  (%d workers): %8.3f s per sweep (best of %d), "
              "speedup %.2fx\n",
              workers, parallel.best_seconds, repeats, speedup);
  bool same = bitwise_equal(serial.grid.g2, parallel.grid.g2) &&
              bitwise_equal(serial.grid.n_out, parallel.grid.n_out) &&
              serial.grid.failures == parallel.grid.failures;
  std::printf("  results: %s\n",
              same ? "bit-identical" : "MISMATCH between serial and parallel");
  return same ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--quick") quick = true;
  }

  int workers = 2;
#ifdef _OPENMP
  if (omp_get_max_threads() > workers) workers = omp_get_max_threads();
#endif

  dimer::SystemParams params;
  auto [e1, e2] = dimer::optimal_detunings(1.0);
  params.e1 = e1;
  params.e2 = e2;
  params.j = 2.5;
  params.u = dimer::optimal_nonlinearity(1.0, params.j);
  params.f = 0.01;
  params.gamma1 = 0.4;
  params.gamma2 = 0.016;

  int numeric_points = quick ? 9 : 41;
  int analytic_points = quick ? 41 : 201;
  int repeats = quick ? 1 : 3;

  std::printf("sweep kernel benchmark (%s mode), %d worker cap\n",
              quick ? "quick" : "full", workers);
#ifndef _OPENMP
  std::printf("note: built without OpenMP; both passes run serially\n");
#endif

  int status = 0;
  status |= compare("numeric sweep", params,
                    dimer::AxisSpec{-2.0, 2.0, numeric_points},
                    dimer::Engine::numeric, workers, repeats);
  status |= compare("analytic sweep", params,
                    dimer::AxisSpec{-2.0, 2.0, analytic_points},
                    dimer::Engine::analytic, workers, repeats);
  return status;
}
