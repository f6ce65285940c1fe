// Throughput comparison of the OpenMP ensemble kernels against their serial
// reference implementations, plus a determinism spot check.
//
//   ./ruinopt-bench [n_paths] [n_steps]

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ruinopt/montecarlo.hpp"

using namespace ruinopt;
namespace chrono = std::chrono;

namespace {

double seconds_since(chrono::steady_clock::time_point t0) {
    return chrono::duration<double>(chrono::steady_clock::now() - t0).count();
}

double checksum(const std::vector<mc::PathSummary>& sums) {
    double acc = 0;
    for (const auto& s : sums) acc += s.terminal + s.run_min + s.run_max;
    return acc;
}

}  // namespace

int main(int argc, char** argv) {
    std::uint64_t n_paths = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 20000;
    std::uint64_t n_steps = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 5000;

    mc::SimConfig cfg;
    cfg.x0 = 1.0;
    cfg.dt = 1e-3;
    cfg.horizon = cfg.dt * static_cast<double>(n_steps);
    cfg.n_paths = n_paths;
    cfg.seed = 20240901;
    const mc::DriftVol coeffs = mc::DriftVol::constants(1.0, 1.0);

    const double total_steps = static_cast<double>(n_paths) * static_cast<double>(n_steps);
    std::printf("ensemble: %llu paths x %llu steps (drift 1, vol 1, barrier 0)\n",
                static_cast<unsigned long long>(n_paths),
                static_cast<unsigned long long>(n_steps));
#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: not enabled\n");
#endif

    auto t0 = chrono::steady_clock::now();
    const auto serial = mc::simulate_summaries_serial(coeffs, cfg, 0.0, 0.5);
    const double t_serial = seconds_since(t0);

    t0 = chrono::steady_clock::now();
    const auto parallel = mc::simulate_summaries(coeffs, cfg, 0.0, 0.5);
    const double t_parallel = seconds_since(t0);

    std::printf("serial   : %8.3f s   %10.2f Msteps/s\n", t_serial,
                total_steps / t_serial / 1e6);
    std::printf("parallel : %8.3f s   %10.2f Msteps/s   speedup %.2fx\n", t_parallel,
                total_steps / t_parallel / 1e6, t_serial / t_parallel);

    const double cs_serial = checksum(serial);
    const double cs_parallel = checksum(parallel);
    std::printf("checksums %s (serial %.17g, parallel %.17g)\n",
                cs_serial == cs_parallel ? "MATCH" : "DIFFER", cs_serial, cs_parallel);
    return cs_serial == cs_parallel ? 0 : 1;
}
