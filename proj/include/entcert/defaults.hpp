#pragma once

#include <cstdint>

// Single source of truth for tunable defaults; the CLI exposes all of them
// as flags and the benchmark runners pin their scenario budgets from here.
namespace entcert::defaults {

inline constexpr int lmo_restarts = 10;
inline constexpr double lmo_sweep_tol = 1e-10;
inline constexpr int lmo_max_sweeps = 200;

inline constexpr double r_threshold = 0.2;  // the rapid-detection ratio r0
inline constexpr int64_t max_iter = 100000;
inline constexpr double f_tol = 1e-22;
inline constexpr int resync_period = 1000;

inline constexpr double target_gap_two_qubit = 1e-3;
inline constexpr double target_gap_horodecki = 5e-3;
inline constexpr int max_probes = 40;
inline constexpr double pushout_eps = 0.02;
inline constexpr int pushout_ladder = 3;
inline constexpr double exact_decomposition_tol = 1e-9;

inline constexpr double net_cap = 1e7;
inline constexpr uint64_t seed = 1;

}  // namespace entcert::defaults
