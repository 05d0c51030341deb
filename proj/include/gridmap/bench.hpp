#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "gridmap/arch.hpp"

namespace gridmap {

struct BenchConfig {
    std::vector<std::string> kernels;  // empty => all builtins
    int size = 4;
    std::vector<std::string> opts;     // of none|flat|flat+unroll; empty => flat,flat+unroll
    std::vector<std::string> arches;   // names or paths; empty => mesh4x4,hycube4x4
    std::vector<std::string> mappers;  // empty => heuristic
    int max_ii = 60;
    std::uint64_t seed = 0;
    int threads = 0;                   // 0 => GRIDMAP_THREADS or hw concurrency
    bool with_timing = false;          // emit measured map_ms in the CSV
};

struct BenchRow {
    std::string kernel, optimization, arch, mapper;
    int ops = 0;
    bool mapped = false;
    int ii = 0;                 // valid when mapped
    int unused_pe = 0;
    int max_ops_per_pe = 0;
    double map_ms = 0.0;
    std::int64_t mismatches = 0;
    std::string status;         // ok | budget | max-ii | capability
};

// Runs kernel x opt x arch x mapper, mapping then simulating against the
// reference interpreter. Rows come back in canonical order independent of
// thread scheduling.
std::vector<BenchRow> run_bench(const BenchConfig& cfg);

std::string bench_csv(const std::vector<BenchRow>& rows, bool with_timing);
std::string bench_table(const std::vector<BenchRow>& rows);

} // namespace gridmap
