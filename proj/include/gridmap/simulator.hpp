#pragma once
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gridmap/arch.hpp"
#include "gridmap/dfg.hpp"
#include "gridmap/loopir.hpp"
#include "gridmap/mapper.hpp"

namespace gridmap {

struct SimOptions {
    std::ostream* trace = nullptr; // per-fire lines when set
    bool reverse_pe_order = false; // stress PE evaluation-order independence
};

struct SimStats {
    std::int64_t total_cycles = 0;
    std::int64_t iterations = 0;
    double throughput = 0.0; // iterations per cycle
    std::map<Coord, double> pe_utilization;
};

struct SimResult {
    MemImage mem;
    SimStats stats;
};

// Cycle-accurate modulo execution: iteration q of node n fires at
// time(n) + q*ii; loads see memory as of the cycle start, stores land at the
// cycle end. Requires a valid mapping.
SimResult simulate(const ArchSpec& a, const Dfg& g, const Mapping& m,
                   const MemImage& input, std::int64_t iterations,
                   const SimOptions& opt = {});

struct CompareResult {
    std::int64_t matches = 0;
    std::int64_t mismatches = 0;
    std::optional<std::int64_t> first_mismatch_addr;
};

// Word-by-word comparison over the named output arrays.
CompareResult compare_mem(const MemImage& got, const MemImage& expect,
                          const std::vector<std::string>& outputs);

} // namespace gridmap
