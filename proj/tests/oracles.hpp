#pragma once
// Test-side reference implementations, written independently of the library
// code they check. Everything here favours obviousness over speed.
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "gridmap/arch.hpp"
#include "gridmap/dfg.hpp"
#include "gridmap/loopir.hpp"
#include "gridmap/mapper.hpp"

namespace oracle {

using gridmap::MemImage;

// Straight-line implementations of the builtin kernels (32-bit wrapping,
// square size n). Each reads and writes a copy of the image laid out the
// library way but computed with plain nested loops.
MemImage gemm(const MemImage& in, int n);
MemImage atax(const MemImage& in, int n);
MemImage gesummv(const MemImage& in, int n);
MemImage mvt(const MemImage& in, int n);
MemImage trisolv(const MemImage& in, int n);
MemImage run_named(const std::string& kernel, const MemImage& in, int n);

// Executes a data-flow graph for `iterations` iterations by direct
// topological evaluation (order edges respected, live memory), returning the
// final image. Independent of the cycle-accurate simulator.
MemImage exec_dfg(const gridmap::Dfg& g, const MemImage& in,
                  std::int64_t iterations);

// Exhaustive existence check: is there any placement + greedy-committed
// routing of g on arch at this ii within the shared horizon? Mirrors the
// documented search discipline with an independent implementation.
bool mappable(const gridmap::Dfg& g, const gridmap::ArchSpec& arch, int ii);

// All elementary cycles of the distance>=1 closed walks, as (node count,
// total latency, total distance) triples; small graphs only.
struct Cycle {
    std::vector<int> nodes;
    int latency = 0;
    int distance = 0;
};
std::vector<Cycle> elementary_cycles(const gridmap::Dfg& g);

// Random connected DAG over non-memory opcodes with valid arities.
gridmap::Dfg random_dag(std::uint64_t seed, int max_nodes);

// Every DAG of exactly n unit-latency Add nodes, enumerated by choosing for
// each operand slot either an immediate or a strictly earlier producer.
// Slot-swapped duplicates are skipped: operand order is irrelevant to
// placement and routing.
std::vector<gridmap::Dfg> all_slot_dags(int n);

} // namespace oracle
