#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridmap/arch.hpp"
#include "gridmap/dfg.hpp"
#include "gridmap/sched.hpp"

namespace gridmap {

struct Placement {
    Coord pe;
    int time = 0; // absolute schedule time; FU slot is time % ii
    auto operator<=>(const Placement&) const = default;
};

// One claimed routing slot at an absolute cycle. A value leaving src at
// time+latency occupies exactly one resource per cycle until it reaches the
// consumer's cycle.
struct RouteSlot {
    Resource res;
    int cycle = 0; // absolute
    auto operator<=>(const RouteSlot&) const = default;
};

struct Mapping {
    int ii = 1;
    bool infinite_registers = false;
    std::map<int, Placement> place;                 // node id -> placement
    std::map<int, std::vector<RouteSlot>> routes;   // edge id -> path
    double wall_ms = 0.0;
};

struct Violation {
    std::string constraint; // capability | fu-exclusivity | route-exclusivity |
                            // timing | route-connectivity | register-capacity |
                            // spm | config-depth | completeness
    int node = -1;
    int edge = -1;
    std::string detail;
};

// Checks a mapping against every hardware constraint. Empty result == valid.
std::vector<Violation> validate_mapping(const Dfg& g, const ArchSpec& a,
                                        const Mapping& m);

enum class MapStatus {
    Mapped,
    Infeasible,      // search space exhausted: proven no mapping at this II
    BudgetExhausted, // gave up before exhausting the space
    MaxIiReached,    // no II in [min_ii, max_ii] worked
    NoCapablePe,     // some opcode cannot run anywhere
};
const char* map_status_name(MapStatus s);

struct MapResult {
    MapStatus status = MapStatus::Infeasible;
    std::optional<Mapping> mapping;
    std::uint64_t visited = 0; // placement attempts
    std::string detail;
    bool ok() const { return status == MapStatus::Mapped; }
};

struct MapOptions {
    int max_ii = 60;
    std::uint64_t budget = 5'000'000; // exhaustive placement-attempt cap
    int backtrack_depth = 5;          // K recent placements reconsidered
    std::uint64_t seed = 0;           // anneal
    double t0 = 10.0;                 // anneal start temperature
    double cooling = 0.995;           // anneal geometric factor per step
    std::uint64_t anneal_iters = 0;   // 0 => 50 * nodes * ii
    bool infinite_registers = false;
};

// Depth-first enumeration of every (PE, time) assignment in topological
// order with greedy committed routing; sound pruning only, so Infeasible is
// a proof for the shared routing discipline.
MapResult map_exhaustive(const Dfg& g, const ArchSpec& a, int ii,
                         const MapOptions& opt = {});

// Priority-list modulo scheduler: one deterministic pass per II from min_ii
// upward.
MapResult map_heuristic(const Dfg& g, const ArchSpec& a,
                        const MapOptions& opt = {});

// Heuristic plus bounded chronological backtracking over the most recent
// placements before giving up on an II.
MapResult map_backtrack(const Dfg& g, const ArchSpec& a,
                        const MapOptions& opt = {});

// Simulated annealing at a fixed II; reproducible for a given seed.
MapResult map_anneal(const Dfg& g, const ArchSpec& a, int ii,
                     const MapOptions& opt = {});

struct MapReport {
    int op_count = 0;
    int ii = 1;
    int unused_pe = 0;
    int max_ops_per_pe = 0;
    int route_only_pe = 0;
    double speedup = 0.0; // op_count / ii
    double wall_ms = 0.0;
};
// Requires a valid mapping (throws SemanticError otherwise).
MapReport mapping_report(const Dfg& g, const ArchSpec& a, const Mapping& m);

// Per-PE FU occupancy fraction: ops on PE / ii.
std::map<Coord, double> utilization(const ArchSpec& a, const Mapping& m);

// cycle,row,col,resource,kind,payload rows keyed by cycle in [0,ii),
// sorted by (cycle,row,col,resource). Header always present.
std::string export_mapping_csv(const Dfg& g, const ArchSpec& a,
                               const Mapping& m);

// Occupancy view reconstructed from CSV (modulo cycles only).
struct CsvRow {
    int cycle = 0;
    Coord pe;
    Resource res;
    std::string kind;    // op | route | hold
    std::string payload;
};
std::vector<CsvRow> parse_mapping_csv(const std::string& text);

// Full-fidelity artifact with absolute times; what `simulate` consumes.
std::string mapping_to_json(const Mapping& m);
Mapping mapping_from_json(const std::string& text);

} // namespace gridmap
