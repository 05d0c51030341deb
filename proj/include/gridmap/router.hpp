#pragma once
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "gridmap/arch.hpp"
#include "gridmap/mapper.hpp"

namespace gridmap {

// The value occupying a routing slot: the producing node plus the absolute
// cycle of the claim. Fan-out edges of the same value share slots for free;
// anything else is a conflict (including the same edge wrapping onto its own
// modulo slot at a different absolute cycle).
struct RouteOwner {
    int node = -1;
    int abs_cycle = 0;
    auto operator<=>(const RouteOwner&) const = default;
};

// Modulo occupancy shared by placement (FU slots) and routing (ports and
// registers), both keyed by cycle mod ii.
struct Occupancy {
    int ii = 1;
    std::map<std::pair<Coord, int>, int> fu;              // (pe, slot) -> node
    std::map<std::pair<Resource, int>, RouteOwner> route; // (res, slot) -> owner

    bool fu_free(Coord pe, int cmod) const { return !fu.count({pe, cmod}); }
};

// Deterministic cheapest-path search for one value from src_pe (ready at
// cycle `depart`) to dst_pe (consumed at cycle `arrive`). Cost counts freshly
// claimed slots; slots already owned by (src_node, same absolute cycle) are
// free. States are (cycle, pe) expanded in (cost, cycle, row, col) order with
// first-settle-wins ties; per cycle the value either holds in one register
// (shared-owner register first, else the lowest free index) or traverses a
// chain of up to hop_budget ports enumerated in N,E,S,W order (ties: cheaper,
// then fewer hops, then lexicographically smaller step list). Claims come
// back in travel order and are not committed.
std::optional<std::vector<RouteSlot>> route_one(const ArchSpec& a,
                                                const Occupancy& occ,
                                                int src_node, Coord src_pe,
                                                int depart, Coord dst_pe,
                                                int arrive,
                                                bool infinite_registers);

// Inserts the claims for src_node; returns only the newly inserted slots (the
// rollback set), or nullopt after undoing everything when a slot is already
// held by a different owner.
std::optional<std::vector<RouteSlot>> commit_route(
    Occupancy& occ, int src_node, const std::vector<RouteSlot>& claims);

void rollback_route(Occupancy& occ, const std::vector<RouteSlot>& fresh);

} // namespace gridmap
