#pragma once
#include <cstdint>
#include <vector>

#include "gridmap/arch.hpp"
#include "gridmap/dfg.hpp"

namespace gridmap {

// Recurrence-constrained minimum initiation interval: the smallest II such
// that no cycle has positive slack deficit, i.e. max over cycles of
// ceil(sum latency / sum distance). Throws SemanticError on a zero-distance
// cycle. Acyclic graphs give 1.
int rec_mii(const Dfg& g);

// Resource-constrained minimum II over two resource classes: every node needs
// an FU slot somewhere, memory ops additionally need an SPM-attached PE.
// Throws SemanticError when some opcode has no capable PE at all.
int res_mii(const Dfg& g, const ArchSpec& a);

int min_ii(const Dfg& g, const ArchSpec& a);

// A resource at a cycle slot in the modulo-time-expanded routing graph.
struct Slot {
    Resource res;
    int cycle = 0; // in [0, ii)
    auto operator<=>(const Slot&) const = default;
};

// Modulo routing resource graph: every resource of every enabled PE repeated
// ii times. Arcs advance one cycle, except HyCube port->port hops which stay
// in-cycle (chains are capped by hops_per_cycle during routing, not here).
class Mrrg {
public:
    Mrrg(ArchSpec arch, int ii); // throws SemanticError if ii<1 or ii>config_depth

    const ArchSpec& arch() const { return arch_; }
    int ii() const { return ii_; }

    const std::vector<Resource>& resources() const { return resources_; }
    std::size_t slot_count() const { return resources_.size() * size_t(ii_); }

    // Arcs out of (r, cycle): pairs (target slot, same_cycle flag).
    std::vector<std::pair<Slot, bool>> arcs_from(const Slot& s) const;

private:
    ArchSpec arch_;
    int ii_;
    std::vector<Resource> resources_;
};

Mrrg build_mrrg(const ArchSpec& a, int ii);

// Longest-path lower bounds on modulo schedule times, edge weight
// latency - ii*distance, clamped at 0. Valid once ii >= rec_mii (relaxation
// converges); used for priorities and search windows.
std::vector<int> modulo_asap(const Dfg& g, const ArchSpec& a, int ii);
// Matching ALAP against horizon max(asap); alap[i] >= asap[i].
std::vector<int> modulo_alap(const Dfg& g, const ArchSpec& a, int ii,
                             const std::vector<int>& asap);

// Shared search horizon for schedule times.
int schedule_horizon(const Dfg& g, int ii);

} // namespace gridmap
