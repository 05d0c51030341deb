#pragma once
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridmap/arch.hpp"
#include "gridmap/loopir.hpp"

namespace gridmap {

enum class Section { Indices, Address, Memory, Compute };
const char* section_name(Section s);

// Data-flow node. Operand slots hold either an incoming edge or an immediate;
// `imm[k]` set means slot k is a literal baked into the instruction.
struct DfgNode {
    int id = 0;
    Opcode opcode = Opcode::Add;
    Rel rel = Rel::Eq;       // Cmp only
    std::int32_t value = 0;  // Const only
    std::array<std::optional<std::int32_t>, 3> imm;
    int latency = 1;
    Section section = Section::Compute;
    std::string label; // debug aid for dumps/DOT, no semantic weight
};

// operand: which input slot of dst this edge feeds (order edges use slot
// arity(dst)). distance: iteration distance (0 = same iteration).
struct DfgEdge {
    int id = 0;
    int src = 0;
    int dst = 0;
    int operand = 0;
    int distance = 0;
    bool order_only = false;
};

struct Dfg {
    std::string name;
    std::vector<DfgNode> nodes; // ids are dense 0..n-1
    std::vector<DfgEdge> edges;

    const DfgNode& node(int id) const { return nodes.at(size_t(id)); }
    std::vector<const DfgEdge*> in_edges(int id) const;
    std::vector<const DfgEdge*> out_edges(int id) const;
    // Topological order over distance-0 edges, ids ascending among ready nodes.
    std::vector<int> topo_order() const; // throws SemanticError on d0 cycle
    void validate() const;               // arity/slot/dag checks
};

// Timing weight of an edge: data edges carry the producer latency, order
// edges only force strict ordering after a store.
int edge_latency(const Dfg& g, const DfgEdge& e);
// Same, with Load latency taken from the arch scratchpad.
int edge_latency(const Dfg& g, const DfgEdge& e, const ArchSpec& a);
int effective_latency(const DfgNode& n, const ArchSpec& a);

// Build the data-flow graph of one iteration of the innermost body, with
// per-dimension index counters, affine address chains, guarded writes turned
// into select nodes, and load/store forwarding within the iteration.
Dfg build_dfg(const LoopNest& nest);

struct DfgStats {
    int op_count = 0;
    int mem_op_count = 0;
    std::map<Opcode, int> histogram;
    std::map<Section, int> sections;
};
DfgStats dfg_stats(const Dfg& g);

std::string to_dot(const Dfg& g);     // dashed edges for distance >= 1
std::string dump_dfg(const Dfg& g);   // line-oriented text form
Dfg parse_dfg(const std::string& text);

} // namespace gridmap
