#include "gridmap/sched.hpp"

#include <algorithm>
#include <cmath>

#include "gridmap/error.hpp"

namespace gridmap {

namespace {

// longest-path relaxation with weights latency - ii*distance; returns false
// when a positive cycle survives (the II is below the recurrence bound)
bool relax_modulo(const Dfg& g, int ii, const ArchSpec* a, std::vector<int>& t) {
    t.assign(g.nodes.size(), 0);
    int n = int(g.nodes.size());
    for (int pass = 0; pass <= n; pass++) {
        bool changed = false;
        for (const auto& e : g.edges) {
            int lat = a ? edge_latency(g, e, *a) : edge_latency(g, e);
            int w = lat - ii * e.distance;
            if (t[size_t(e.src)] + w > t[size_t(e.dst)]) {
                t[size_t(e.dst)] = t[size_t(e.src)] + w;
                changed = true;
            }
        }
        if (!changed) return true;
    }
    return false;
}

} // namespace

int rec_mii(const Dfg& g) {
    (void)g.topo_order(); // throws on a zero-distance cycle
    int hi = 1;
    for (const auto& e : g.edges) hi += std::max(1, edge_latency(g, e));
    std::vector<int> t;
    int lo = 1;
    // feasibility is monotone in ii; hi (sum of latencies + 1) is always enough
    while (lo < hi) {
        int mid = lo + (hi - lo) / 2;
        if (relax_modulo(g, mid, nullptr, t)) hi = mid;
        else lo = mid + 1;
    }
    return lo;
}

int res_mii(const Dfg& g, const ArchSpec& a) {
    int pes = int(a.enabled_pes().size());
    if (pes == 0) throw SemanticError("no enabled PEs");
    for (const auto& n : g.nodes)
        if (capable_pes(a, n.opcode).empty())
            throw SemanticError(std::string("no PE can execute ") +
                                opcode_name(n.opcode));
    int nodes = int(g.nodes.size());
    int mem_nodes = 0;
    for (const auto& n : g.nodes)
        if (is_mem_op(n.opcode)) mem_nodes++;
    int mem_pes = 0;
    for (const auto& pe : a.enabled_pes())
        if (a.is_spm_pe(pe)) mem_pes++;
    int ii = std::max(1, (nodes + pes - 1) / pes);
    if (mem_nodes > 0)
        ii = std::max(ii, (mem_nodes + mem_pes - 1) / mem_pes);
    return ii;
}

int min_ii(const Dfg& g, const ArchSpec& a) {
    return std::max(rec_mii(g), res_mii(g, a));
}

// ---------------------------------------------------------------------------

Mrrg::Mrrg(ArchSpec arch, int ii) : arch_(std::move(arch)), ii_(ii) {
    if (ii < 1) throw SemanticError("ii must be at least 1");
    if (ii > arch_.default_pe.config_depth)
        throw SemanticError("ii " + std::to_string(ii) +
                            " exceeds config depth " +
                            std::to_string(arch_.default_pe.config_depth));
    for (const Coord& pe : arch_.enabled_pes()) {
        resources_.push_back(fu(pe));
        for (int d = 0; d < kDirCount; d++) {
            Coord nbr = step(pe, Dir(d));
            if (arch_.enabled(nbr)) resources_.push_back(route_port(pe, Dir(d)));
        }
        for (int r = 0; r < arch_.pe(pe).registers; r++)
            resources_.push_back(reg(pe, r));
    }
}

std::vector<std::pair<Slot, bool>> Mrrg::arcs_from(const Slot& s) const {
    std::vector<std::pair<Slot, bool>> out;
    int next = (s.cycle + 1) % ii_;
    auto push_pe_sinks = [&](const Coord& pe, int cycle) {
        out.push_back({{fu(pe), cycle}, false});
        for (int d = 0; d < kDirCount; d++)
            if (arch_.enabled(step(pe, Dir(d))))
                out.push_back({{route_port(pe, Dir(d)), cycle}, false});
        for (int r = 0; r < arch_.pe(pe).registers; r++)
            out.push_back({{reg(pe, r), cycle}, false});
    };
    switch (s.res.kind) {
    case Resource::Kind::Fu:
        for (int d = 0; d < kDirCount; d++)
            if (arch_.enabled(step(s.res.pe, Dir(d))))
                out.push_back({{route_port(s.res.pe, Dir(d)), next}, false});
        for (int r = 0; r < arch_.pe(s.res.pe).registers; r++)
            out.push_back({{reg(s.res.pe, r), next}, false});
        break;
    case Resource::Kind::RoutePort: {
        Coord nbr = step(s.res.pe, s.res.dir);
        push_pe_sinks(nbr, next);
        // a port arc arrives at the neighbour; the FU sink above stands for
        // "value present", and register/port sinks continue the route
        if (arch_.interconnect.kind == InterconnectKind::HyCube) {
            for (int d = 0; d < kDirCount; d++)
                if (arch_.enabled(step(nbr, Dir(d))))
                    out.push_back({{route_port(nbr, Dir(d)), s.cycle}, true});
        }
        break;
    }
    case Resource::Kind::Register:
        out.push_back({{fu(s.res.pe), next}, false});
        out.push_back({{reg(s.res.pe, s.res.index), next}, false});
        for (int d = 0; d < kDirCount; d++)
            if (arch_.enabled(step(s.res.pe, Dir(d))))
                out.push_back({{route_port(s.res.pe, Dir(d)), next}, false});
        break;
    }
    return out;
}

Mrrg build_mrrg(const ArchSpec& a, int ii) { return Mrrg(a, ii); }

// ---------------------------------------------------------------------------

std::vector<int> modulo_asap(const Dfg& g, const ArchSpec& a, int ii) {
    std::vector<int> t;
    if (!relax_modulo(g, ii, &a, t))
        throw SemanticError("ii " + std::to_string(ii) +
                            " is below the recurrence minimum");
    return t;
}

std::vector<int> modulo_alap(const Dfg& g, const ArchSpec& a, int ii,
                             const std::vector<int>& asap) {
    int horizon = 0;
    for (int v : asap) horizon = std::max(horizon, v);
    std::vector<int> t(g.nodes.size(), horizon);
    int n = int(g.nodes.size());
    for (int pass = 0; pass <= n; pass++) {
        bool changed = false;
        for (const auto& e : g.edges) {
            int w = edge_latency(g, e, a) - ii * e.distance;
            if (t[size_t(e.dst)] - w < t[size_t(e.src)]) {
                t[size_t(e.src)] = t[size_t(e.dst)] - w;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return t;
}

int schedule_horizon(const Dfg& g, int ii) {
    return ii * (int(g.nodes.size()) + 2);
}

} // namespace gridmap
