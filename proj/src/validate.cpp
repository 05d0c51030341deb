#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "gridmap/mapper.hpp"
#include "gridmap/router.hpp"

namespace gridmap {

namespace {

std::string slot_str(const Resource& r, int cycle) {
    std::ostringstream os;
    os << resource_name(r) << "@(" << r.pe.row << "," << r.pe.col << ")c"
       << cycle;
    return os.str();
}

} // namespace

std::vector<Violation> validate_mapping(const Dfg& g, const ArchSpec& a,
                                        const Mapping& m) {
    std::vector<Violation> out;
    auto add = [&](const std::string& c, int node, int edge,
                   const std::string& d) {
        out.push_back({c, node, edge, d});
    };
    if (m.ii < 1) {
        add("config-depth", -1, -1, "ii must be positive");
        return out;
    }
    int ii = m.ii;

    // completeness: all nodes placed, no stray ids
    for (const auto& n : g.nodes)
        if (!m.place.count(n.id))
            add("completeness", n.id, -1, "node not placed");
    for (const auto& [id, p] : m.place) {
        (void)p;
        if (id < 0 || id >= int(g.nodes.size()))
            add("completeness", id, -1, "placement for unknown node");
    }
    for (const auto& [eid, slots] : m.routes) {
        (void)slots;
        if (eid < 0 || eid >= int(g.edges.size()))
            add("completeness", -1, eid, "route for unknown edge");
    }

    // capability / spm / fu exclusivity
    std::map<std::pair<Coord, int>, std::vector<int>> fu_slots;
    for (const auto& [id, p] : m.place) {
        if (id < 0 || id >= int(g.nodes.size())) continue;
        const DfgNode& nd = g.node(id);
        if (!a.enabled(p.pe)) {
            add("capability", id, -1, "placed on a disabled or missing PE");
            continue;
        }
        const PeSpec& spec = a.pe(p.pe);
        if (!spec.ops.count(nd.opcode))
            add("capability", id, -1,
                std::string(opcode_name(nd.opcode)) + " not in PE op set");
        if (is_mem_op(nd.opcode) && !a.is_spm_pe(p.pe))
            add("spm", id, -1, "memory op on a PE without SPM access");
        if (p.time < 0) add("timing", id, -1, "negative schedule time");
        fu_slots[{p.pe, p.time % ii}].push_back(id);
    }
    for (const auto& [slot, ids] : fu_slots)
        if (ids.size() > 1) {
            std::ostringstream os;
            os << "nodes";
            for (int id : ids) os << " " << id;
            os << " share FU@(" << slot.first.row << "," << slot.first.col
               << ")s" << slot.second;
            add("fu-exclusivity", ids[1], -1, os.str());
        }

    // per-edge timing and route structure
    std::map<std::pair<Resource, int>, std::set<RouteOwner>> owners;
    for (const auto& e : g.edges) {
        auto ps = m.place.find(e.src);
        auto pd = m.place.find(e.dst);
        if (ps == m.place.end() || pd == m.place.end()) continue;
        int lat = edge_latency(g, e, a);
        int depart = ps->second.time + lat;
        int arrive = pd->second.time + ii * e.distance;
        int span = arrive - depart;
        if (span < 0) {
            std::ostringstream os;
            os << "needs " << lat << " cycle(s) but dst fires " << -span
               << " too early";
            add("timing", -1, e.id, os.str());
            continue;
        }
        if (e.order_only) {
            if (m.routes.count(e.id) && !m.routes.at(e.id).empty())
                add("route-connectivity", -1, e.id,
                    "order edges carry no value");
            continue;
        }
        auto rit = m.routes.find(e.id);
        const std::vector<RouteSlot>* slots =
            rit == m.routes.end() ? nullptr : &rit->second;
        if (span == 0) {
            if (ps->second.pe != pd->second.pe)
                add("route-connectivity", -1, e.id,
                    "zero route cycles but endpoints on different PEs");
            if (slots && !slots->empty())
                add("route-connectivity", -1, e.id,
                    "route present on a same-cycle edge");
            continue;
        }
        if (!slots || slots->empty()) {
            add("route-connectivity", -1, e.id, "missing route");
            continue;
        }
        // walk the claims cycle by cycle
        Coord cur = ps->second.pe;
        size_t idx = 0;
        bool bad = false;
        for (int c = depart; c < arrive && !bad; c++) {
            if (idx >= slots->size()) {
                add("route-connectivity", -1, e.id,
                    "no claim for cycle " + std::to_string(c));
                bad = true;
                break;
            }
            const RouteSlot& first = (*slots)[idx];
            if (first.cycle != c) {
                add("route-connectivity", -1, e.id,
                    "claim " + slot_str(first.res, first.cycle) +
                        " out of order at cycle " + std::to_string(c));
                bad = true;
                break;
            }
            if (first.res.kind == Resource::Kind::Register) {
                if (first.res.pe != cur) {
                    add("route-connectivity", -1, e.id,
                        "register hold away from the value");
                    bad = true;
                    break;
                }
                int cap = a.enabled(cur) ? a.pe(cur).registers : 0;
                if (!m.infinite_registers && first.res.index >= cap)
                    add("register-capacity", -1, e.id,
                        slot_str(first.res, c) + " beyond capacity " +
                            std::to_string(cap));
                owners[{first.res, c % ii}].insert({e.src, c});
                idx++;
                continue;
            }
            if (first.res.kind != Resource::Kind::RoutePort) {
                add("route-connectivity", -1, e.id,
                    "route claims a non-routing resource " +
                        slot_str(first.res, c));
                bad = true;
                break;
            }
            int hops = 0;
            while (idx < slots->size() && (*slots)[idx].cycle == c) {
                const Resource& r = (*slots)[idx].res;
                if (r.kind != Resource::Kind::RoutePort) {
                    add("route-connectivity", -1, e.id,
                        "register and ports mixed within one cycle");
                    bad = true;
                    break;
                }
                if (r.pe != cur || !a.enabled(step(r.pe, r.dir))) {
                    add("route-connectivity", -1, e.id,
                        "disconnected hop " + slot_str(r, c));
                    bad = true;
                    break;
                }
                owners[{r, c % ii}].insert({e.src, c});
                cur = step(r.pe, r.dir);
                hops++;
                idx++;
            }
            if (bad) break;
            if (hops > a.hop_budget())
                add("route-connectivity", -1, e.id,
                    std::to_string(hops) + " hops exceed budget " +
                        std::to_string(a.hop_budget()) + " at cycle " +
                        std::to_string(c));
        }
        if (!bad) {
            if (idx != slots->size())
                add("route-connectivity", -1, e.id, "unused trailing claims");
            else if (cur != pd->second.pe)
                add("route-connectivity", -1, e.id,
                    "route ends away from the consumer");
        }
    }

    // exclusivity across all values
    for (const auto& [slot, own] : owners)
        if (own.size() > 1)
            add("route-exclusivity", -1, -1,
                slot_str(slot.first, slot.second) + " carries " +
                    std::to_string(own.size()) + " values");

    // config depth over every PE the mapping touches
    std::set<Coord> used;
    for (const auto& [id, p] : m.place) {
        (void)id;
        used.insert(p.pe);
    }
    for (const auto& [eid, slots] : m.routes) {
        (void)eid;
        for (const auto& s : slots) used.insert(s.res.pe);
    }
    for (const Coord& pe : used)
        if (a.enabled(pe) && ii > a.pe(pe).config_depth)
            add("config-depth", -1, -1,
                "ii " + std::to_string(ii) + " exceeds depth " +
                    std::to_string(a.pe(pe).config_depth) + " at (" +
                    std::to_string(pe.row) + "," + std::to_string(pe.col) +
                    ")");
    return out;
}

} // namespace gridmap
