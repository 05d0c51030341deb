#include "gridmap/mapper.hpp"

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <random>
#include <sstream>

#include "gridmap/error.hpp"
#include "gridmap/router.hpp"

namespace gridmap {

const char* map_status_name(MapStatus s) {
    switch (s) {
    case MapStatus::Mapped: return "mapped";
    case MapStatus::Infeasible: return "infeasible";
    case MapStatus::BudgetExhausted: return "budget-exhausted";
    case MapStatus::MaxIiReached: return "max-ii";
    case MapStatus::NoCapablePe: return "no-capable-pe";
    }
    return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// capable PEs per node; PEs whose config memory cannot hold ii contexts are
// unusable at this ii
std::vector<std::set<Coord>> capable_sets(const Dfg& g, const ArchSpec& a,
                                          int ii) {
    std::vector<std::set<Coord>> out(g.nodes.size());
    for (const auto& nd : g.nodes) {
        std::set<Coord> s = capable_pes(a, nd.opcode);
        std::erase_if(s, [&](const Coord& c) { return a.pe(c).config_depth < ii; });
        out[size_t(nd.id)] = std::move(s);
    }
    return out;
}

// schedule-time bounds for `node` implied by already-placed neighbours,
// covering data and order edges in both directions
std::pair<int, int> place_bounds(const Dfg& g, const ArchSpec& a, int ii,
                                 int horizon,
                                 const std::map<int, Placement>& placed,
                                 int node) {
    int lb = 0, ub = horizon - 1;
    for (const auto& e : g.edges) {
        if (e.dst == node) {
            auto it = placed.find(e.src);
            if (it != placed.end())
                lb = std::max(lb, it->second.time + edge_latency(g, e, a) -
                                      ii * e.distance);
        }
        if (e.src == node) {
            auto it = placed.find(e.dst);
            if (it != placed.end())
                ub = std::min(ub, it->second.time - edge_latency(g, e, a) +
                                      ii * e.distance);
        }
    }
    return {lb, ub};
}

struct StepUndo {
    std::vector<RouteSlot> fresh; // rollback set across all edges routed here
    std::vector<int> edges;       // route map entries added here
};

// Routes every data edge between `node` and already-placed nodes, in edge-id
// order, committing as it goes. On any failure the occupancy and route map
// are restored and false is returned.
bool route_new_edges(const Dfg& g, const ArchSpec& a, Occupancy& occ,
                     const std::map<int, Placement>& placed, int node,
                     bool inf_regs,
                     std::map<int, std::vector<RouteSlot>>& routes,
                     StepUndo& undo) {
    auto fail = [&] {
        rollback_route(occ, undo.fresh);
        for (int id : undo.edges) routes.erase(id);
        undo = {};
        return false;
    };
    for (const auto& e : g.edges) {
        if (e.order_only) continue;
        if (e.src != node && e.dst != node) continue;
        auto ps = placed.find(e.src);
        auto pd = placed.find(e.dst);
        if (ps == placed.end() || pd == placed.end()) continue;
        int lat = edge_latency(g, e, a);
        int depart = ps->second.time + lat;
        int arrive = pd->second.time + occ.ii * e.distance;
        auto claims = route_one(a, occ, e.src, ps->second.pe, depart,
                                pd->second.pe, arrive, inf_regs);
        if (!claims) return fail();
        auto fresh = commit_route(occ, e.src, *claims);
        if (!fresh) return fail();
        undo.fresh.insert(undo.fresh.end(), fresh->begin(), fresh->end());
        if (!claims->empty()) {
            routes[e.id] = std::move(*claims);
            undo.edges.push_back(e.id);
        }
    }
    return true;
}

void undo_step(Occupancy& occ, std::map<int, std::vector<RouteSlot>>& routes,
               const StepUndo& undo) {
    rollback_route(occ, undo.fresh);
    for (int id : undo.edges) routes.erase(id);
}

Mapping finish_mapping(int ii, bool inf_regs,
                       std::map<int, Placement> placed,
                       std::map<int, std::vector<RouteSlot>> routes,
                       Clock::time_point t0) {
    Mapping m;
    m.ii = ii;
    m.infinite_registers = inf_regs;
    m.place = std::move(placed);
    m.routes = std::move(routes);
    m.wall_ms = ms_since(t0);
    return m;
}

} // namespace

// ---------------------------------------------------------------------------
// Exhaustive branch-and-bound

namespace {

struct Exhaustive {
    const Dfg& g;
    const ArchSpec& a;
    int ii;
    int horizon;
    const MapOptions& opt;
    std::vector<int> order;
    std::vector<std::set<Coord>> capable;
    Occupancy occ;
    std::map<int, Placement> placed;
    std::map<int, std::vector<RouteSlot>> routes;
    std::uint64_t visited = 0;
    bool budget_hit = false;

    bool dfs(size_t k) {
        if (k == order.size()) return true;
        int node = order[k];
        auto [lb, ub] = place_bounds(g, a, ii, horizon, placed, node);
        for (int t = lb; t <= ub; t++) {
            for (const Coord& pe : capable[size_t(node)]) {
                if (++visited > opt.budget) {
                    budget_hit = true;
                    return false;
                }
                if (!occ.fu_free(pe, t % ii)) continue;
                occ.fu[{pe, t % ii}] = node;
                placed[node] = {pe, t};
                StepUndo undo;
                if (route_new_edges(g, a, occ, placed, node,
                                    opt.infinite_registers, routes, undo)) {
                    if (dfs(k + 1)) return true;
                    undo_step(occ, routes, undo);
                }
                placed.erase(node);
                occ.fu.erase({pe, t % ii});
                if (budget_hit) return false;
            }
        }
        return false;
    }
};

} // namespace

MapResult map_exhaustive(const Dfg& g, const ArchSpec& a, int ii,
                         const MapOptions& opt) {
    if (ii < 1) throw SemanticError("ii must be at least 1");
    auto t0 = Clock::now();
    MapResult r;
    for (const auto& nd : g.nodes)
        if (capable_pes(a, nd.opcode).empty()) {
            r.status = MapStatus::NoCapablePe;
            r.detail = std::string("no PE can execute ") +
                       opcode_name(nd.opcode);
            return r;
        }
    auto capable = capable_sets(g, a, ii);
    for (const auto& s : capable)
        if (s.empty()) {
            r.status = MapStatus::Infeasible;
            r.detail = "config depth below ii on every capable PE";
            return r;
        }

    // sound pruning: recurrence bound and slot capacity
    try {
        (void)modulo_asap(g, a, ii);
    } catch (const SemanticError&) {
        r.status = MapStatus::Infeasible;
        r.detail = "ii below the recurrence minimum";
        return r;
    }
    std::int64_t pes = std::int64_t(a.enabled_pes().size());
    std::int64_t mem_pes = 0;
    for (const Coord& pe : a.enabled_pes())
        if (a.is_spm_pe(pe)) mem_pes++;
    std::int64_t nodes = std::int64_t(g.nodes.size());
    std::int64_t mem_nodes = 0;
    for (const auto& nd : g.nodes)
        if (is_mem_op(nd.opcode)) mem_nodes++;
    if (nodes > pes * ii || mem_nodes > mem_pes * ii) {
        r.status = MapStatus::Infeasible;
        if (nodes > pes * ii)
            r.detail = std::to_string(nodes) + " nodes exceed " +
                       std::to_string(pes * ii) + " FU slots";
        else
            r.detail = std::to_string(mem_nodes) + " memory nodes exceed " +
                       std::to_string(mem_pes * ii) + " SPM-attached FU slots";
        return r;
    }

    Exhaustive ex{g,  a,  ii, schedule_horizon(g, ii), opt, g.topo_order(),
                  std::move(capable), Occupancy{ii, {}, {}},
                  {}, {}, 0, false};
    bool found = ex.dfs(0);
    r.visited = ex.visited;
    if (found) {
        r.status = MapStatus::Mapped;
        r.mapping = finish_mapping(ii, opt.infinite_registers,
                                   std::move(ex.placed), std::move(ex.routes),
                                   t0);
    } else if (ex.budget_hit) {
        r.status = MapStatus::BudgetExhausted;
        r.detail = "placement budget " + std::to_string(opt.budget) +
                   " exhausted";
    } else {
        r.status = MapStatus::Infeasible;
        r.detail = "search space exhausted";
    }
    return r;
}

// ---------------------------------------------------------------------------
// Priority-list pass shared by the heuristic and backtracking mappers

namespace {

struct Candidate {
    int cost;
    Coord pe;
    int t;
    auto key() const { return std::tuple(cost, pe.row, pe.col, t); }
    bool operator<(const Candidate& o) const { return key() < o.key(); }
};

struct ListPass {
    const Dfg& g;
    const ArchSpec& a;
    int ii;
    const MapOptions& opt;
    std::vector<std::set<Coord>> capable;
    std::vector<int> asap;
    int horizon;
    Occupancy occ;
    std::map<int, Placement> placed;
    std::map<int, std::vector<RouteSlot>> routes;
    std::map<Coord, int> ops_on;
    std::uint64_t visited = 0;
    std::string fail_detail;

    // schedule window of `node` from longest-path relaxation over the whole
    // graph with placed nodes pinned; direct-neighbour bounds are too weak
    // once distance-carried cycles pass through unplaced nodes
    std::pair<int, int> pinned_window(int node) {
        size_t n = g.nodes.size();
        std::vector<int> lo(n), hi(n, horizon - 1);
        for (size_t i = 0; i < n; i++) lo[i] = asap[i];
        for (const auto& [id, p] : placed) lo[size_t(id)] = hi[size_t(id)] = p.time;
        for (size_t pass = 0; pass <= n; pass++) {
            bool changed = false;
            for (const auto& e : g.edges) {
                int w = edge_latency(g, e, a) - ii * e.distance;
                if (!placed.count(e.dst) && lo[size_t(e.src)] + w > lo[size_t(e.dst)]) {
                    lo[size_t(e.dst)] = lo[size_t(e.src)] + w;
                    changed = true;
                }
                if (!placed.count(e.src) && hi[size_t(e.dst)] - w < hi[size_t(e.src)]) {
                    hi[size_t(e.src)] = hi[size_t(e.dst)] - w;
                    changed = true;
                }
            }
            if (!changed) break;
        }
        return {lo[size_t(node)], hi[size_t(node)]};
    }

    // optimistic routing distance for placing `node` at (pe, t): per data
    // edge to a placed endpoint, port hops plus held-register cycles; -1
    // when some gap cannot cover its manhattan distance even at full hop
    // budget, so the slot is provably unroutable
    int estimate(int node, const Coord& pe, int t) {
        int sum = 0;
        for (const auto& e : g.edges) {
            if (e.order_only) continue;
            int other;
            bool out = e.src == node;
            if (out)
                other = e.dst;
            else if (e.dst == node)
                other = e.src;
            else
                continue;
            auto it = placed.find(other);
            if (it == placed.end()) continue;
            const Placement& po = it->second;
            int depart = (out ? t : po.time) + edge_latency(g, e, a);
            int arrive = (out ? po.time : t) + ii * e.distance;
            int gap = arrive - depart;
            int man = std::abs(pe.row - po.pe.row) +
                      std::abs(pe.col - po.pe.col);
            if (gap < 0 || man > gap * a.hop_budget()) return -1;
            int travel = (man + a.hop_budget() - 1) / a.hop_budget();
            sum += man + std::max(0, gap - travel);
        }
        return sum;
    }

    // candidates carry the estimated cost; the real route is attempted only
    // when a candidate is committed, which keeps the pass cheap
    std::vector<Candidate> enumerate(int node) {
        auto [lb, ub] = pinned_window(node);
        int ubw = std::min(ub, lb + 2 * ii - 1);
        std::vector<Candidate> cands;
        for (int t = lb; t <= ubw; t++)
            for (const Coord& pe : capable[size_t(node)]) {
                visited++;
                if (!occ.fu_free(pe, t % ii)) continue;
                int est = estimate(node, pe, t);
                if (est < 0) continue;
                cands.push_back({est + 2 * ops_on[pe], pe, t});
            }
        std::sort(cands.begin(), cands.end());
        return cands;
    }

    void dump_failure(int node) {
        auto [lb0, ub] = pinned_window(node);
        fprintf(stderr,
                "[map] ii=%d node=%d op=%s asap=%d lb0=%d ub=%d placed=%zu\n",
                ii, node, opcode_name(g.node(node).opcode),
                asap[size_t(node)], lb0, ub, placed.size());
        int ubw = std::min(ub, lb0 + 2 * ii - 1);
        for (int t = lb0; t <= ubw; t++)
            for (const Coord& pe : capable[size_t(node)]) {
                const char* why = "ok?";
                if (!occ.fu_free(pe, t % ii)) {
                    why = "fu-busy";
                } else {
                    occ.fu[{pe, t % ii}] = node;
                    placed[node] = {pe, t};
                    StepUndo undo;
                    if (route_new_edges(g, a, occ, placed, node,
                                        opt.infinite_registers, routes,
                                        undo)) {
                        why = "routed";
                        undo_step(occ, routes, undo);
                    } else {
                        why = "route-fail";
                    }
                    placed.erase(node);
                    occ.fu.erase({pe, t % ii});
                }
                fprintf(stderr, "[map]   t=%d pe=(%d,%d): %s\n", t, pe.row,
                        pe.col, why);
            }
        for (const auto& e : g.edges) {
            if (e.src != node && e.dst != node) continue;
            int other = e.src == node ? e.dst : e.src;
            auto it = placed.find(other);
            fprintf(stderr,
                "[map]   e%d %d->%d slot=%d d=%d%s other %s",
                e.id, e.src, e.dst, e.operand, e.distance,
                e.order_only ? " order" : "", it == placed.end() ? "unplaced"
                                                                 : "at");
            if (it != placed.end())
                fprintf(stderr, " (%d,%d) t=%d", it->second.pe.row,
                        it->second.pe.col, it->second.time);
            fprintf(stderr, "\n");
        }
    }

    // run one pass; window_k == 0 means plain greedy (no reconsideration)
    bool run(const std::vector<int>& order, int window_k, int pops_budget) {
        struct Frame {
            int node;
            std::vector<Candidate> cands;
            size_t idx = 0;
            StepUndo undo;
            Coord pe;
            int t = 0;
        };
        std::vector<Frame> frames;
        size_t i = 0;
        int anchor = -1;
        while (i < order.size()) {
            if (frames.size() == i) frames.push_back({order[i], enumerate(order[i]), 0, {}, {}, 0});
            Frame& f = frames[i];
            bool committed = false;
            while (f.idx < f.cands.size()) {
                const Candidate& c = f.cands[f.idx];
                if (occ.fu_free(c.pe, c.t % ii)) {
                    occ.fu[{c.pe, c.t % ii}] = f.node;
                    placed[f.node] = {c.pe, c.t};
                    StepUndo undo;
                    if (route_new_edges(g, a, occ, placed, f.node,
                                        opt.infinite_registers, routes, undo)) {
                        f.undo = std::move(undo);
                        f.pe = c.pe;
                        f.t = c.t;
                        committed = true;
                        break;
                    }
                    placed.erase(f.node);
                    occ.fu.erase({c.pe, c.t % ii});
                }
                f.idx++;
            }
            if (committed) {
                if (std::getenv("GRIDMAP_MAP_DEBUG"))
                    fprintf(stderr, "[map] ii=%d #%zu node=%d %s -> (%d,%d) t=%d\n",
                            ii, i, f.node, opcode_name(g.node(f.node).opcode),
                            f.pe.row, f.pe.col, f.t);
                ops_on[f.pe]++;
                i++;
                continue;
            }
            // node i has no options left under the current prefix
            frames.pop_back();
            anchor = std::max(anchor, int(i));
            if (i == 0 || anchor - int(i - 1) > window_k || pops_budget <= 0) {
                std::ostringstream os;
                os << "node " << order[i] << " ("
                   << opcode_name(g.node(order[i]).opcode)
                   << ") has no feasible slot at ii " << ii;
                fail_detail = os.str();
                if (std::getenv("GRIDMAP_MAP_DEBUG")) dump_failure(order[i]);
                return false;
            }
            pops_budget--;
            Frame& p = frames[i - 1];
            ops_on[p.pe]--;
            undo_step(occ, routes, p.undo);
            p.undo = {};
            placed.erase(p.node);
            occ.fu.erase({p.pe, p.t % ii});
            p.idx++;
            i--;
        }
        return true;
    }
};

// Tarjan strongly connected components over all schedule edges; recurrence
// cycles must place as contiguous blocks or later placements squeeze their
// remaining members' windows from both sides
struct SccFinder {
    std::vector<std::vector<int>> adj;
    std::vector<int> idx, low, comp, stk;
    std::vector<bool> on;
    int next = 0, ncomp = 0;

    explicit SccFinder(const Dfg& g) {
        size_t n = g.nodes.size();
        adj.resize(n);
        idx.assign(n, -1);
        low.assign(n, 0);
        comp.assign(n, -1);
        on.assign(n, false);
        for (const auto& e : g.edges) adj[size_t(e.src)].push_back(e.dst);
        for (size_t v = 0; v < n; v++)
            if (idx[v] < 0) dfs(int(v));
    }

    void dfs(int v) {
        idx[size_t(v)] = low[size_t(v)] = next++;
        stk.push_back(v);
        on[size_t(v)] = true;
        for (int w : adj[size_t(v)]) {
            if (idx[size_t(w)] < 0) {
                dfs(w);
                low[size_t(v)] = std::min(low[size_t(v)], low[size_t(w)]);
            } else if (on[size_t(w)]) {
                low[size_t(v)] = std::min(low[size_t(v)], idx[size_t(w)]);
            }
        }
        if (low[size_t(v)] != idx[size_t(v)]) return;
        for (;;) {
            int w = stk.back();
            stk.pop_back();
            on[size_t(w)] = false;
            comp[size_t(w)] = ncomp;
            if (w == v) break;
        }
        ncomp++;
    }
};

// priority-topological order over the recurrence condensation: a component
// is ready once every producer component is ordered; among ready ones the
// tightest (slack, asap, id) key goes first and recurrence members stay
// contiguous in asap order. producers-first means a placed consumer can
// never pin an open window shut, while the key still favours critical
// recurrences
std::vector<int> priority_order(const Dfg& g, const std::vector<int>& asap,
                                const std::vector<int>& alap) {
    SccFinder scc(g);
    std::vector<std::tuple<int, int, int>> key(
        size_t(scc.ncomp), {INT_MAX, INT_MAX, INT_MAX});
    std::vector<std::vector<int>> members(size_t(scc.ncomp));
    for (size_t v = 0; v < g.nodes.size(); v++) {
        auto cand = std::tuple(alap[v] - asap[v], asap[v], int(v));
        auto& k = key[size_t(scc.comp[v])];
        k = std::min(k, cand);
        members[size_t(scc.comp[v])].push_back(int(v));
    }
    std::vector<int> indeg(size_t(scc.ncomp), 0);
    for (const auto& e : g.edges)
        if (scc.comp[size_t(e.src)] != scc.comp[size_t(e.dst)])
            indeg[size_t(scc.comp[size_t(e.dst)])]++;
    std::set<std::pair<std::tuple<int, int, int>, int>> ready;
    for (int c = 0; c < scc.ncomp; c++)
        if (indeg[size_t(c)] == 0) ready.insert({key[size_t(c)], c});
    std::vector<int> order;
    order.reserve(g.nodes.size());
    while (!ready.empty()) {
        int c = ready.begin()->second;
        ready.erase(ready.begin());
        std::sort(members[size_t(c)].begin(), members[size_t(c)].end(),
                  [&](int x, int y) {
                      return std::tuple(asap[size_t(x)], x) <
                             std::tuple(asap[size_t(y)], y);
                  });
        order.insert(order.end(), members[size_t(c)].begin(),
                     members[size_t(c)].end());
        for (const auto& e : g.edges) {
            int cd = scc.comp[size_t(e.dst)];
            if (scc.comp[size_t(e.src)] == c && cd != c &&
                --indeg[size_t(cd)] == 0)
                ready.insert({key[size_t(cd)], cd});
        }
    }
    return order;
}

MapResult map_list_sweep(const Dfg& g, const ArchSpec& a,
                         const MapOptions& opt, int window_k) {
    auto t0 = Clock::now();
    MapResult r;
    for (const auto& nd : g.nodes)
        if (capable_pes(a, nd.opcode).empty()) {
            r.status = MapStatus::NoCapablePe;
            r.detail = std::string("no PE can execute ") +
                       opcode_name(nd.opcode);
            return r;
        }
    int lo = min_ii(g, a);
    ArchSpec conservative = a;
    conservative.interconnect.hops_per_cycle = 1;
    for (int ii = lo; ii <= opt.max_ii; ii++) {
        auto capable = capable_sets(g, a, ii);
        if (std::any_of(capable.begin(), capable.end(),
                        [](const auto& s) { return s.empty(); })) {
            r.detail = "config depth below ii " + std::to_string(ii);
            continue;
        }
        std::vector<int> asap = modulo_asap(g, a, ii);
        std::vector<int> alap = modulo_alap(g, a, ii, asap);
        std::vector<int> order = priority_order(g, asap, alap);
        auto attempt = [&](const ArchSpec& arch) {
            ListPass pass{g, arch, ii, opt, capable_sets(g, arch, ii), asap,
                          schedule_horizon(g, ii), Occupancy{ii, {}, {}},
                          {}, {}, {}, 0, {}};
            int pops = window_k > 0 ? window_k * int(g.nodes.size()) : 0;
            bool ok = pass.run(order, window_k, pops);
            r.visited += pass.visited;
            if (!ok) {
                r.detail = pass.fail_detail;
                return false;
            }
            r.status = MapStatus::Mapped;
            r.mapping = finish_mapping(ii, opt.infinite_registers,
                                       std::move(pass.placed),
                                       std::move(pass.routes), t0);
            return true;
        };
        if (attempt(a)) return r;
        // richer same-cycle reach shifts the greedy cost surface and can
        // steer the search away from solutions a plain one-hop walk still
        // finds; a mapping routed under the tighter discipline stays valid
        // here, so retry this II before conceding it
        if (a.hop_budget() > 1 && attempt(conservative)) return r;
    }
    r.status = MapStatus::MaxIiReached;
    if (r.detail.empty()) r.detail = "no II up to " + std::to_string(opt.max_ii);
    return r;
}

} // namespace

MapResult map_heuristic(const Dfg& g, const ArchSpec& a,
                        const MapOptions& opt) {
    return map_list_sweep(g, a, opt, 0);
}

MapResult map_backtrack(const Dfg& g, const ArchSpec& a,
                        const MapOptions& opt) {
    return map_list_sweep(g, a, opt, opt.backtrack_depth);
}

// ---------------------------------------------------------------------------
// Simulated annealing at a fixed II

MapResult map_anneal(const Dfg& g, const ArchSpec& a, int ii,
                     const MapOptions& opt) {
    auto t0 = Clock::now();
    MapResult r;
    for (const auto& nd : g.nodes)
        if (capable_pes(a, nd.opcode).empty()) {
            r.status = MapStatus::NoCapablePe;
            r.detail = std::string("no PE can execute ") +
                       opcode_name(nd.opcode);
            return r;
        }
    int lo = min_ii(g, a);
    if (ii < lo)
        throw SemanticError("ii " + std::to_string(ii) + " below min_ii " +
                            std::to_string(lo));
    auto capable_s = capable_sets(g, a, ii);
    std::vector<std::vector<Coord>> capable(g.nodes.size());
    for (size_t i = 0; i < capable_s.size(); i++) {
        if (capable_s[i].empty()) {
            r.status = MapStatus::Infeasible;
            r.detail = "config depth below ii on every capable PE";
            return r;
        }
        capable[i].assign(capable_s[i].begin(), capable_s[i].end());
    }
    int n = int(g.nodes.size());
    if (n == 0) {
        r.status = MapStatus::Mapped;
        r.mapping = finish_mapping(ii, opt.infinite_registers, {}, {}, t0);
        return r;
    }
    std::vector<int> asap = modulo_asap(g, a, ii);
    int horizon = *std::max_element(asap.begin(), asap.end()) + 2 * ii + 2;

    std::vector<Placement> cur(static_cast<size_t>(n));
    for (int id = 0; id < n; id++)
        cur[size_t(id)] = {capable[size_t(id)][size_t(id) % capable[size_t(id)].size()],
                           asap[size_t(id)]};

    std::set<std::vector<int>> failed;
    auto fingerprint = [&](const std::vector<Placement>& p) {
        std::vector<int> fp;
        fp.reserve(p.size() * 3);
        for (const auto& pl : p) {
            fp.push_back(pl.pe.row);
            fp.push_back(pl.pe.col);
            fp.push_back(pl.time);
        }
        return fp;
    };

    // cost = FU-slot conflicts + timing-violation slack + route-length
    // shortfall, in equal weights; zero-cost states get the real router
    auto eval = [&](const std::vector<Placement>& p) {
        int cost = 0;
        std::map<std::pair<Coord, int>, int> cnt;
        for (const auto& pl : p) cnt[{pl.pe, pl.time % ii}]++;
        for (const auto& [k, c] : cnt) {
            (void)k;
            if (c > 1) cost += c - 1;
        }
        for (const auto& e : g.edges) {
            const Placement& ps = p[size_t(e.src)];
            const Placement& pd = p[size_t(e.dst)];
            int slack = pd.time + ii * e.distance - ps.time -
                        edge_latency(g, e, a);
            if (slack < 0) {
                cost += -slack;
                continue;
            }
            if (e.order_only) continue;
            int man = std::abs(ps.pe.row - pd.pe.row) +
                      std::abs(ps.pe.col - pd.pe.col);
            int need = (man + a.hop_budget() - 1) / a.hop_budget();
            if (need > slack) cost += need - slack;
        }
        if (failed.count(fingerprint(p))) cost += 1;
        return cost;
    };

    // one full greedy route over a conflict-free placement
    auto try_route = [&](const std::vector<Placement>& p)
        -> std::optional<Mapping> {
        Occupancy occ{ii, {}, {}};
        std::map<int, Placement> place;
        for (int id = 0; id < n; id++) {
            const Placement& pl = p[size_t(id)];
            occ.fu[{pl.pe, pl.time % ii}] = id;
            place[id] = pl;
        }
        std::map<int, std::vector<RouteSlot>> routes;
        for (const auto& e : g.edges) {
            if (e.order_only) continue;
            const Placement& ps = p[size_t(e.src)];
            const Placement& pd = p[size_t(e.dst)];
            int depart = ps.time + edge_latency(g, e, a);
            int arrive = pd.time + ii * e.distance;
            auto claims = route_one(a, occ, e.src, ps.pe, depart, pd.pe,
                                    arrive, opt.infinite_registers);
            if (!claims) return std::nullopt;
            if (!commit_route(occ, e.src, *claims)) return std::nullopt;
            if (!claims->empty()) routes[e.id] = std::move(*claims);
        }
        return finish_mapping(ii, opt.infinite_registers, std::move(place),
                              std::move(routes), t0);
    };

    std::mt19937_64 rng(opt.seed);
    auto uniform = [&] { return double(rng() >> 11) * 0x1.0p-53; };
    std::uint64_t iters = opt.anneal_iters
                              ? opt.anneal_iters
                              : std::uint64_t(50) * std::uint64_t(n) *
                                    std::uint64_t(ii);
    double temp = opt.t0;
    int cur_cost = eval(cur);
    for (std::uint64_t it = 0; it < iters; it++) {
        r.visited++;
        if (cur_cost == 0) {
            auto m = try_route(cur);
            if (m) {
                r.status = MapStatus::Mapped;
                r.mapping = std::move(m);
                return r;
            }
            failed.insert(fingerprint(cur));
            cur_cost = eval(cur);
        }
        int node = int(rng() % std::uint64_t(n));
        Placement old = cur[size_t(node)];
        const auto& cap = capable[size_t(node)];
        Coord pe = cap[size_t(rng() % cap.size())];
        int delta = int(rng() % std::uint64_t(2 * ii + 1)) - ii;
        int t = std::clamp(old.time + delta, 0, horizon - 1);
        cur[size_t(node)] = {pe, t};
        int cost = eval(cur);
        int d = cost - cur_cost;
        if (d <= 0 || std::exp(-double(d) / temp) > uniform()) {
            cur_cost = cost;
        } else {
            cur[size_t(node)] = old;
        }
        temp *= opt.cooling;
    }
    if (cur_cost == 0) {
        auto m = try_route(cur);
        if (m) {
            r.status = MapStatus::Mapped;
            r.mapping = std::move(m);
            return r;
        }
    }
    r.status = MapStatus::BudgetExhausted;
    r.detail = "annealing finished at cost " + std::to_string(cur_cost);
    return r;
}

// ---------------------------------------------------------------------------

MapReport mapping_report(const Dfg& g, const ArchSpec& a, const Mapping& m) {
    auto violations = validate_mapping(g, a, m);
    if (!violations.empty())
        throw SemanticError("invalid mapping: " + violations.front().constraint +
                            " (" + violations.front().detail + ")");
    MapReport rep;
    rep.op_count = int(g.nodes.size());
    rep.ii = m.ii;
    rep.wall_ms = m.wall_ms;
    std::map<Coord, int> ops;
    for (const auto& [id, p] : m.place) {
        (void)id;
        ops[p.pe]++;
    }
    std::set<Coord> routing;
    for (const auto& [eid, slots] : m.routes) {
        (void)eid;
        for (const auto& s : slots) routing.insert(s.res.pe);
    }
    for (const Coord& pe : a.enabled_pes()) {
        auto it = ops.find(pe);
        int c = it == ops.end() ? 0 : it->second;
        if (c == 0) {
            rep.unused_pe++;
            if (routing.count(pe)) rep.route_only_pe++;
        }
        rep.max_ops_per_pe = std::max(rep.max_ops_per_pe, c);
    }
    rep.speedup = m.ii > 0 ? double(rep.op_count) / double(m.ii) : 0.0;
    return rep;
}

std::map<Coord, double> utilization(const ArchSpec& a, const Mapping& m) {
    std::map<Coord, double> out;
    for (const Coord& pe : a.enabled_pes()) out[pe] = 0.0;
    for (const auto& [id, p] : m.place) {
        (void)id;
        out[p.pe] += 1.0 / double(m.ii);
    }
    return out;
}

} // namespace gridmap
