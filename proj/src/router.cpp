#include "gridmap/router.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>
#include <tuple>

namespace gridmap {

std::optional<std::vector<RouteSlot>> route_one(const ArchSpec& a,
                                                const Occupancy& occ,
                                                int src_node, Coord src_pe,
                                                int depart, Coord dst_pe,
                                                int arrive,
                                                bool infinite_registers) {
    int ii = occ.ii;
    if (arrive < depart) return std::nullopt;
    if (arrive == depart)
        return src_pe == dst_pe
                   ? std::make_optional(std::vector<RouteSlot>{})
                   : std::nullopt;

    struct State {
        int cost;
        int cycle;
        Coord pe;
    };
    auto key = [](const State& s) {
        return std::tuple(s.cost, s.cycle, s.pe.row, s.pe.col);
    };
    auto later = [&](const State& x, const State& y) { return key(x) > key(y); };
    std::priority_queue<State, std::vector<State>, decltype(later)> pq(later);
    using StateKey = std::pair<int, Coord>;
    std::map<StateKey, StateKey> parent;
    std::map<StateKey, std::vector<RouteSlot>> via; // claims on the arc in
    std::map<StateKey, int> best;
    std::set<StateKey> settled;

    auto push = [&](const State& s, StateKey from, std::vector<RouteSlot> claims) {
        StateKey k{s.cycle, s.pe};
        auto it = best.find(k);
        if (it != best.end() && it->second <= s.cost) return; // first tie wins
        best[k] = s.cost;
        parent[k] = from;
        via[k] = std::move(claims);
        pq.push(s);
    };

    push({0, depart, src_pe}, {-1, src_pe}, {});
    while (!pq.empty()) {
        State s = pq.top();
        pq.pop();
        StateKey k{s.cycle, s.pe};
        if (settled.count(k)) continue;
        if (best[k] != s.cost) continue;
        settled.insert(k);

        if (s.cycle == arrive && s.pe == dst_pe) {
            // collect arcs goal->start, then emit claims in travel order
            std::vector<StateKey> chain{k};
            while (parent.count(chain.back()) &&
                   parent[chain.back()].first != -1)
                chain.push_back(parent[chain.back()]);
            std::vector<RouteSlot> out;
            for (auto it = chain.rbegin(); it != chain.rend(); ++it)
                for (const auto& c : via[*it]) out.push_back(c);
            return out;
        }
        if (s.cycle == arrive) continue;

        int cmod = s.cycle % ii;

        // hold in a register on this PE
        {
            int nregs = a.pe(s.pe).registers + (infinite_registers ? 64 : 0);
            int chosen = -1, cost = 1;
            for (int r = 0; r < nregs; r++) {
                auto it = occ.route.find({reg(s.pe, r), cmod});
                if (it != occ.route.end() &&
                    it->second == RouteOwner{src_node, s.cycle}) {
                    chosen = r;
                    cost = 0;
                    break;
                }
            }
            if (chosen < 0)
                for (int r = 0; r < nregs; r++)
                    if (!occ.route.count({reg(s.pe, r), cmod})) {
                        chosen = r;
                        break;
                    }
            if (chosen >= 0)
                push({s.cost + cost, s.cycle + 1, s.pe}, k,
                     {{reg(s.pe, chosen), s.cycle}});
        }

        // port chains within this cycle, ending the cycle at the endpoint
        int budget = a.hop_budget();
        struct ChainEnd {
            int cost;
            int hops;
            std::vector<RouteSlot> claims;
            std::vector<int> sig;
        };
        std::map<Coord, ChainEnd> ends;
        std::vector<RouteSlot> claims;
        std::vector<int> sig;
        std::function<void(Coord, int, int)> walk = [&](Coord at, int hops,
                                                        int cost) {
            if (hops > 0) {
                ChainEnd cand{cost, hops, claims, sig};
                auto it = ends.find(at);
                if (it == ends.end() ||
                    std::tuple(cand.cost, cand.hops, cand.sig) <
                        std::tuple(it->second.cost, it->second.hops,
                                   it->second.sig))
                    ends[at] = std::move(cand);
            }
            if (hops == budget) return;
            for (int d = 0; d < kDirCount; d++) {
                Coord nxt = step(at, Dir(d));
                if (!a.enabled(nxt)) continue;
                Resource port = route_port(at, Dir(d));
                auto it = occ.route.find({port, cmod});
                int c = 1;
                if (it != occ.route.end()) {
                    if (it->second != RouteOwner{src_node, s.cycle}) continue;
                    c = 0;
                }
                claims.push_back({port, s.cycle});
                sig.push_back(at.row * 1000 + at.col * 10 + d);
                walk(nxt, hops + 1, cost + c);
                sig.pop_back();
                claims.pop_back();
            }
        };
        walk(s.pe, 0, 0);
        for (auto& [q, ce] : ends)
            push({s.cost + ce.cost, s.cycle + 1, q}, k, std::move(ce.claims));
    }
    return std::nullopt;
}

std::optional<std::vector<RouteSlot>> commit_route(
    Occupancy& occ, int src_node, const std::vector<RouteSlot>& claims) {
    std::vector<RouteSlot> fresh;
    for (const auto& c : claims) {
        auto key = std::pair(c.res, c.cycle % occ.ii);
        auto it = occ.route.find(key);
        if (it == occ.route.end()) {
            occ.route[key] = {src_node, c.cycle};
            fresh.push_back(c);
        } else if (it->second != RouteOwner{src_node, c.cycle}) {
            rollback_route(occ, fresh);
            return std::nullopt;
        }
    }
    return fresh;
}

void rollback_route(Occupancy& occ, const std::vector<RouteSlot>& fresh) {
    for (const auto& c : fresh) occ.route.erase({c.res, c.cycle % occ.ii});
}

} // namespace gridmap
