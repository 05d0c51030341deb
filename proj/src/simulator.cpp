#include "gridmap/simulator.hpp"

#include <algorithm>
#include <ostream>

#include "gridmap/error.hpp"

namespace gridmap {

namespace {

struct Fire {
    Coord pe;
    int time = 0; // cycle offset within one iteration
    int node = 0;
};

std::int32_t eval_node(const Dfg& g, const DfgNode& nd,
                       const std::int32_t ops[3],
                       const std::vector<std::int32_t>& mem_snapshot,
                       std::vector<std::pair<std::int64_t, std::int32_t>>& stores,
                       std::int64_t cycle, Coord pe) {
    auto here = [&] {
        return " at cycle " + std::to_string(cycle) + " on pe (" +
               std::to_string(pe.row) + "," + std::to_string(pe.col) +
               "), node " + std::to_string(nd.id);
    };
    switch (nd.opcode) {
    case Opcode::Add: return wrap_add(ops[0], ops[1]);
    case Opcode::Sub: return wrap_sub(ops[0], ops[1]);
    case Opcode::Mul: return wrap_mul(ops[0], ops[1]);
    case Opcode::Div:
        if (ops[1] == 0) throw EvalError("division by zero" + here());
        return wrap_div(ops[0], ops[1]);
    case Opcode::Cmp: return rel_holds(nd.rel, ops[0], ops[1]) ? 1 : 0;
    case Opcode::Sel: return ops[0] != 0 ? ops[1] : ops[2];
    case Opcode::Const: return nd.value;
    case Opcode::Load:
        if (ops[0] < 0 || size_t(ops[0]) >= mem_snapshot.size())
            throw EvalError("load address " + std::to_string(ops[0]) +
                            " out of bounds" + here());
        return mem_snapshot[size_t(ops[0])];
    case Opcode::Store:
        if (ops[0] < 0 || size_t(ops[0]) >= mem_snapshot.size())
            throw EvalError("store address " + std::to_string(ops[0]) +
                            " out of bounds" + here());
        stores.push_back({ops[0], ops[1]});
        return ops[1];
    }
    (void)g;
    throw SemanticError("unknown opcode");
}

} // namespace

SimResult simulate(const ArchSpec& a, const Dfg& g, const Mapping& m,
                   const MemImage& input, std::int64_t iterations,
                   const SimOptions& opt) {
    {
        auto v = validate_mapping(g, a, m);
        if (!v.empty())
            throw SemanticError("simulate needs a valid mapping: " +
                                v.front().constraint + " (" + v.front().detail +
                                ")");
    }
    if (iterations < 0) throw SemanticError("iterations must be >= 0");

    SimResult out;
    out.mem = input;
    out.stats.iterations = iterations;
    out.stats.pe_utilization = utilization(a, m);
    if (iterations == 0 || g.nodes.empty()) return out;

    int depth = 0;
    std::vector<Fire> fires;
    for (const auto& [id, p] : m.place) {
        depth = std::max(depth, p.time + effective_latency(g.node(id), a));
        fires.push_back({p.pe, p.time, id});
    }
    // deterministic per-cycle walk; reverse order must give identical results
    std::sort(fires.begin(), fires.end(), [](const Fire& x, const Fire& y) {
        return std::tuple(x.pe.row, x.pe.col, x.time, x.node) <
               std::tuple(y.pe.row, y.pe.col, y.time, y.node);
    });
    if (opt.reverse_pe_order) std::reverse(fires.begin(), fires.end());

    std::int64_t total = (iterations - 1) * m.ii + depth;
    out.stats.total_cycles = total;
    out.stats.throughput =
        total > 0 ? double(iterations) / double(total) : 0.0;

    // full value history: hist[node][iteration]
    std::vector<std::vector<std::int32_t>> hist(
        g.nodes.size(),
        std::vector<std::int32_t>(size_t(iterations), 0));

    // per-node operand sources, resolved once
    struct Source {
        bool is_imm = false;
        std::int32_t imm = 0;
        int src = -1;
        int distance = 0;
    };
    std::vector<std::array<Source, 3>> srcs(g.nodes.size());
    for (const auto& nd : g.nodes) {
        for (int slot = 0; slot < opcode_arity(nd.opcode); slot++) {
            Source s;
            if (nd.imm[size_t(slot)]) {
                s.is_imm = true;
                s.imm = *nd.imm[size_t(slot)];
            } else {
                for (const auto& e : g.edges)
                    if (!e.order_only && e.dst == nd.id &&
                        e.operand == slot) {
                        s.src = e.src;
                        s.distance = e.distance;
                        break;
                    }
                if (s.src < 0)
                    throw SemanticError("node " + std::to_string(nd.id) +
                                        " operand " + std::to_string(slot) +
                                        " is unbound");
            }
            srcs[size_t(nd.id)][size_t(slot)] = s;
        }
    }

    std::int64_t last_fire = 0;
    for (const Fire& f : fires)
        last_fire = std::max(last_fire, std::int64_t(f.time) +
                                            (iterations - 1) * m.ii);

    std::vector<std::pair<std::int64_t, std::int32_t>> stores;
    for (std::int64_t cycle = 0; cycle <= last_fire; cycle++) {
        // loads this cycle observe only strictly earlier stores
        const std::vector<std::int32_t> snapshot = out.mem.words;
        stores.clear();
        for (const Fire& f : fires) {
            if (cycle < f.time || (cycle - f.time) % m.ii != 0) continue;
            std::int64_t q = (cycle - f.time) / m.ii;
            if (q >= iterations) continue;
            const DfgNode& nd = g.node(f.node);
            std::int32_t ops[3] = {0, 0, 0};
            for (int slot = 0; slot < opcode_arity(nd.opcode); slot++) {
                const Source& s = srcs[size_t(f.node)][size_t(slot)];
                if (s.is_imm) {
                    ops[slot] = s.imm;
                } else {
                    std::int64_t qq = q - s.distance;
                    ops[slot] =
                        qq < 0 ? 0 : hist[size_t(s.src)][size_t(qq)];
                }
            }
            std::int32_t v =
                eval_node(g, nd, ops, snapshot, stores, cycle, f.pe);
            hist[size_t(f.node)][size_t(q)] = v;
            if (opt.trace)
                *opt.trace << "t=" << cycle << " pe=(" << f.pe.row << ','
                           << f.pe.col << ") fire=" << f.node << " out=" << v
                           << '\n';
        }
        for (const auto& [addr, val] : stores)
            out.mem.words[size_t(addr)] = val;
    }
    return out;
}

CompareResult compare_mem(const MemImage& got, const MemImage& expect,
                          const std::vector<std::string>& outputs) {
    CompareResult r;
    for (const std::string& name : outputs) {
        auto ig = got.layout.find(name);
        auto ie = expect.layout.find(name);
        if (ig == got.layout.end() || ie == expect.layout.end())
            throw SemanticError("compare_mem: unknown output array '" + name +
                                "'");
        if (ig->second.base != ie->second.base ||
            ig->second.extents != ie->second.extents)
            throw SemanticError("compare_mem: layout mismatch for '" + name +
                                "'");
        const ArrayRegion& rg = ig->second;
        for (std::int64_t k = 0; k < rg.words(); k++) {
            std::int64_t addr = rg.base + k;
            if (got.words.at(size_t(addr)) == expect.words.at(size_t(addr))) {
                r.matches++;
            } else {
                r.mismatches++;
                if (!r.first_mismatch_addr) r.first_mismatch_addr = addr;
            }
        }
    }
    return r;
}

} // namespace gridmap
