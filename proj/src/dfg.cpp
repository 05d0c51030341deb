#include "gridmap/dfg.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <queue>
#include <set>
#include <sstream>

#include "gridmap/error.hpp"

namespace gridmap {

const char* section_name(Section s) {
    switch (s) {
    case Section::Indices: return "indices";
    case Section::Address: return "address";
    case Section::Memory: return "memory";
    case Section::Compute: return "compute";
    }
    return "?";
}

static Section parse_section(const std::string& s) {
    if (s == "indices") return Section::Indices;
    if (s == "address") return Section::Address;
    if (s == "memory") return Section::Memory;
    if (s == "compute") return Section::Compute;
    throw ParseError("unknown section '" + s + "'");
}

static Rel parse_rel_name(const std::string& s) {
    if (s == "eq") return Rel::Eq;
    if (s == "ne") return Rel::Ne;
    if (s == "lt") return Rel::Lt;
    if (s == "le") return Rel::Le;
    if (s == "gt") return Rel::Gt;
    if (s == "ge") return Rel::Ge;
    throw ParseError("unknown relation '" + s + "'");
}

static const char* rel_token(Rel r) {
    switch (r) {
    case Rel::Eq: return "eq";
    case Rel::Ne: return "ne";
    case Rel::Lt: return "lt";
    case Rel::Le: return "le";
    case Rel::Gt: return "gt";
    case Rel::Ge: return "ge";
    }
    return "?";
}

std::vector<const DfgEdge*> Dfg::in_edges(int id) const {
    std::vector<const DfgEdge*> out;
    for (const auto& e : edges)
        if (e.dst == id) out.push_back(&e);
    return out;
}

std::vector<const DfgEdge*> Dfg::out_edges(int id) const {
    std::vector<const DfgEdge*> out;
    for (const auto& e : edges)
        if (e.src == id) out.push_back(&e);
    return out;
}

std::vector<int> Dfg::topo_order() const {
    int n = int(nodes.size());
    std::vector<int> indeg(size_t(n), 0);
    for (const auto& e : edges)
        if (e.distance == 0) indeg[size_t(e.dst)]++;
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int i = 0; i < n; i++)
        if (!indeg[size_t(i)]) ready.push(i);
    std::vector<int> order;
    while (!ready.empty()) {
        int v = ready.top();
        ready.pop();
        order.push_back(v);
        for (const auto& e : edges)
            if (e.distance == 0 && e.src == v && --indeg[size_t(e.dst)] == 0)
                ready.push(e.dst);
    }
    if (int(order.size()) != n)
        throw SemanticError("distance-0 subgraph has a cycle");
    return order;
}

void Dfg::validate() const {
    int n = int(nodes.size());
    for (int i = 0; i < n; i++)
        if (nodes[size_t(i)].id != i)
            throw SemanticError("node ids must be dense and ordered");
    for (const auto& e : edges) {
        if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n)
            throw SemanticError("edge endpoint out of range");
        if (e.distance < 0) throw SemanticError("negative edge distance");
        int arity = opcode_arity(nodes[size_t(e.dst)].opcode);
        if (e.order_only) {
            if (e.operand != arity)
                throw SemanticError("order edge must use the slot past the data arity");
        } else if (e.operand < 0 || e.operand >= arity) {
            throw SemanticError("operand slot out of range");
        }
    }
    // every data slot bound exactly once (edge or immediate)
    for (const auto& nd : nodes) {
        int arity = opcode_arity(nd.opcode);
        for (int slot = 0; slot < arity; slot++) {
            int found = nd.imm[size_t(slot)] ? 1 : 0;
            for (const auto& e : edges)
                if (!e.order_only && e.dst == nd.id && e.operand == slot) found++;
            if (found != 1)
                throw SemanticError("node " + std::to_string(nd.id) + " slot " +
                                    std::to_string(slot) +
                                    (found ? " bound twice" : " unbound"));
        }
    }
    (void)topo_order(); // throws on d0 cycle
}

int effective_latency(const DfgNode& n, const ArchSpec& a) {
    if (n.opcode == Opcode::Load || n.opcode == Opcode::Store)
        return a.spm.latency;
    return n.latency;
}

int edge_latency(const Dfg& g, const DfgEdge& e) {
    if (e.order_only)
        return g.node(e.src).opcode == Opcode::Store ? 1 : 0;
    return g.node(e.src).latency;
}

int edge_latency(const Dfg& g, const DfgEdge& e, const ArchSpec& a) {
    if (e.order_only)
        return g.node(e.src).opcode == Opcode::Store ? 1 : 0;
    return effective_latency(g.node(e.src), a);
}

// ---------------------------------------------------------------------------
// Builder

namespace {

// A value during lowering: a node output (with an iteration-distance offset),
// an immediate, or the start-of-iteration value of a carried scalar.
struct Val {
    enum class Kind { Node, Imm, Scalar } kind = Kind::Imm;
    int node = -1;
    int dist = 0;
    std::int32_t imm = 0;
    std::string scalar;

    static Val of_node(int id, int dist = 0) { return {Kind::Node, id, dist, 0, {}}; }
    static Val of_imm(std::int32_t v) { return {Kind::Imm, -1, 0, v, {}}; }
    static Val of_scalar(const std::string& s) { return {Kind::Scalar, -1, 0, 0, s}; }
    bool is_imm() const { return kind == Kind::Imm; }
    bool operator==(const Val&) const = default;
};

std::string fingerprint(const Val& v) {
    switch (v.kind) {
    case Val::Kind::Node:
        return "n" + std::to_string(v.node) + "@" + std::to_string(v.dist);
    case Val::Kind::Imm: return "i" + std::to_string(v.imm);
    case Val::Kind::Scalar: return "s" + v.scalar + "@" + std::to_string(v.dist);
    }
    return "?";
}

struct Builder {
    const LoopNest& nest;
    std::map<std::string, ArrayRegion> layout;
    Dfg g;
    Section ctx = Section::Indices;

    std::map<std::string, int> memo; // structural key -> node id
    std::map<std::string, Val> env;  // carried scalar -> current value
    std::map<std::string, int> dim_sel; // loop index -> Sel node

    // per array: forwarding/CSE table and program-order memory node list
    std::map<std::string, std::map<std::string, Val>> avail;
    std::set<std::string> stored; // arrays with at least one store
    std::map<std::string, std::vector<int>> mem_seq; // loads+stores, program order

    explicit Builder(const LoopNest& n) : nest(n), layout(compute_layout(n)) {
        g.name = n.name;
    }

    int new_node(Opcode op, Section sec, const std::string& label) {
        DfgNode nd;
        nd.id = int(g.nodes.size());
        nd.opcode = op;
        nd.section = sec;
        nd.label = label;
        g.nodes.push_back(nd);
        return nd.id;
    }

    void bind(int dst, int slot, const Val& v) {
        if (v.kind == Val::Kind::Imm) {
            g.nodes[size_t(dst)].imm[size_t(slot)] = v.imm;
        } else if (v.kind == Val::Kind::Node) {
            g.edges.push_back({int(g.edges.size()), v.node, dst, slot, v.dist, false});
        } else {
            pending_scalar.push_back({v.scalar, dst, slot, v.dist});
        }
    }

    struct PendingScalar {
        std::string name;
        int dst;
        int slot;
        int extra;
    };
    std::vector<PendingScalar> pending_scalar;

    bool boolish(const Val& v) const {
        if (v.kind == Val::Kind::Imm) return v.imm == 0 || v.imm == 1;
        if (v.kind == Val::Kind::Scalar) return false;
        const DfgNode& nd = g.nodes[size_t(v.node)];
        if (nd.opcode == Opcode::Cmp) return true;
        if (nd.opcode == Opcode::Const) return nd.value == 0 || nd.value == 1;
        if (nd.opcode == Opcode::Sel) {
            Val a = operand_val(v.node, 1), b = operand_val(v.node, 2);
            return boolish(a) && boolish(b);
        }
        return false;
    }

    // reconstruct the Val bound to a slot (for peephole reasoning)
    Val operand_val(int node, int slot) const {
        const DfgNode& nd = g.nodes[size_t(node)];
        if (nd.imm[size_t(slot)]) return Val::of_imm(*nd.imm[size_t(slot)]);
        for (const auto& e : g.edges)
            if (!e.order_only && e.dst == node && e.operand == slot)
                return Val::of_node(e.src, e.distance);
        for (const auto& p : pending_scalar)
            if (p.dst == node && p.slot == slot) {
                Val v = Val::of_scalar(p.name);
                v.dist = p.extra;
                return v;
            }
        return Val::of_imm(0);
    }

    // value-numbered node creation with local algebraic folds
    Val make(Opcode op, std::vector<Val> ops, Rel rel = Rel::Eq,
             std::int32_t cval = 0, const std::string& label = {}) {
        // folds that avoid a node altogether
        if (op == Opcode::Add) {
            if (ops[0].is_imm() && !ops[1].is_imm()) std::swap(ops[0], ops[1]);
            if (ops[1].is_imm() && ops[1].imm == 0) return ops[0];
            if (ops[0].is_imm() && ops[1].is_imm())
                return Val::of_imm(wrap_add(ops[0].imm, ops[1].imm));
        }
        if (op == Opcode::Mul) {
            if (ops[0].is_imm() && !ops[1].is_imm()) std::swap(ops[0], ops[1]);
            if (ops[1].is_imm() && ops[1].imm == 1) return ops[0];
            if (ops[1].is_imm() && ops[1].imm == 0) return Val::of_imm(0);
            if (ops[0].is_imm() && ops[1].is_imm())
                return Val::of_imm(wrap_mul(ops[0].imm, ops[1].imm));
        }
        if (op == Opcode::Sub && ops[0].is_imm() && ops[1].is_imm())
            return Val::of_imm(wrap_sub(ops[0].imm, ops[1].imm));
        if (op == Opcode::Sub && ops[1].is_imm() && ops[1].imm == 0) return ops[0];
        if (op == Opcode::Cmp && ops[0].is_imm() && ops[1].is_imm())
            return Val::of_imm(rel_holds(rel, ops[0].imm, ops[1].imm) ? 1 : 0);
        if (op == Opcode::Cmp && rel == Rel::Eq && ops[1].is_imm() &&
            ops[1].imm == 1 && boolish(ops[0]))
            return ops[0];
        if (op == Opcode::Sel) {
            if (ops[0].is_imm()) return ops[0].imm ? ops[1] : ops[2];
            if (ops[1] == ops[2]) return ops[1];
            if (boolish(ops[0]) && ops[1].is_imm() && ops[1].imm == 1 &&
                ops[2].is_imm() && ops[2].imm == 0)
                return ops[0];
        }

        // canonical operand order for commutative ops: nodes first, then by
        // structural fingerprint, so equal values collide in the memo
        if ((op == Opcode::Add || op == Opcode::Mul) && !ops[0].is_imm() &&
            !ops[1].is_imm() && fingerprint(ops[1]) < fingerprint(ops[0]))
            std::swap(ops[0], ops[1]);

        std::string key = std::string(opcode_name(op)) + "/" + rel_token(rel) +
                          "/" + std::to_string(cval);
        for (const auto& v : ops) key += "/" + fingerprint(v);
        auto it = memo.find(key);
        if (it != memo.end()) return Val::of_node(it->second);

        int id = new_node(op, ctx, label);
        g.nodes[size_t(id)].rel = rel;
        g.nodes[size_t(id)].value = cval;
        for (size_t s = 0; s < ops.size(); s++) bind(id, int(s), ops[s]);
        memo[key] = id;
        return Val::of_node(id);
    }

    Val make_const(std::int32_t v) {
        return make(Opcode::Const, {}, Rel::Eq, v,
                    "const" + std::to_string(v));
    }

    // --- affine lowering --------------------------------------------------
    Val name_val(const std::string& n) {
        auto it = dim_sel.find(n);
        if (it != dim_sel.end()) return Val::of_node(it->second);
        auto sit = env.find(n);
        if (sit != env.end()) return sit->second;
        throw SemanticError("unbound name '" + n + "' during lowering");
    }

    Val lower_affine(const AffineExpr& e, const std::string& label = {}) {
        std::vector<Val> pos, neg;
        for (const auto& [n, k] : e.terms) {
            Val base = name_val(n);
            std::int64_t a = k < 0 ? -k : k;
            Val term = a == 1 ? base
                              : make(Opcode::Mul, {base, Val::of_imm(std::int32_t(a))},
                                     Rel::Eq, 0, label.empty() ? "" : label + "_mul");
            (k < 0 ? neg : pos).push_back(term);
        }
        Val acc;
        if (!pos.empty()) {
            acc = pos[0];
            for (size_t i = 1; i < pos.size(); i++)
                acc = make(Opcode::Add, {acc, pos[i]}, Rel::Eq, 0, label);
        } else if (!neg.empty()) {
            acc = make(Opcode::Mul, {neg[0], Val::of_imm(-1)}, Rel::Eq, 0, label);
            neg.erase(neg.begin());
        } else {
            return Val::of_imm(std::int32_t(e.constant));
        }
        for (const auto& t : neg)
            acc = make(Opcode::Sub, {acc, t}, Rel::Eq, 0, label);
        if (e.constant != 0)
            acc = make(Opcode::Add, {acc, Val::of_imm(std::int32_t(e.constant))},
                       Rel::Eq, 0, label);
        return acc;
    }

    // guard `lhs rel rhs` as a 0/1 value: terms(lhs-rhs) rel -(const)
    Val lower_guard(const Condition& c) {
        AffineExpr diff = c.lhs - c.rhs;
        std::int64_t k = -diff.constant;
        diff.constant = 0;
        Val terms = lower_affine(diff, "guard");
        return make(Opcode::Cmp, {terms, Val::of_imm(std::int32_t(k))}, c.rel, 0,
                    "guard");
    }

    // --- memory -----------------------------------------------------------
    AffineExpr address_affine(const std::string& array,
                              const std::vector<AffineExpr>& subs) {
        const ArrayRegion& r = layout.at(array);
        AffineExpr addr = AffineExpr::lit(r.base);
        std::int64_t stride = 1;
        std::vector<AffineExpr> scaled(subs.size());
        for (size_t k = subs.size(); k-- > 0;) {
            scaled[k] = subs[k].scaled(stride);
            stride *= r.extents[k];
        }
        for (const auto& s : scaled) addr = addr + s;
        return addr;
    }

    Val load_value(const std::string& array, const std::vector<AffineExpr>& subs) {
        Section saved = ctx;
        ctx = Section::Address;
        Val addr = lower_affine(address_affine(array, subs), "addr_" + array);
        ctx = saved;
        std::string fp = fingerprint(addr);
        auto& table = avail[array];
        auto hit = table.find(fp);
        if (hit != table.end()) return hit->second;
        ctx = Section::Memory;
        int id = new_node(Opcode::Load, Section::Memory, "load_" + array);
        ctx = saved;
        bind(id, 0, addr);
        table[fp] = Val::of_node(id);
        mem_seq[array].push_back(id);
        return Val::of_node(id);
    }

    // stores materialise in program order: a later load of a runtime-equal
    // address with a different symbolic form must sit after this node in the
    // per-array order chain, or it would read the previous iteration's value
    void store_value(const std::string& array, const std::vector<AffineExpr>& subs,
                     const Val& v) {
        Section saved = ctx;
        ctx = Section::Address;
        Val addr = lower_affine(address_affine(array, subs), "addr_" + array);
        ctx = saved;
        std::string fp = fingerprint(addr);
        // a store may alias any other element of the same array: every other
        // cached value of this array becomes stale
        auto& table = avail[array];
        for (auto it = table.begin(); it != table.end();) {
            if (it->first == fp) ++it;
            else it = table.erase(it);
        }
        table[fp] = v;
        int id = new_node(Opcode::Store, Section::Memory, "store_" + array);
        bind(id, 0, addr);
        bind(id, 1, v);
        stored.insert(array);
        mem_seq[array].push_back(id);
    }

    // --- expressions --------------------------------------------------------
    Val lower_expr(const Expr& e) {
        switch (e.kind) {
        case Expr::Kind::Literal:
            return make_const(std::int32_t(e.value));
        case Expr::Kind::NameRef: return name_val(e.name);
        case Expr::Kind::ArrayRef: return load_value(e.name, e.subscript);
        case Expr::Kind::Binary: {
            Val l = lower_expr(*e.lhs);
            Val r = lower_expr(*e.rhs);
            switch (e.op) {
            case '+': return make(Opcode::Add, {l, r});
            case '-': return make(Opcode::Sub, {l, r});
            case '*': return make(Opcode::Mul, {l, r});
            case '/': return make(Opcode::Div, {l, r});
            }
            throw SemanticError("bad operator");
        }
        }
        throw SemanticError("bad expression");
    }

    // --- top level ----------------------------------------------------------
    void build_counters() {
        size_t m = nest.dims.size();
        std::vector<int> sel(m), add(m), cmp(m);
        for (size_t d = 0; d < m; d++) {
            const AffineExpr& lo = nest.dims[d].lower;
            if (!lo.is_constant() || lo.constant != 0)
                throw SemanticError(
                    "graph build needs zero lower bounds; flatten first");
            sel[d] = new_node(Opcode::Sel, Section::Indices,
                              "idx_" + nest.dims[d].name);
            dim_sel[nest.dims[d].name] = sel[d];
        }
        // innermost -> outermost so each carry (inner wrap test) exists
        for (size_t d = m; d-- > 0;) {
            const std::string& nm = nest.dims[d].name;
            Val incr = d + 1 == m ? Val::of_imm(1) : Val::of_node(cmp[d + 1]);
            add[d] = new_node(Opcode::Add, Section::Indices, "step_" + nm);
            bind(add[d], 0, Val::of_node(sel[d]));
            bind(add[d], 1, incr);
            Val bound = lower_affine(nest.dims[d].upper, "bound_" + nm);
            cmp[d] = new_node(Opcode::Cmp, Section::Indices, "wrap_" + nm);
            g.nodes[size_t(cmp[d])].rel = Rel::Eq;
            bind(cmp[d], 0, Val::of_node(add[d]));
            bind(cmp[d], 1, bound);
            // current index: 0 on wrap (and at start, via the zero history),
            // else the previous iteration's stepped value
            bind(sel[d], 0, Val::of_node(cmp[d], 1));
            bind(sel[d], 1, Val::of_imm(0));
            bind(sel[d], 2, Val::of_node(add[d], 1));
        }
    }

    void run_statement(const Statement& st) {
        std::optional<Val> guard;
        if (st.guard) {
            Section saved = ctx;
            ctx = st.target.is_scalar() ? Section::Indices : Section::Compute;
            Val gv = lower_guard(*st.guard);
            ctx = saved;
            if (gv.is_imm()) {
                if (!gv.imm) return; // statically dead
            } else {
                guard = gv;
            }
        }
        ctx = st.target.is_scalar() ? Section::Indices : Section::Compute;
        Val value = lower_expr(*st.expr);
        if (st.target.is_scalar()) {
            if (guard)
                value = make(Opcode::Sel, {*guard, value, env.at(st.target.name)},
                             Rel::Eq, 0, "sel_" + st.target.name);
            env[st.target.name] = value;
        } else {
            if (guard) {
                Val old = load_value(st.target.name, st.target.subscript);
                ctx = Section::Compute;
                value = make(Opcode::Sel, {*guard, value, old}, Rel::Eq, 0,
                             "sel_" + st.target.name);
            }
            store_value(st.target.name, st.target.subscript, value);
        }
        ctx = Section::Compute;
    }

    void resolve_scalars() {
        for (const auto& p : pending_scalar) {
            // follow scalar-to-scalar chains; each hop crosses one iteration
            std::string cur = p.name;
            int dist = p.extra + 1;
            std::set<std::string> seen;
            Val v = Val::of_imm(0);
            while (true) {
                if (!seen.insert(cur).second) break; // never materialised: stays 0
                Val f = env.at(cur);
                if (f.kind == Val::Kind::Scalar) {
                    dist += f.dist + 1;
                    cur = f.scalar;
                    continue;
                }
                v = f;
                if (f.kind == Val::Kind::Node) v.dist = f.dist + dist;
                break;
            }
            bind(p.dst, p.slot, v);
        }
        pending_scalar.clear();
    }

    void add_order_chains() {
        for (const auto& a : nest.arrays) {
            if (!stored.count(a.name)) continue; // no stores: loads are free
            const auto& seq = mem_seq[a.name];
            if (seq.empty()) continue;
            for (size_t k = 0; k + 1 < seq.size(); k++) {
                int dst = seq[k + 1];
                g.edges.push_back({int(g.edges.size()), seq[k], dst,
                                   opcode_arity(g.node(dst).opcode), 0, true});
            }
            int first = seq[0];
            g.edges.push_back({int(g.edges.size()), seq.back(), first,
                               opcode_arity(g.node(first).opcode), 1, true});
        }
    }

    Dfg build() {
        if (nest.dims.size() > 3)
            throw SemanticError("nests deeper than 3 are unsupported; flatten first");
        for (const auto& s : nest.scalars) env[s] = Val::of_scalar(s);
        build_counters();
        for (const auto& st : nest.body) run_statement(st);
        resolve_scalars();
        add_order_chains();
        g.validate();
        return std::move(g);
    }
};

} // namespace

Dfg build_dfg(const LoopNest& nest) { return Builder(nest).build(); }

// ---------------------------------------------------------------------------

DfgStats dfg_stats(const Dfg& g) {
    DfgStats s;
    s.op_count = int(g.nodes.size());
    for (const auto& n : g.nodes) {
        s.histogram[n.opcode]++;
        s.sections[n.section]++;
        if (is_mem_op(n.opcode)) s.mem_op_count++;
    }
    return s;
}

std::string to_dot(const Dfg& g) {
    std::ostringstream os;
    os << "digraph " << (g.name.empty() ? "dfg" : g.name) << " {\n";
    os << "  rankdir=TB;\n";
    const char* colors[] = {"lightblue", "lightyellow", "lightpink", "lightgreen"};
    for (const auto& n : g.nodes) {
        os << "  n" << n.id << " [shape=box style=filled fillcolor="
           << colors[int(n.section)] << " label=\"" << n.id << ": "
           << opcode_name(n.opcode);
        if (n.opcode == Opcode::Cmp) os << " " << rel_name(n.rel);
        if (n.opcode == Opcode::Const) os << " " << n.value;
        for (int s = 0; s < 3; s++)
            if (n.imm[size_t(s)])
                os << " imm" << s << "=" << *n.imm[size_t(s)];
        if (!n.label.empty()) os << "\\n" << n.label;
        os << "\"];\n";
    }
    for (const auto& e : g.edges) {
        os << "  n" << e.src << " -> n" << e.dst << " [label=\"" << e.operand;
        if (e.distance) os << " d" << e.distance;
        os << "\"";
        if (e.distance >= 1) os << " style=dashed";
        if (e.order_only) os << " color=gray";
        os << "];\n";
    }
    os << "}\n";
    return os.str();
}

std::string dump_dfg(const Dfg& g) {
    std::ostringstream os;
    os << "dfg " << (g.name.empty() ? "anon" : g.name) << "\n";
    for (const auto& n : g.nodes) {
        os << "node " << n.id << " " << opcode_name(n.opcode);
        if (n.opcode == Opcode::Cmp) os << " " << rel_token(n.rel);
        if (n.opcode == Opcode::Const) os << " " << n.value;
        for (int s = 0; s < 3; s++)
            if (n.imm[size_t(s)]) os << " imm" << s << "=" << *n.imm[size_t(s)];
        if (n.latency != 1) os << " lat=" << n.latency;
        os << " section=" << section_name(n.section);
        if (!n.label.empty()) os << " label=" << n.label;
        os << "\n";
    }
    for (const auto& e : g.edges) {
        os << "edge " << e.src << " " << e.dst << " " << e.operand << " "
           << e.distance;
        if (e.order_only) os << " order";
        os << "\n";
    }
    return os.str();
}

Dfg parse_dfg(const std::string& text) {
    Dfg g;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok) || tok.empty() || tok[0] == '#') continue;
        auto fail = [&](const std::string& m) {
            throw ParseError("dfg line " + std::to_string(line_no) + ": " + m);
        };
        if (tok == "dfg") {
            ls >> g.name;
        } else if (tok == "node") {
            DfgNode n;
            std::string op;
            if (!(ls >> n.id >> op)) fail("bad node line");
            n.opcode = parse_opcode(op);
            if (n.opcode == Opcode::Cmp) {
                std::string r;
                if (!(ls >> r)) fail("cmp needs a relation");
                n.rel = parse_rel_name(r);
            }
            if (n.opcode == Opcode::Const)
                if (!(ls >> n.value)) fail("const needs a value");
            std::string attr;
            while (ls >> attr) {
                auto eq = attr.find('=');
                if (eq == std::string::npos) fail("bad attribute '" + attr + "'");
                std::string k = attr.substr(0, eq), v = attr.substr(eq + 1);
                if (k == "imm0" || k == "imm1" || k == "imm2")
                    n.imm[size_t(k[3] - '0')] = std::int32_t(std::stol(v));
                else if (k == "lat")
                    n.latency = std::stoi(v);
                else if (k == "section")
                    n.section = parse_section(v);
                else if (k == "label")
                    n.label = v;
                else
                    fail("unknown attribute '" + k + "'");
            }
            if (n.id != int(g.nodes.size())) fail("node ids must be dense");
            g.nodes.push_back(n);
        } else if (tok == "edge") {
            DfgEdge e;
            if (!(ls >> e.src >> e.dst >> e.operand >> e.distance))
                fail("bad edge line");
            std::string extra;
            if (ls >> extra) {
                if (extra == "order") e.order_only = true;
                else fail("unknown edge attribute '" + extra + "'");
            }
            e.id = int(g.edges.size());
            g.edges.push_back(e);
        } else {
            fail("unknown directive '" + tok + "'");
        }
    }
    g.validate();
    return g;
}

} // namespace gridmap
