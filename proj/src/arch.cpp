#include "gridmap/arch.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gridmap/error.hpp"

namespace gridmap {

using nlohmann::json;

namespace {
const struct {
    Opcode op;
    const char* name;
    int arity;
} kOps[] = {
    {Opcode::Add, "add", 2},   {Opcode::Sub, "sub", 2},
    {Opcode::Mul, "mul", 2},   {Opcode::Div, "div", 2},
    {Opcode::Cmp, "cmp", 2},   {Opcode::Sel, "sel", 3},
    {Opcode::Load, "load", 1}, {Opcode::Store, "store", 2},
    {Opcode::Const, "const", 0},
};
} // namespace

const char* opcode_name(Opcode op) {
    for (const auto& e : kOps)
        if (e.op == op) return e.name;
    return "?";
}

Opcode parse_opcode(const std::string& s) {
    for (const auto& e : kOps)
        if (s == e.name) return e.op;
    throw ParseError("unknown opcode '" + s + "'");
}

int opcode_arity(Opcode op) {
    for (const auto& e : kOps)
        if (e.op == op) return e.arity;
    return 0;
}

bool is_mem_op(Opcode op) { return op == Opcode::Load || op == Opcode::Store; }

const char* dir_name(Dir d) {
    switch (d) {
    case Dir::N: return "N";
    case Dir::E: return "E";
    case Dir::S: return "S";
    case Dir::W: return "W";
    }
    return "?";
}

Coord step(Coord c, Dir d) {
    switch (d) {
    case Dir::N: return {c.row - 1, c.col};
    case Dir::E: return {c.row, c.col + 1};
    case Dir::S: return {c.row + 1, c.col};
    case Dir::W: return {c.row, c.col - 1};
    }
    return c;
}

Dir opposite(Dir d) {
    switch (d) {
    case Dir::N: return Dir::S;
    case Dir::E: return Dir::W;
    case Dir::S: return Dir::N;
    case Dir::W: return Dir::E;
    }
    return d;
}

const PeSpec& ArchSpec::pe(Coord c) const {
    if (!in_grid(c))
        throw SemanticError("PE (" + std::to_string(c.row) + "," +
                            std::to_string(c.col) + ") outside grid");
    auto it = overrides.find(c);
    return it != overrides.end() ? it->second : default_pe;
}

bool ArchSpec::is_spm_pe(Coord c) const {
    return std::find(spm.pes.begin(), spm.pes.end(), c) != spm.pes.end();
}

std::vector<Coord> ArchSpec::enabled_pes() const {
    std::vector<Coord> out;
    for (int r = 0; r < rows; r++)
        for (int c = 0; c < cols; c++)
            if (!disabled.count({r, c})) out.push_back({r, c});
    return out;
}

namespace {

Coord coord_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
        !j[1].is_number_integer())
        throw ParseError(std::string(what) + ": expected [row, col]");
    return {j[0].get<int>(), j[1].get<int>()};
}

std::set<Opcode> ops_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + ": expected op list");
    std::set<Opcode> out;
    for (const auto& e : j) out.insert(parse_opcode(e.get<std::string>()));
    return out;
}

void check(bool cond, const std::string& msg) {
    if (!cond) throw SemanticError(msg);
}

void validate_arch(const ArchSpec& a) {
    check(a.rows >= 1 && a.cols >= 1, "grid must be at least 1x1");
    check(a.default_pe.registers >= 0, "registers must be >= 0");
    check(a.default_pe.config_depth >= 1, "config_depth must be >= 1");
    check(a.spm.size_words >= 1, "spm size_words must be >= 1");
    check(a.spm.latency >= 1, "spm latency must be >= 1");
    check(a.interconnect.hops_per_cycle >= 1, "hops_per_cycle must be >= 1");
    for (const auto& c : a.disabled)
        check(a.in_grid(c), "disabled PE outside grid");
    for (const auto& [c, pe] : a.overrides) {
        check(a.in_grid(c), "override PE outside grid");
        check(pe.registers >= 0 && pe.config_depth >= 1, "bad override PE");
    }
    std::set<Coord> seen;
    for (const auto& c : a.spm.pes) {
        check(a.in_grid(c), "spm PE outside grid");
        check(!a.disabled.count(c), "spm PE is disabled");
        check(seen.insert(c).second, "duplicate spm PE");
        if (!a.allow_interior_spm)
            check(a.on_border(c), "spm PE not on the grid border");
    }
}

} // namespace

ArchSpec parse_arch(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("arch JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("arch JSON: expected object");

    ArchSpec a;
    try {
        a.name = j.value("name", std::string());
        a.rows = j.at("rows").get<int>();
        a.cols = j.at("cols").get<int>();
        if (j.count("interconnect")) {
            const auto& ic = j["interconnect"];
            std::string kind = ic.value("kind", "mesh");
            if (kind == "mesh")
                a.interconnect.kind = InterconnectKind::Mesh;
            else if (kind == "hycube")
                a.interconnect.kind = InterconnectKind::HyCube;
            else
                throw ParseError("interconnect.kind must be mesh or hycube");
            a.interconnect.hops_per_cycle =
                ic.value("hops_per_cycle",
                         a.interconnect.kind == InterconnectKind::HyCube ? 3 : 1);
        }
        if (j.count("pe")) {
            const auto& pe = j["pe"];
            if (pe.count("ops")) a.default_pe.ops = ops_from_json(pe["ops"], "pe.ops");
            a.default_pe.registers = pe.value("registers", 8);
            a.default_pe.config_depth = pe.value("config_depth", 60);
        }
        if (a.default_pe.ops.empty())
            for (const auto& e : kOps) a.default_pe.ops.insert(e.op);
        if (j.count("spm")) {
            const auto& spm = j["spm"];
            if (spm.count("pes")) {
                a.spm.pes.clear();
                for (const auto& c : spm["pes"])
                    a.spm.pes.push_back(coord_from_json(c, "spm.pes"));
            }
            a.spm.size_words = spm.value("size_words", 1024);
            a.spm.latency = spm.value("latency", 1);
        }
        if (a.spm.pes.empty()) // default: the whole left column
            for (int r = 0; r < a.rows; r++) a.spm.pes.push_back({r, 0});
        if (j.count("disabled"))
            for (const auto& c : j["disabled"])
                a.disabled.insert(coord_from_json(c, "disabled"));
        if (j.count("overrides"))
            for (const auto& o : j["overrides"]) {
                Coord c = coord_from_json(o.at("pe"), "overrides.pe");
                PeSpec pe = a.default_pe;
                if (o.count("ops")) pe.ops = ops_from_json(o["ops"], "overrides.ops");
                pe.registers = o.value("registers", pe.registers);
                pe.config_depth = o.value("config_depth", pe.config_depth);
                a.overrides[c] = pe;
            }
        a.allow_interior_spm = j.value("allow_interior_spm", false);
    } catch (const json::exception& e) {
        throw ParseError(std::string("arch JSON: ") + e.what());
    }

    validate_arch(a);
    return a;
}

ArchSpec parse_arch_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open arch file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_arch(ss.str());
}

std::string serialize_arch(const ArchSpec& a) {
    json j;
    if (!a.name.empty()) j["name"] = a.name;
    j["rows"] = a.rows;
    j["cols"] = a.cols;
    j["interconnect"] = {
        {"kind", a.interconnect.kind == InterconnectKind::Mesh ? "mesh" : "hycube"},
        {"hops_per_cycle", a.interconnect.hops_per_cycle}};
    json ops = json::array();
    for (Opcode op : a.default_pe.ops) ops.push_back(opcode_name(op));
    j["pe"] = {{"ops", ops},
               {"registers", a.default_pe.registers},
               {"config_depth", a.default_pe.config_depth}};
    json spm_pes = json::array();
    for (const auto& c : a.spm.pes) spm_pes.push_back({c.row, c.col});
    j["spm"] = {{"pes", spm_pes},
                {"size_words", a.spm.size_words},
                {"latency", a.spm.latency}};
    if (!a.disabled.empty()) {
        json d = json::array();
        for (const auto& c : a.disabled) d.push_back({c.row, c.col});
        j["disabled"] = d;
    }
    if (!a.overrides.empty()) {
        json ov = json::array();
        for (const auto& [c, pe] : a.overrides) {
            json o;
            o["pe"] = {c.row, c.col};
            json pops = json::array();
            for (Opcode op : pe.ops) pops.push_back(opcode_name(op));
            o["ops"] = pops;
            o["registers"] = pe.registers;
            o["config_depth"] = pe.config_depth;
            ov.push_back(o);
        }
        j["overrides"] = ov;
    }
    if (a.allow_interior_spm) j["allow_interior_spm"] = true;
    return j.dump(2) + "\n";
}

std::set<Coord> capable_pes(const ArchSpec& a, Opcode op) {
    std::set<Coord> out;
    for (const auto& c : a.enabled_pes()) {
        if (!a.pe(c).ops.count(op)) continue;
        if (is_mem_op(op) && !a.is_spm_pe(c)) continue;
        out.insert(c);
    }
    return out;
}

std::vector<std::pair<Dir, Coord>> adjacent_resources(const ArchSpec& a, Coord c) {
    if (!a.enabled(c))
        throw SemanticError("adjacent_resources: PE (" + std::to_string(c.row) +
                            "," + std::to_string(c.col) + ") not enabled");
    std::vector<std::pair<Dir, Coord>> out;
    for (int d = 0; d < kDirCount; d++) {
        Coord n = step(c, Dir(d));
        if (a.enabled(n)) out.emplace_back(Dir(d), n);
    }
    return out;
}

ArchSpec builtin_arch(const std::string& name) {
    ArchSpec a;
    a.name = name;
    a.rows = a.cols = 4;
    for (const auto& e : kOps) a.default_pe.ops.insert(e.op);
    for (int r = 0; r < 4; r++) a.spm.pes.push_back({r, 0});
    if (name == "mesh4x4") {
        a.interconnect = {InterconnectKind::Mesh, 1};
    } else if (name == "hycube4x4") {
        a.interconnect = {InterconnectKind::HyCube, 3};
    } else {
        throw SemanticError("unknown builtin arch '" + name + "'");
    }
    return a;
}

std::string resource_name(const Resource& r) {
    switch (r.kind) {
    case Resource::Kind::Fu: return "FU";
    case Resource::Kind::RoutePort: return dir_name(r.dir);
    case Resource::Kind::Register: return "R" + std::to_string(r.index);
    }
    return "?";
}

Resource fu(Coord c) { return {Resource::Kind::Fu, c, Dir::N, 0}; }
Resource route_port(Coord c, Dir d) { return {Resource::Kind::RoutePort, c, d, 0}; }
Resource reg(Coord c, int i) { return {Resource::Kind::Register, c, Dir::N, i}; }

} // namespace gridmap
