#pragma once
#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace gridmap {

enum class Opcode { Add, Sub, Mul, Div, Cmp, Sel, Load, Store, Const };

const char* opcode_name(Opcode op);
Opcode parse_opcode(const std::string& s); // throws ParseError
int opcode_arity(Opcode op);               // data operand count
bool is_mem_op(Opcode op);

struct Coord {
    int row = 0;
    int col = 0;
    auto operator<=>(const Coord&) const = default;
};

// Grid directions, in fixed N,E,S,W order; this order is the tie-break
// order everywhere ports are enumerated.
enum class Dir { N, E, S, W };
constexpr int kDirCount = 4;
const char* dir_name(Dir d);
Coord step(Coord c, Dir d);
Dir opposite(Dir d);

enum class InterconnectKind { Mesh, HyCube };

struct Interconnect {
    InterconnectKind kind = InterconnectKind::Mesh;
    int hops_per_cycle = 1; // >1 only meaningful for HyCube
    auto operator<=>(const Interconnect&) const = default;
};

struct PeSpec {
    std::set<Opcode> ops;
    int registers = 8;
    int config_depth = 60;
    auto operator<=>(const PeSpec&) const = default;
};

struct SpmSpec {
    std::vector<Coord> pes; // PEs with a scratchpad port
    int size_words = 1024;
    int latency = 1;
    auto operator<=>(const SpmSpec&) const = default;
};

struct ArchSpec {
    std::string name;
    int rows = 0;
    int cols = 0;
    Interconnect interconnect;
    PeSpec default_pe;
    std::map<Coord, PeSpec> overrides; // full PeSpec replaces default for that PE
    std::set<Coord> disabled;
    SpmSpec spm;
    bool allow_interior_spm = false;

    bool operator==(const ArchSpec&) const = default;

    bool in_grid(Coord c) const {
        return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols;
    }
    bool enabled(Coord c) const { return in_grid(c) && !disabled.count(c); }
    bool on_border(Coord c) const {
        return c.row == 0 || c.col == 0 || c.row == rows - 1 || c.col == cols - 1;
    }
    const PeSpec& pe(Coord c) const; // throws SemanticError if not in grid
    bool is_spm_pe(Coord c) const;
    std::vector<Coord> enabled_pes() const; // row-major order
    int hop_budget() const {
        return interconnect.kind == InterconnectKind::HyCube
                   ? interconnect.hops_per_cycle
                   : 1;
    }
};

// JSON round trip. parse_arch reports syntax errors with stream position and
// validates the semantic rules (bounds, SPM on border unless allowed, SPM/
// disabled disjoint, positive sizes).
ArchSpec parse_arch(const std::string& text);
ArchSpec parse_arch_file(const std::string& path);
std::string serialize_arch(const ArchSpec& a);

// PEs able to execute op: enabled, op in their op set, and for Load/Store
// restricted to SPM-attached PEs.
std::set<Coord> capable_pes(const ArchSpec& a, Opcode op);

// Neighbouring enabled PEs of an enabled PE, in Dir order.
std::vector<std::pair<Dir, Coord>> adjacent_resources(const ArchSpec& a, Coord c);

// The two built-in 4x4 configurations used by the benchmark harness.
ArchSpec builtin_arch(const std::string& name); // "mesh4x4" | "hycube4x4"

// One schedulable resource of a PE.
struct Resource {
    enum class Kind { Fu, RoutePort, Register };
    Kind kind = Kind::Fu;
    Coord pe;
    Dir dir = Dir::N; // RoutePort: output port toward this neighbour
    int index = 0;    // Register file index
    auto operator<=>(const Resource&) const = default;
};

std::string resource_name(const Resource& r); // FU | N|E|S|W | R<i>
Resource fu(Coord c);
Resource route_port(Coord c, Dir d);
Resource reg(Coord c, int i);

} // namespace gridmap
