// End-to-end acceptance checks, one per shipped guarantee. Each criterion
// prints a single PASS/FAIL line; the exit status is the failure count.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "gridmap/bench.hpp"
#include "gridmap/cli.hpp"
#include "gridmap/dfg.hpp"
#include "gridmap/loopir.hpp"
#include "gridmap/mapper.hpp"
#include "gridmap/sched.hpp"
#include "gridmap/simulator.hpp"
#include "oracles.hpp"

using namespace gridmap;

namespace {

struct Check {
    std::string fail; // first failing condition, empty while passing
    void expect(bool ok, const std::string& what) {
        if (!ok && fail.empty()) fail = what;
    }
};

std::string str(std::int64_t v) { return std::to_string(v); }

ArchSpec mesh3x3_all_spm() {
    return parse_arch(R"({"name":"mesh3x3","rows":3,"cols":3,
        "allow_interior_spm":true,
        "spm":{"pes":[[0,0],[0,1],[0,2],[1,0],[1,1],[1,2],[2,0],[2,1],[2,2]]}})");
}

// criterion 1: the 3-deep gemm graph has the documented inventory: 22 nodes
// split 9/7/4/2 over the four sections, and one Sel/Add/Cmp counter
// recurrence per loop dimension (distance 1, three unit-latency nodes)
void criterion_dfg_shape(Check& c) {
    Dfg g = build_dfg(builtin_kernel("gemm", 4));
    g.validate();
    DfgStats st = dfg_stats(g);
    c.expect(st.op_count == 22, "node count " + str(st.op_count) + " != 22");
    c.expect(st.sections[Section::Indices] == 9,
             "indices " + str(st.sections[Section::Indices]) + " != 9");
    c.expect(st.sections[Section::Address] == 7,
             "address " + str(st.sections[Section::Address]) + " != 7");
    c.expect(st.sections[Section::Memory] == 4,
             "memory " + str(st.sections[Section::Memory]) + " != 4");
    c.expect(st.sections[Section::Compute] == 2,
             "compute " + str(st.sections[Section::Compute]) + " != 2");
    int counters = 0;
    for (const auto& cyc : oracle::elementary_cycles(g)) {
        if (cyc.nodes.size() != 3 || cyc.latency != 3 || cyc.distance != 1)
            continue;
        std::set<Opcode> ops;
        for (int id : cyc.nodes) ops.insert(g.node(id).opcode);
        if (ops == std::set<Opcode>{Opcode::Sel, Opcode::Add, Opcode::Cmp})
            counters++;
    }
    c.expect(counters == 3,
             "counter recurrences " + str(counters) + " != 3");
}

// criterion 2: the counter chain pins rec_mii at 3; on a 3x3 whose every PE
// has a scratchpad port the gemm graph has min_ii 3, and exhaustive search
// proves II 2 impossible rather than merely giving up
void criterion_ii_bounds(Check& c) {
    Dfg counter = build_dfg(
        parse_kernel("kernel count\narray A[8]\nloop i 0 8\n A[i] = i\n"));
    int rec = rec_mii(counter);
    c.expect(rec == 3, "rec_mii " + str(rec) + " != 3");

    ArchSpec a = mesh3x3_all_spm();
    Dfg gemm = build_dfg(builtin_kernel("gemm", 4));
    int lo = min_ii(gemm, a);
    c.expect(lo == 3, "min_ii " + str(lo) + " != 3");

    MapResult r = map_exhaustive(gemm, a, 2);
    c.expect(r.status == MapStatus::Infeasible,
             std::string("II 2 verdict is ") + map_status_name(r.status));
}

// criterion 3: on every enumerated DAG of up to 5 single-class nodes, the
// smallest II the exhaustive mapper accepts on a 1x2 and a 2x2 mesh equals
// the brute-force oracle's optimum, agreeing at every II along the way
void criterion_exhaustive_optimal(Check& c) {
    std::vector<ArchSpec> arches = {
        parse_arch(R"({"rows":1,"cols":2})"),
        parse_arch(R"({"rows":2,"cols":2})")};
    int graphs = 0;
    for (int n = 1; n <= 5 && c.fail.empty(); n++)
        for (const Dfg& g : oracle::all_slot_dags(n)) {
            graphs++;
            for (const ArchSpec& a : arches) {
                bool found = false;
                for (int ii = 1; ii <= 2 * n + 2; ii++) {
                    MapResult r = map_exhaustive(g, a, ii);
                    c.expect(r.status != MapStatus::BudgetExhausted,
                             g.name + ": budget exhausted at ii " + str(ii));
                    bool ref = oracle::mappable(g, a, ii);
                    if (r.ok() != ref) {
                        c.expect(false, g.name + " on " + str(a.rows) + "x" +
                                            str(a.cols) + " at ii " + str(ii) +
                                            ": mapper " +
                                            (r.ok() ? "feasible" : "infeasible") +
                                            ", oracle disagrees");
                        break;
                    }
                    if (r.ok()) {
                        found = true;
                        break;
                    }
                }
                c.expect(found, g.name + ": no feasible II found");
                if (!c.fail.empty()) return;
            }
        }
    c.expect(graphs > 2500, "generator produced only " + str(graphs));
}

// criterion 4: across 100 random DAGs, three mappers and two interconnects,
// every mapping that comes back is violation-free and respects min_ii
void criterion_mapper_soundness(Check& c) {
    ArchSpec mesh = parse_arch(R"({"rows":3,"cols":3})");
    ArchSpec hy = parse_arch(
        R"({"rows":3,"cols":3,"interconnect":{"kind":"hycube","hops_per_cycle":3}})");
    for (std::uint64_t seed = 0; seed < 100 && c.fail.empty(); seed++) {
        Dfg g = oracle::random_dag(seed, 12);
        for (const ArchSpec& a : {mesh, hy}) {
            int lo = min_ii(g, a);
            MapOptions mo;
            mo.seed = seed;
            const MapResult results[] = {map_heuristic(g, a, mo),
                                         map_backtrack(g, a, mo),
                                         map_anneal(g, a, lo + 1, mo)};
            for (const MapResult& r : results) {
                if (!r.ok()) continue;
                auto vs = validate_mapping(g, a, *r.mapping);
                c.expect(vs.empty(), "seed " + str(std::int64_t(seed)) + ": " +
                                         str(std::int64_t(vs.size())) +
                                         " violations (" +
                                         (vs.empty() ? "" : vs[0].constraint) +
                                         ")");
                c.expect(r.mapping->ii >= lo,
                         "seed " + str(std::int64_t(seed)) + ": ii " +
                             str(r.mapping->ii) + " below min_ii " + str(lo));
            }
        }
    }
}

std::vector<BenchRow> bench_at(int size) {
    BenchConfig cfg;
    cfg.size = size;
    cfg.mappers = {"heuristic", "backtrack"};
    cfg.seed = 0;
    return run_bench(cfg);
}

std::string row_name(const BenchRow& r) {
    return r.kernel + "/" + r.optimization + "/" + r.arch + "/" + r.mapper;
}

// criterion 5: the evaluation sweep simulates every successful mapping
// without a single memory mismatch, and the heuristic alone handles the
// flat gemm, gesummv, mvt and atax kernels on the plain 4x4 mesh
void criterion_end_to_end(Check& c, const std::vector<BenchRow>& all) {
    for (const BenchRow& r : all) {
        if (!r.mapped) continue;
        c.expect(r.status == "ok", row_name(r) + " status " + r.status);
        c.expect(r.mismatches == 0,
                 row_name(r) + " mismatches " + str(r.mismatches));
        c.expect(r.ii <= 60, row_name(r) + " ii " + str(r.ii));
    }
    for (std::string kernel : {"gemm", "gesummv", "mvt", "atax"}) {
        bool ok = false;
        for (const BenchRow& r : all)
            if (r.kernel == kernel && r.optimization == "flat" &&
                r.arch == "mesh4x4" && r.mapper == "heuristic" && r.mapped)
                ok = true;
        c.expect(ok, "heuristic failed flat " + kernel + " on mesh4x4");
    }
}

// criterion 6: wherever both interconnects map the same instance, the
// multi-hop fabric never needs a larger II than the plain mesh
void criterion_hycube_regression(Check& c, const std::vector<BenchRow>& all) {
    std::map<std::string, const BenchRow*> mesh, hy;
    for (const BenchRow& r : all) {
        if (!r.mapped) continue;
        std::string key = r.kernel + "/" + r.optimization + "/" + r.mapper;
        (r.arch == "mesh4x4" ? mesh : hy)[key] = &r;
    }
    int pairs = 0;
    for (const auto& [key, m] : mesh) {
        auto it = hy.find(key);
        if (it == hy.end()) continue;
        pairs++;
        c.expect(it->second->ii <= m->ii,
                 key + ": hycube ii " + str(it->second->ii) + " > mesh ii " +
                     str(m->ii));
    }
    c.expect(pairs > 0, "no instance mapped on both interconnects");
}

// criterion 7: report arithmetic on a constructed placement: 28 ops at II 6
// leaving 5 of 16 PEs empty with a 4-op peak, and the utilization of a PE
// running 4 ops at II 10
void criterion_report_arithmetic(Check& c) {
    ArchSpec a = builtin_arch("mesh4x4");
    Dfg g;
    for (int i = 0; i < 28; i++) {
        DfgNode nd;
        nd.id = i;
        nd.opcode = Opcode::Const;
        nd.value = i;
        g.nodes.push_back(nd);
    }
    g.validate();
    Mapping m;
    m.ii = 6;
    const int per_pe[] = {4, 3, 3, 3, 3, 3, 3, 2, 2, 1, 1};
    auto pes = a.enabled_pes();
    int node = 0;
    for (size_t p = 0; p < std::size(per_pe); p++)
        for (int q = 0; q < per_pe[p]; q++)
            m.place[node++] = {pes[p], q};
    MapReport rep = mapping_report(g, a, m);
    c.expect(rep.op_count == 28, "ops " + str(rep.op_count) + " != 28");
    c.expect(rep.ii == 6, "ii " + str(rep.ii) + " != 6");
    c.expect(rep.unused_pe == 5, "unused " + str(rep.unused_pe) + " != 5");
    c.expect(rep.max_ops_per_pe == 4,
             "max ops " + str(rep.max_ops_per_pe) + " != 4");

    Dfg four;
    for (int i = 0; i < 4; i++) {
        DfgNode nd;
        nd.id = i;
        nd.opcode = Opcode::Const;
        four.nodes.push_back(nd);
    }
    four.validate();
    Mapping m10;
    m10.ii = 10;
    for (int i = 0; i < 4; i++) m10.place[i] = {{1, 1}, i};
    double u = utilization(a, m10).at({1, 1});
    c.expect(u == 0.4, "utilization " + std::to_string(u) + " != 0.4");
}

// criterion 8: the bench subcommand is bit-reproducible for a fixed seed
void criterion_determinism(Check& c) {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "gridmap_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto once = [&](const std::string& name) {
        std::ostringstream out, err;
        int code = cli_main({"bench", "--size", "4", "--seed", "0", "--csv",
                             (dir / name).string()},
                            out, err);
        c.expect(code == 0, "bench exit " + str(code) + ": " + err.str());
        std::ifstream f(dir / name, std::ios::binary);
        std::ostringstream os;
        os << f.rdbuf();
        return os.str();
    };
    std::string first = once("run1.csv");
    std::string second = once("run2.csv");
    c.expect(!first.empty(), "empty CSV");
    c.expect(first == second, "consecutive runs differ");
}

} // namespace

int main() {
    std::vector<BenchRow> sweep;
    struct Criterion {
        int id;
        const char* label;
        std::function<void(Check&)> body;
    };
    const Criterion criteria[] = {
        {1, "dfg shape", criterion_dfg_shape},
        {2, "ii bounds", criterion_ii_bounds},
        {3, "exhaustive optimality", criterion_exhaustive_optimal},
        {4, "mapper soundness", criterion_mapper_soundness},
        {5, "end-to-end correctness",
         [&](Check& c) {
             sweep = bench_at(2);
             std::vector<BenchRow> four = bench_at(4);
             sweep.insert(sweep.end(), four.begin(), four.end());
             criterion_end_to_end(c, sweep);
         }},
        {6, "hycube regression",
         [&](Check& c) { criterion_hycube_regression(c, sweep); }},
        {7, "report arithmetic", criterion_report_arithmetic},
        {8, "bench determinism", criterion_determinism},
    };
    int failures = 0;
    for (const Criterion& cr : criteria) {
        Check c;
        auto t0 = std::chrono::steady_clock::now();
        try {
            cr.body(c);
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        if (c.fail.empty()) {
            std::printf("criterion %d (%s): PASS [%.1f s]\n", cr.id, cr.label,
                        secs);
        } else {
            std::printf("criterion %d (%s): FAIL — %s [%.1f s]\n", cr.id,
                        cr.label, c.fail.c_str(), secs);
            failures++;
        }
        std::fflush(stdout);
    }
    return failures;
}
