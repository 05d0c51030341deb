#include "gridmap/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "gridmap/bench.hpp"
#include "gridmap/dfg.hpp"
#include "gridmap/error.hpp"
#include "gridmap/mapper.hpp"
#include "gridmap/simulator.hpp"

namespace gridmap {

namespace {

LoopNest load_kernel(const std::string& spec) {
    if (spec.rfind("builtin:", 0) == 0) {
        std::string rest = spec.substr(8);
        size_t colon = rest.find(':');
        std::string name = rest.substr(0, colon);
        int size = 4;
        if (colon != std::string::npos) {
            try {
                size = std::stoi(rest.substr(colon + 1));
            } catch (const std::exception&) {
                throw ParseError("bad kernel spec '" + spec +
                                 "': size must be an integer");
            }
        }
        return builtin_kernel(name, size);
    }
    return parse_kernel_file(spec);
}

ArchSpec load_arch(const std::string& spec) {
    if (spec == "mesh4x4" || spec == "hycube4x4") return builtin_arch(spec);
    return parse_arch_file(spec);
}

LoopNest transform(const LoopNest& nest, bool flat, int unroll_k) {
    LoopNest n = flat ? flatten(nest) : nest.clone();
    if (unroll_k > 1) n = unroll(n, unroll_k);
    return n;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ParseError("cannot write " + p.string());
    f << text;
}

std::string read_file(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw ParseError("cannot read " + p);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::string format_report(const ArchSpec& a, const Dfg& g, const Mapping& m,
                          const MapReport& rep) {
    std::ostringstream os;
    os << "ops            " << rep.op_count << "\n"
       << "ii             " << rep.ii << "\n"
       << "unused_pe      " << rep.unused_pe << "\n"
       << "max_ops_per_pe " << rep.max_ops_per_pe << "\n"
       << "route_only_pe  " << rep.route_only_pe << "\n"
       << "speedup        " << std::fixed << std::setprecision(3)
       << rep.speedup << "\n"
       << "wall_ms        " << std::setprecision(3) << rep.wall_ms << "\n";
    os << "utilization (ops/ii per PE)\n";
    auto util = utilization(a, m);
    for (int r = 0; r < a.rows; r++) {
        os << "  ";
        for (int c = 0; c < a.cols; c++) {
            auto it = util.find({r, c});
            if (it == util.end())
                os << "  ----";
            else
                os << ' ' << std::fixed << std::setprecision(2) << it->second;
        }
        os << '\n';
    }
    (void)g;
    return os.str();
}

// the fixed-II mappers swept upward when no --ii is pinned
MapResult sweep_or_fixed(const std::string& mapper, const Dfg& g,
                         const ArchSpec& a, const MapOptions& mo, int ii) {
    auto run_at = [&](int at) {
        return mapper == "exhaustive" ? map_exhaustive(g, a, at, mo)
                                      : map_anneal(g, a, at, mo);
    };
    if (ii > 0) return run_at(ii);
    MapResult last;
    bool budget = false;
    for (int at = min_ii(g, a); at <= mo.max_ii; at++) {
        MapResult r = run_at(at);
        if (r.ok() || r.status == MapStatus::NoCapablePe) return r;
        if (r.status == MapStatus::BudgetExhausted) budget = true;
        last = std::move(r);
    }
    last.status = budget ? MapStatus::BudgetExhausted : MapStatus::MaxIiReached;
    last.detail = "no II up to " + std::to_string(mo.max_ii);
    return last;
}

struct CommonFlags {
    std::string kernel;
    std::string arch;
    std::string mapper = "heuristic";
    int ii = 0;
    int max_ii = 60;
    std::uint64_t seed = 0;
    bool flatten_flag = false;
    int unroll_k = 0;
    bool infinite_registers = false;
    std::string out_dir;
    bool trace = false;
};

} // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
    CLI::App app{"CGRA loop mapper: loop nests to placed-and-routed modulo "
                 "schedules"};
    app.require_subcommand(1);
    CommonFlags f;

    auto* cmd_arch = app.add_subcommand("arch-validate",
                                        "parse and check an architecture file");
    std::string arch_file;
    cmd_arch->add_option("file", arch_file, "architecture JSON")->required();

    auto* cmd_dfg =
        app.add_subcommand("dfg", "build the data-flow graph of a kernel");
    cmd_dfg->add_option("--kernel", f.kernel, "kernel file or builtin:NAME:SIZE")
        ->required();
    cmd_dfg->add_flag("--flatten", f.flatten_flag, "collapse the nest to 1-D");
    cmd_dfg->add_option("--unroll", f.unroll_k, "unroll innermost by k");
    std::string dot_file;
    cmd_dfg->add_option("--dot", dot_file, "write DOT to this file");
    cmd_dfg->add_option("--out", f.out_dir, "directory for dfg.txt + dfg.dot");

    auto* cmd_map = app.add_subcommand("map", "place and route a kernel");
    cmd_map->add_option("--kernel", f.kernel, "kernel file or builtin:NAME:SIZE")
        ->required();
    cmd_map->add_option("--arch", f.arch, "arch JSON or mesh4x4|hycube4x4")
        ->required();
    cmd_map->add_option("--mapper", f.mapper,
                        "exhaustive|heuristic|backtrack|anneal");
    cmd_map->add_option("--ii", f.ii, "fixed II (exhaustive/anneal only)");
    cmd_map->add_option("--max-ii", f.max_ii, "II sweep upper bound");
    cmd_map->add_option("--seed", f.seed, "annealing seed");
    cmd_map->add_flag("--flatten", f.flatten_flag, "collapse the nest to 1-D");
    cmd_map->add_option("--unroll", f.unroll_k, "unroll innermost by k");
    cmd_map->add_flag("--infinite-registers", f.infinite_registers,
                      "lift the per-PE register cap");
    cmd_map->add_option("--out", f.out_dir,
                        "directory for mapping.csv/json, dfg.dot, report.txt");

    auto* cmd_sim = app.add_subcommand("simulate",
                                       "run a mapping against the interpreter");
    cmd_sim->add_option("--kernel", f.kernel, "kernel file or builtin:NAME:SIZE")
        ->required();
    cmd_sim->add_option("--arch", f.arch, "arch JSON or mesh4x4|hycube4x4")
        ->required();
    std::string mapping_file;
    cmd_sim->add_option("--mapping", mapping_file, "mapping JSON from map --out")
        ->required();
    std::int64_t iterations = -1;
    cmd_sim->add_option("--iterations", iterations,
                        "trip count (default: full index space)");
    cmd_sim->add_flag("--flatten", f.flatten_flag, "collapse the nest to 1-D");
    cmd_sim->add_option("--unroll", f.unroll_k, "unroll innermost by k");
    cmd_sim->add_option("--seed", f.seed, "input data seed");
    cmd_sim->add_flag("--trace", f.trace, "print one line per fired node");

    auto* cmd_bench =
        app.add_subcommand("bench", "kernel x transform x arch x mapper table");
    BenchConfig bc;
    cmd_bench->add_option("--kernels", bc.kernels, "subset of builtin kernels")
        ->delimiter(',');
    cmd_bench->add_option("--size", bc.size, "problem size per dimension");
    cmd_bench->add_option("--opts", bc.opts, "of none,flat,flat+unroll")
        ->delimiter(',');
    cmd_bench->add_option("--arches", bc.arches, "arch names or files")
        ->delimiter(',');
    cmd_bench
        ->add_option("--mappers", bc.mappers,
                     "of exhaustive,heuristic,backtrack,anneal")
        ->delimiter(',');
    cmd_bench->add_option("--max-ii", bc.max_ii, "II sweep upper bound");
    cmd_bench->add_option("--seed", bc.seed, "data + annealing seed");
    cmd_bench->add_option("--threads", bc.threads,
                          "worker threads (default GRIDMAP_THREADS)");
    cmd_bench->add_flag("--timing", bc.with_timing,
                        "emit measured map_ms in the CSV");
    std::string csv_file;
    cmd_bench->add_option("--csv", csv_file, "also write the CSV here");

    std::vector<const char*> argv;
    argv.push_back("gridmap");
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (cmd_arch->parsed()) {
            ArchSpec a = load_arch(arch_file);
            out << a.name << ": " << a.rows << "x" << a.cols << " "
                << (a.interconnect.kind == InterconnectKind::HyCube ? "hycube"
                                                                    : "mesh")
                << ", " << a.enabled_pes().size() << " PEs, "
                << a.spm.pes.size() << " SPM ports\n";
            return 0;
        }

        if (cmd_dfg->parsed()) {
            LoopNest nest = transform(load_kernel(f.kernel), f.flatten_flag,
                                      f.unroll_k);
            Dfg g = build_dfg(nest);
            DfgStats st = dfg_stats(g);
            out << g.name << ": " << st.op_count << " nodes ("
                << st.mem_op_count << " memory)\n";
            for (const auto& [sec, n] : st.sections)
                out << "  " << section_name(sec) << " " << n << '\n';
            if (!dot_file.empty()) write_file(dot_file, to_dot(g));
            if (!f.out_dir.empty()) {
                std::filesystem::create_directories(f.out_dir);
                std::filesystem::path d(f.out_dir);
                write_file(d / "dfg.txt", dump_dfg(g));
                write_file(d / "dfg.dot", to_dot(g));
            }
            return 0;
        }

        if (cmd_map->parsed()) {
            if (f.ii > 0 && f.mapper != "exhaustive" && f.mapper != "anneal")
                throw ParseError("--ii applies to exhaustive|anneal only; " +
                                 f.mapper + " sweeps from min_ii");
            LoopNest nest = transform(load_kernel(f.kernel), f.flatten_flag,
                                      f.unroll_k);
            Dfg g = build_dfg(nest);
            ArchSpec a = load_arch(f.arch);
            MapOptions mo;
            mo.max_ii = f.max_ii;
            mo.seed = f.seed;
            mo.infinite_registers = f.infinite_registers;
            MapResult r;
            if (f.mapper == "heuristic")
                r = map_heuristic(g, a, mo);
            else if (f.mapper == "backtrack")
                r = map_backtrack(g, a, mo);
            else if (f.mapper == "exhaustive" || f.mapper == "anneal")
                r = sweep_or_fixed(f.mapper, g, a, mo, f.ii);
            else
                throw ParseError("unknown mapper '" + f.mapper + "'");
            if (!r.ok()) {
                err << "mapping failed: "
                    << (r.status == MapStatus::MaxIiReached
                            ? "max II reached"
                            : map_status_name(r.status));
                if (!r.detail.empty()) err << " (" << r.detail << ")";
                err << '\n';
                return 2;
            }
            const Mapping& m = *r.mapping;
            MapReport rep = mapping_report(g, a, m);
            out << g.name << " on " << a.name << ": ii " << rep.ii << ", "
                << rep.op_count << " ops, " << rep.unused_pe
                << " unused PEs, max " << rep.max_ops_per_pe << " ops/PE\n";
            if (!f.out_dir.empty()) {
                std::filesystem::create_directories(f.out_dir);
                std::filesystem::path d(f.out_dir);
                write_file(d / "mapping.csv", export_mapping_csv(g, a, m));
                write_file(d / "mapping.json", mapping_to_json(m));
                write_file(d / "dfg.dot", to_dot(g));
                write_file(d / "report.txt", format_report(a, g, m, rep));
            }
            return 0;
        }

        if (cmd_sim->parsed()) {
            LoopNest nest = transform(load_kernel(f.kernel), f.flatten_flag,
                                      f.unroll_k);
            Dfg g = build_dfg(nest);
            ArchSpec a = load_arch(f.arch);
            Mapping m = mapping_from_json(read_file(mapping_file));
            MemImage input = gen_data(nest, f.seed);
            std::int64_t iters = iterations >= 0 ? iterations
                                                 : trip_count(nest);
            SimOptions so;
            if (f.trace) so.trace = &out;
            SimResult sim = simulate(a, g, m, input, iters, so);
            MemImage expect = reference_exec(nest, input);
            CompareResult cmp =
                compare_mem(sim.mem, expect, output_arrays(nest));
            out << "cycles " << sim.stats.total_cycles << ", iterations "
                << sim.stats.iterations << ", matches " << cmp.matches
                << ", mismatches " << cmp.mismatches;
            if (cmp.first_mismatch_addr)
                out << " (first at word " << *cmp.first_mismatch_addr << ")";
            out << '\n';
            return 0;
        }

        if (cmd_bench->parsed()) {
            std::vector<BenchRow> rows = run_bench(bc);
            out << bench_table(rows);
            if (!csv_file.empty())
                write_file(csv_file, bench_csv(rows, bc.with_timing));
            return 0;
        }
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const SemanticError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const EvalError& e) {
        err << "runtime error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace gridmap
