#include "gridmap/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <thread>

#include "gridmap/dfg.hpp"
#include "gridmap/error.hpp"
#include "gridmap/mapper.hpp"
#include "gridmap/simulator.hpp"

namespace gridmap {

namespace {

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

int opt_rank(const std::string& o) {
    if (o == "none") return 0;
    if (o == "flat") return 1;
    if (o == "flat+unroll") return 2;
    return 3;
}

ArchSpec resolve_arch(const std::string& name) {
    if (name == "mesh4x4" || name == "hycube4x4") return builtin_arch(name);
    return parse_arch_file(name);
}

LoopNest apply_opt(const LoopNest& nest, const std::string& opt) {
    if (opt == "none") return nest.clone();
    if (opt == "flat") return flatten(nest);
    if (opt == "flat+unroll") return unroll(flatten(nest), 2);
    throw SemanticError("unknown optimization '" + opt + "'");
}

// sweep wrapper for the fixed-II mappers
MapResult sweep_fixed_ii(const std::string& mapper, const Dfg& g,
                         const ArchSpec& a, const MapOptions& mo) {
    MapResult last;
    bool budget = false;
    int lo = min_ii(g, a);
    for (int ii = lo; ii <= mo.max_ii; ii++) {
        MapResult r = mapper == "exhaustive" ? map_exhaustive(g, a, ii, mo)
                                             : map_anneal(g, a, ii, mo);
        if (r.ok()) return r;
        if (r.status == MapStatus::NoCapablePe) return r;
        if (r.status == MapStatus::BudgetExhausted) budget = true;
        last = std::move(r);
    }
    last.status = budget ? MapStatus::BudgetExhausted : MapStatus::MaxIiReached;
    last.detail = "no II up to " + std::to_string(mo.max_ii);
    return last;
}

MapResult run_mapper(const std::string& mapper, const Dfg& g,
                     const ArchSpec& a, const MapOptions& mo) {
    if (mapper == "heuristic") return map_heuristic(g, a, mo);
    if (mapper == "backtrack") return map_backtrack(g, a, mo);
    if (mapper == "exhaustive" || mapper == "anneal")
        return sweep_fixed_ii(mapper, g, a, mo);
    throw SemanticError("unknown mapper '" + mapper + "'");
}

std::string failure_status(MapStatus s) {
    switch (s) {
    case MapStatus::BudgetExhausted: return "budget";
    case MapStatus::MaxIiReached: return "max-ii";
    case MapStatus::NoCapablePe: return "capability";
    case MapStatus::Infeasible: return "infeasible";
    case MapStatus::Mapped: break;
    }
    return "ok";
}

BenchRow run_one(const BenchConfig& cfg, const std::string& kernel,
                 const std::string& opt, const std::string& arch_name,
                 const std::string& mapper) {
    BenchRow row;
    row.kernel = kernel;
    row.optimization = opt;
    row.arch = arch_name;
    row.mapper = mapper;
    try {
        LoopNest nest = builtin_kernel(kernel, cfg.size);
        LoopNest tnest = apply_opt(nest, opt);
        Dfg g = build_dfg(tnest);
        row.ops = int(g.nodes.size());
        ArchSpec a = resolve_arch(arch_name);
        MapOptions mo;
        mo.max_ii = cfg.max_ii;
        mo.seed = cfg.seed;
        MapResult r = run_mapper(mapper, g, a, mo);
        if (!r.ok()) {
            row.status = failure_status(r.status);
            return row;
        }
        const Mapping& m = *r.mapping;
        MapReport rep = mapping_report(g, a, m);
        row.mapped = true;
        row.ii = rep.ii;
        row.unused_pe = rep.unused_pe;
        row.max_ops_per_pe = rep.max_ops_per_pe;
        row.map_ms = m.wall_ms;
        MemImage input = gen_data(tnest, cfg.seed);
        std::int64_t iters = trip_count(tnest);
        MemImage expect = reference_exec(tnest, input);
        SimResult sim = simulate(a, g, m, input, iters);
        CompareResult cmp =
            compare_mem(sim.mem, expect, output_arrays(tnest));
        row.mismatches = cmp.mismatches;
        row.status = "ok";
    } catch (const std::exception& e) {
        row.mapped = false;
        row.status = sanitize(e.what());
    }
    return row;
}

int thread_count(const BenchConfig& cfg, size_t tasks) {
    int n = cfg.threads;
    if (n <= 0) {
        if (const char* env = std::getenv("GRIDMAP_THREADS"))
            n = std::atoi(env);
        if (n <= 0) n = int(std::thread::hardware_concurrency());
        if (n <= 0) n = 1;
    }
    return std::max(1, std::min(n, int(tasks ? tasks : 1)));
}

} // namespace

std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    std::vector<std::string> kernels =
        cfg.kernels.empty() ? builtin_kernel_names() : cfg.kernels;
    std::vector<std::string> opts =
        cfg.opts.empty() ? std::vector<std::string>{"flat", "flat+unroll"}
                         : cfg.opts;
    std::vector<std::string> arches =
        cfg.arches.empty()
            ? std::vector<std::string>{"mesh4x4", "hycube4x4"}
            : cfg.arches;
    std::vector<std::string> mappers =
        cfg.mappers.empty() ? std::vector<std::string>{"heuristic"}
                            : cfg.mappers;

    struct Task {
        std::string kernel, opt, arch, mapper;
    };
    std::vector<Task> tasks;
    for (const auto& k : kernels)
        for (const auto& o : opts)
            for (const auto& a : arches)
                for (const auto& mp : mappers) tasks.push_back({k, o, a, mp});

    std::vector<BenchRow> rows(tasks.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& t = tasks[i];
            rows[i] = run_one(cfg, t.kernel, t.opt, t.arch, t.mapper);
        }
    };
    int nthreads = thread_count(cfg, tasks.size());
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; i++) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // canonical order: kernel list position, opt rank, arch, mapper
    auto kernel_rank = [&](const std::string& k) {
        for (size_t i = 0; i < kernels.size(); i++)
            if (kernels[i] == k) return int(i);
        return int(kernels.size());
    };
    std::stable_sort(rows.begin(), rows.end(),
                     [&](const BenchRow& x, const BenchRow& y) {
                         return std::tuple(kernel_rank(x.kernel),
                                           opt_rank(x.optimization), x.arch,
                                           x.mapper) <
                                std::tuple(kernel_rank(y.kernel),
                                           opt_rank(y.optimization), y.arch,
                                           y.mapper);
                     });
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows, bool with_timing) {
    std::ostringstream os;
    os << "kernel,optimization,arch,mapper,ops,ii,unused_pe,max_ops_per_pe,"
          "map_ms,mismatches,status\n";
    for (const BenchRow& r : rows) {
        os << r.kernel << ',' << r.optimization << ',' << r.arch << ','
           << r.mapper << ',' << r.ops << ',';
        if (r.mapped) {
            os << r.ii << ',' << r.unused_pe << ',' << r.max_ops_per_pe << ',';
            if (with_timing)
                os << std::fixed << std::setprecision(3) << r.map_ms;
            else
                os << 0;
            os << ',' << r.mismatches << ',' << r.status << '\n';
        } else {
            os << "FAILED,,,,," << r.status << '\n';
        }
    }
    return os.str();
}

std::string bench_table(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << std::left << std::setw(10) << "kernel" << std::setw(13) << "opt"
       << std::setw(11) << "arch" << std::setw(11) << "mapper" << std::right
       << std::setw(5) << "ops" << std::setw(8) << "ii" << std::setw(8)
       << "unused" << std::setw(8) << "maxops" << std::setw(10) << "mism"
       << "  status\n";
    for (const BenchRow& r : rows) {
        os << std::left << std::setw(10) << r.kernel << std::setw(13)
           << r.optimization << std::setw(11) << r.arch << std::setw(11)
           << r.mapper << std::right << std::setw(5) << r.ops;
        if (r.mapped)
            os << std::setw(8) << r.ii << std::setw(8) << r.unused_pe
               << std::setw(8) << r.max_ops_per_pe << std::setw(10)
               << r.mismatches;
        else
            os << std::setw(8) << "FAILED" << std::setw(8) << '-'
               << std::setw(8) << '-' << std::setw(10) << '-';
        os << "  " << r.status << '\n';
    }
    return os.str();
}

} // namespace gridmap
