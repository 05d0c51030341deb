#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "gridmap/dfg.hpp"
#include "gridmap/error.hpp"
#include "gridmap/loopir.hpp"
#include "gridmap/mapper.hpp"
#include "gridmap/simulator.hpp"
#include "oracles.hpp"

using namespace gridmap;

namespace {

struct Mapped {
    LoopNest nest;
    Dfg g;
    ArchSpec a;
    Mapping m;
};

Mapped mapped_kernel(const std::string& kernel, int n,
                     const std::string& arch = "mesh4x4") {
    LoopNest nest = flatten(builtin_kernel(kernel, n));
    Dfg g = build_dfg(nest);
    ArchSpec a = builtin_arch(arch);
    MapResult r = map_heuristic(g, a);
    REQUIRE(r.ok());
    return {std::move(nest), std::move(g), std::move(a),
            std::move(*r.mapping)};
}

int pipeline_depth(const Dfg& g, const ArchSpec& a, const Mapping& m) {
    int depth = 0;
    for (const auto& [id, p] : m.place)
        depth = std::max(depth, p.time + effective_latency(g.node(id), a));
    return depth;
}

} // namespace

TEST_CASE("zero iterations leave memory untouched") {
    Mapped k = mapped_kernel("mvt", 2);
    MemImage in = gen_data(k.nest, 0);
    SimResult r = simulate(k.a, k.g, k.m, in, 0);
    CHECK(r.mem.words == in.words);
    CHECK(r.stats.total_cycles == 0);
    CHECK(r.stats.iterations == 0);
}

TEST_CASE("total_cycles follows the software-pipeline formula") {
    // one constant at time 0: depth 1, so q iterations take q cycles at ii 1
    Dfg g;
    DfgNode nd;
    nd.opcode = Opcode::Const;
    nd.value = 42;
    g.nodes.push_back(nd);
    g.validate();
    ArchSpec a = parse_arch(R"({"rows":1,"cols":1})");
    Mapping m;
    m.ii = 1;
    m.place[0] = {{0, 0}, 0};
    MemImage in;
    SimResult r = simulate(a, g, m, in, 5);
    CHECK(r.stats.total_cycles == 5);
    CHECK(r.stats.throughput == doctest::Approx(1.0));
    CHECK(r.stats.pe_utilization.at({0, 0}) == doctest::Approx(1.0));

    // and on a real kernel the formula reproduces the measured cycle count
    Mapped k = mapped_kernel("gemm", 4);
    std::int64_t iters = trip_count(k.nest);
    SimResult big = simulate(k.a, k.g, k.m, gen_data(k.nest, 0), iters);
    CHECK(big.stats.total_cycles ==
          (iters - 1) * k.m.ii + pipeline_depth(k.g, k.a, k.m));
    CHECK(big.stats.iterations == iters);
}

TEST_CASE("simulated memory matches the interpreter word for word") {
    for (std::string kernel : builtin_kernel_names())
        for (std::string arch : {"mesh4x4", "hycube4x4"}) {
            CAPTURE(kernel);
            CAPTURE(arch);
            Mapped k = mapped_kernel(kernel, 2, arch);
            MemImage in = gen_data(k.nest, 9);
            MemImage want = reference_exec(k.nest, in);
            SimResult got = simulate(k.a, k.g, k.m, in, trip_count(k.nest));
            CompareResult cmp =
                compare_mem(got.mem, want, output_arrays(k.nest));
            CHECK(cmp.mismatches == 0);
            CHECK(!cmp.first_mismatch_addr);
            std::int64_t outs = 0;
            for (const auto& name : output_arrays(k.nest))
                outs += want.layout.at(name).words();
            CHECK(cmp.matches == outs);
        }
}

TEST_CASE("cycle update is independent of PE visit order") {
    Mapped k = mapped_kernel("trisolv", 4);
    MemImage in = gen_data(k.nest, 4);
    SimOptions fwd, rev;
    rev.reverse_pe_order = true;
    SimResult a = simulate(k.a, k.g, k.m, in, trip_count(k.nest), fwd);
    SimResult b = simulate(k.a, k.g, k.m, in, trip_count(k.nest), rev);
    CHECK(a.mem.words == b.mem.words);
    CHECK(a.stats.total_cycles == b.stats.total_cycles);
}

TEST_CASE("runtime faults carry a diagnostic") {
    // 1 / 0 baked into the instruction word
    Dfg g;
    DfgNode nd;
    nd.opcode = Opcode::Div;
    nd.imm[0] = 1;
    nd.imm[1] = 0;
    g.nodes.push_back(nd);
    g.validate();
    ArchSpec a = parse_arch(R"({"rows":1,"cols":1})");
    Mapping m;
    m.ii = 1;
    m.place[0] = {{0, 0}, 0};
    MemImage in;
    CHECK_THROWS_AS(simulate(a, g, m, in, 1), EvalError);

    // a broken mapping is rejected before anything executes
    Mapped k = mapped_kernel("mvt", 2);
    Mapping bad = k.m;
    bad.place.erase(bad.place.begin()->first);
    CHECK_THROWS_AS(
        simulate(k.a, k.g, bad, gen_data(k.nest, 0), 1), SemanticError);
}

TEST_CASE("trace emits one line per firing") {
    Dfg g;
    DfgNode nd;
    nd.opcode = Opcode::Const;
    nd.value = 7;
    g.nodes.push_back(nd);
    g.validate();
    ArchSpec a = parse_arch(R"({"rows":1,"cols":1})");
    Mapping m;
    m.ii = 1;
    m.place[0] = {{0, 0}, 0};
    std::ostringstream trace;
    SimOptions opt;
    opt.trace = &trace;
    MemImage in;
    simulate(a, g, m, in, 3, opt);
    std::string text = trace.str();
    size_t lines = size_t(std::count(text.begin(), text.end(), '\n'));
    CHECK(lines == 3);
    CHECK(text.find("t=0 pe=(0,0) fire=0 out=7") == 0);
}

TEST_CASE("compare_mem pinpoints the first divergent output word") {
    LoopNest nest = builtin_kernel("gemm", 2);
    MemImage a = gen_data(nest, 1);
    MemImage b = a;
    CHECK(compare_mem(a, b, output_arrays(nest)).mismatches == 0);

    // gemm outputs C, laid out first: word 2 is inside it
    b.words[2] ^= 1;
    CompareResult cmp = compare_mem(a, b, output_arrays(nest));
    CHECK(cmp.mismatches == 1);
    REQUIRE(cmp.first_mismatch_addr);
    CHECK(*cmp.first_mismatch_addr == 2);

    // damage outside the declared outputs is not compared
    MemImage c = a;
    c.words[size_t(c.layout.at("A").base)] ^= 1;
    CHECK(compare_mem(a, c, output_arrays(nest)).mismatches == 0);

    CHECK_THROWS_AS(compare_mem(a, b, {"nope"}), SemanticError);
}
