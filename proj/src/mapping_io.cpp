#include <algorithm>
#include <map>
#include <sstream>

#include "gridmap/error.hpp"
#include "gridmap/mapper.hpp"
#include "json.hpp"

namespace gridmap {

namespace {

// column sort rank within a PE: FU, then ports in Dir order, then registers
int resource_rank(const Resource& r) {
    switch (r.kind) {
    case Resource::Kind::Fu: return 0;
    case Resource::Kind::RoutePort: return 1 + int(r.dir);
    case Resource::Kind::Register: return 5 + r.index;
    }
    return 0;
}

Resource parse_resource(const std::string& s, Coord pe,
                        const std::string& context) {
    if (s == "FU") return fu(pe);
    if (s == "N") return route_port(pe, Dir::N);
    if (s == "E") return route_port(pe, Dir::E);
    if (s == "S") return route_port(pe, Dir::S);
    if (s == "W") return route_port(pe, Dir::W);
    if (s.size() >= 2 && s[0] == 'R') {
        try {
            return reg(pe, std::stoi(s.substr(1)));
        } catch (const std::exception&) {
        }
    }
    throw ParseError(context + ": unknown resource '" + s + "'");
}

} // namespace

std::string export_mapping_csv(const Dfg& g, const ArchSpec& a,
                               const Mapping& m) {
    (void)g;
    (void)a;
    struct Row {
        int cycle;
        Resource res;
        std::string kind;
        int payload;
        auto key() const {
            return std::tuple(cycle, res.pe.row, res.pe.col,
                              resource_rank(res));
        }
    };
    std::vector<Row> rows;
    for (const auto& [id, p] : m.place)
        rows.push_back({p.time % m.ii, fu(p.pe), "op", id});
    // a slot shared by fan-out edges appears once, tagged with the lowest
    // edge id that uses it
    std::map<std::pair<Resource, int>, Row> route_rows;
    for (const auto& [eid, slots] : m.routes)
        for (const RouteSlot& s : slots) {
            std::string kind =
                s.res.kind == Resource::Kind::Register ? "hold" : "route";
            Row row{s.cycle % m.ii, s.res, kind, eid};
            auto [it, fresh] = route_rows.try_emplace({s.res, row.cycle}, row);
            if (!fresh && eid < it->second.payload) it->second = row;
        }
    for (const auto& [k, row] : route_rows) {
        (void)k;
        rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end(),
              [](const Row& x, const Row& y) { return x.key() < y.key(); });
    std::ostringstream os;
    os << "cycle,row,col,resource,kind,payload\n";
    for (const Row& r : rows)
        os << r.cycle << ',' << r.res.pe.row << ',' << r.res.pe.col << ','
           << resource_name(r.res) << ',' << r.kind << ',' << r.payload
           << '\n';
    return os.str();
}

std::vector<CsvRow> parse_mapping_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::vector<CsvRow> rows;
    bool saw_header = false;
    while (std::getline(is, line)) {
        lineno++;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "cycle,row,col,resource,kind,payload")
                throw ParseError("mapping csv line 1: expected header "
                                 "'cycle,row,col,resource,kind,payload'");
            saw_header = true;
            continue;
        }
        std::vector<std::string> f;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 6)
            throw ParseError("mapping csv line " + std::to_string(lineno) +
                             ": expected 6 fields, got " +
                             std::to_string(f.size()));
        CsvRow r;
        try {
            r.cycle = std::stoi(f[0]);
            r.pe = {std::stoi(f[1]), std::stoi(f[2])};
        } catch (const std::exception&) {
            throw ParseError("mapping csv line " + std::to_string(lineno) +
                             ": non-numeric cycle or coordinate");
        }
        r.res = parse_resource(f[3], r.pe,
                               "mapping csv line " + std::to_string(lineno));
        r.kind = f[4];
        if (r.kind != "op" && r.kind != "route" && r.kind != "hold")
            throw ParseError("mapping csv line " + std::to_string(lineno) +
                             ": unknown kind '" + r.kind + "'");
        r.payload = f[5];
        rows.push_back(std::move(r));
    }
    if (!saw_header) throw ParseError("mapping csv: empty input");
    return rows;
}

std::string mapping_to_json(const Mapping& m) {
    nlohmann::json j;
    j["ii"] = m.ii;
    j["infinite_registers"] = m.infinite_registers;
    j["wall_ms"] = m.wall_ms;
    j["place"] = nlohmann::json::array();
    for (const auto& [id, p] : m.place)
        j["place"].push_back({{"node", id},
                              {"row", p.pe.row},
                              {"col", p.pe.col},
                              {"time", p.time}});
    j["routes"] = nlohmann::json::array();
    for (const auto& [eid, slots] : m.routes) {
        nlohmann::json path = nlohmann::json::array();
        for (const RouteSlot& s : slots)
            path.push_back({{"cycle", s.cycle},
                            {"row", s.res.pe.row},
                            {"col", s.res.pe.col},
                            {"res", resource_name(s.res)}});
        j["routes"].push_back({{"edge", eid}, {"slots", std::move(path)}});
    }
    return j.dump(2) + "\n";
}

Mapping mapping_from_json(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        Mapping m;
        m.ii = j.at("ii").get<int>();
        if (m.ii < 1) throw ParseError("mapping json: ii must be positive");
        m.infinite_registers = j.value("infinite_registers", false);
        m.wall_ms = j.value("wall_ms", 0.0);
        for (const auto& p : j.at("place")) {
            Placement pl;
            pl.pe = {p.at("row").get<int>(), p.at("col").get<int>()};
            pl.time = p.at("time").get<int>();
            m.place[p.at("node").get<int>()] = pl;
        }
        for (const auto& rt : j.value("routes", nlohmann::json::array())) {
            std::vector<RouteSlot> slots;
            for (const auto& s : rt.at("slots")) {
                Coord pe{s.at("row").get<int>(), s.at("col").get<int>()};
                slots.push_back(
                    {parse_resource(s.at("res").get<std::string>(), pe,
                                    "mapping json"),
                     s.at("cycle").get<int>()});
            }
            m.routes[rt.at("edge").get<int>()] = std::move(slots);
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("mapping json: ") + e.what());
    }
}

} // namespace gridmap
