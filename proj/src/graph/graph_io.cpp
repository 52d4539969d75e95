#include "sicl/graph_io.hpp"

#include <fstream>
#include <sstream>

#include "sicl/error.hpp"

namespace sicl {

namespace {

using nlohmann::json;

int read_vertex_count(const json& j) {
    if (!j.is_object() || !j.contains("d") || !j["d"].is_number_integer())
        fail(ErrorKind::InvalidInput, "graph json: missing integer field \"d\"");
    const int d = j["d"].get<int>();
    if (d < 0) fail(ErrorKind::InvalidInput, "graph json: negative \"d\"");
    return d;
}

std::vector<std::pair<int, int>> read_pairs(const json& j, const char* key) {
    std::vector<std::pair<int, int>> out;
    if (!j.contains(key)) return out;
    const json& arr = j[key];
    if (!arr.is_array()) fail(ErrorKind::InvalidInput, std::string("graph json: \"") + key + "\" must be an array");
    for (const json& e : arr) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
            fail(ErrorKind::InvalidInput, std::string("graph json: entries of \"") + key + "\" must be [i,j]");
        out.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return out;
}

}  // namespace

json dag_to_json(const Dag& g) {
    json edges = json::array();
    for (const Edge& e : g.edges()) edges.push_back({e.from, e.to});
    return json{{"d", g.size()}, {"edges", edges}};
}

Dag dag_from_json(const json& j) {
    const int d = read_vertex_count(j);
    if (!j.contains("edges")) fail(ErrorKind::InvalidInput, "graph json: missing \"edges\"");
    std::vector<Edge> edges;
    for (auto [a, b] : read_pairs(j, "edges")) edges.push_back({a, b});
    return Dag(d, edges);
}

json pdag_to_json(const Pdag& p) {
    json dir = json::array(), und = json::array();
    for (const Edge& e : p.directed_edges()) dir.push_back({e.from, e.to});
    for (const Pair& e : p.undirected_edges()) und.push_back({e.first, e.second});
    return json{{"d", p.size()}, {"edges", dir}, {"undirected", und}};
}

Pdag pdag_from_json(const json& j) {
    const int d = read_vertex_count(j);
    std::vector<Edge> dir;
    std::vector<Pair> und;
    for (auto [a, b] : read_pairs(j, "edges")) dir.push_back({a, b});
    for (auto [a, b] : read_pairs(j, "undirected")) {
        if (a >= b) fail(ErrorKind::InvalidInput, "graph json: undirected pairs must satisfy i < j");
        und.push_back({a, b});
    }
    return Pdag(d, dir, und);
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
    out << text;
    if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open for reading: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

namespace {
json parse_file(const std::filesystem::path& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::InvalidInput, "malformed json in " + path.string() + ": " + e.what());
    }
}
}  // namespace

void write_dag(const std::filesystem::path& path, const Dag& g) { write_text_file(path, dump_json(dag_to_json(g))); }
Dag read_dag(const std::filesystem::path& path) { return dag_from_json(parse_file(path)); }
void write_pdag(const std::filesystem::path& path, const Pdag& p) { write_text_file(path, dump_json(pdag_to_json(p))); }
Pdag read_pdag(const std::filesystem::path& path) { return pdag_from_json(parse_file(path)); }

}  // namespace sicl
