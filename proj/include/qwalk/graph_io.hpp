#pragma once

// JSON graph files:
//   { "vertices": V, "root": 1, "edges": [[u,v],...],
//     "marked": [ids], "gates": {"id":"AND"|"OR"}, "leaf_values": {"id":0|1} }
// Edges must already satisfy the layer property; the loader recomputes
// layers and validates the whole structure.

#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qwalk/errors.hpp"
#include "qwalk/graph.hpp"

namespace qwalk {

struct GraphFile {
  LayeredDag dag;
  VertexAnnotations ann;
};

inline GraphFile parse_graph_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("graph json must be an object");
  if (!j.contains("vertices") || !j["vertices"].is_number_integer())
    throw DomainError("graph json needs integer 'vertices'");
  int v_count = j["vertices"].get<int>();
  if (j.contains("root") && j["root"].get<int>() != 1)
    throw DomainError("root must be vertex 1");

  std::vector<std::pair<int, int>> edges;
  if (j.contains("edges")) {
    for (const auto& e : j["edges"]) {
      if (!e.is_array() || e.size() != 2) throw DomainError("edge entries must be pairs");
      edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
  }

  GraphFile f;
  f.dag = LayeredDag::from_edges(v_count, edges);

  if (j.contains("marked"))
    for (const auto& m : j["marked"]) {
      int v = m.get<int>();
      f.dag.check_vertex(v);
      f.ann.marked.insert(v);
    }
  if (j.contains("gates"))
    for (const auto& [key, val] : j["gates"].items()) {
      int v = std::stoi(key);
      f.dag.check_vertex(v);
      std::string s = val.get<std::string>();
      if (s == "AND")
        f.ann.gates[v] = Gate::And;
      else if (s == "OR")
        f.ann.gates[v] = Gate::Or;
      else
        throw DomainError("gate must be AND or OR");
    }
  if (j.contains("leaf_values"))
    for (const auto& [key, val] : j["leaf_values"].items()) {
      int v = std::stoi(key);
      f.dag.check_vertex(v);
      int b = val.get<int>();
      if (b != 0 && b != 1) throw DomainError("leaf values must be 0 or 1");
      f.ann.leaf_values[v] = b;
    }
  return f;
}

inline nlohmann::json graph_to_json(const LayeredDag& g, const VertexAnnotations& ann = {}) {
  nlohmann::json j;
  j["vertices"] = g.vertex_count();
  j["root"] = 1;
  j["edges"] = nlohmann::json::array();
  for (auto [u, v] : g.edges()) j["edges"].push_back({u, v});
  if (!ann.marked.empty()) j["marked"] = ann.marked;
  if (!ann.gates.empty()) {
    nlohmann::json gates = nlohmann::json::object();
    for (auto [v, g2] : ann.gates) gates[std::to_string(v)] = (g2 == Gate::And ? "AND" : "OR");
    j["gates"] = gates;
  }
  if (!ann.leaf_values.empty()) {
    nlohmann::json lv = nlohmann::json::object();
    for (auto [v, b] : ann.leaf_values) lv[std::to_string(v)] = b;
    j["leaf_values"] = lv;
  }
  return j;
}

inline GraphFile load_graph_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad json in " + path + ": " + e.what());
  }
  return parse_graph_json(j);
}

inline void save_graph_json(const std::string& path, const LayeredDag& g,
                            const VertexAnnotations& ann = {}) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << graph_to_json(g, ann).dump(2) << "\n";
}

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// content hash over the canonical (sorted-key) JSON form
inline std::string graph_content_hash(const LayeredDag& g, const VertexAnnotations& ann = {}) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(graph_to_json(g, ann).dump())));
  return std::string(buf);
}

}  // namespace qwalk
