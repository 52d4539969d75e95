#pragma once

// JSON encodings:
//   DAG  : {"d": int, "edges": [[i,j],...]}                       (i -> j)
//   PDAG : {"d": int, "edges": [[i,j],...], "undirected": [[i,j],...]}  (i < j)

#include <filesystem>
#include <string>

#include "json.hpp"
#include "sicl/graph.hpp"

namespace sicl {

nlohmann::json dag_to_json(const Dag& g);
Dag dag_from_json(const nlohmann::json& j);

nlohmann::json pdag_to_json(const Pdag& p);
Pdag pdag_from_json(const nlohmann::json& j);

// Canonical text form (two-space indent, trailing newline); reading a file
// written by these functions and writing it back is byte-identical.
std::string dump_json(const nlohmann::json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

void write_dag(const std::filesystem::path& path, const Dag& g);
Dag read_dag(const std::filesystem::path& path);
void write_pdag(const std::filesystem::path& path, const Pdag& p);
Pdag read_pdag(const std::filesystem::path& path);

}  // namespace sicl
