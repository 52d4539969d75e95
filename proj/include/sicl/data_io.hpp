#pragma once

// Data CSV: header X0..X{d-1}, one observation per row. Continuous values are
// written with round-trip precision; discrete values as non-negative integers.

#include <filesystem>
#include <optional>
#include <string>

#include "sicl/scm.hpp"

namespace sicl {

std::string data_to_csv(const scm::DataSample& data);

// With no hint, a file whose cells are all non-negative integers is read as
// discrete (arity = column max + 1); anything else is continuous.
scm::DataSample data_from_csv(const std::string& text, std::optional<scm::DataType> hint = std::nullopt);

void write_data_csv(const std::filesystem::path& path, const scm::DataSample& data);
scm::DataSample read_data_csv(const std::filesystem::path& path, std::optional<scm::DataType> hint = std::nullopt);

}  // namespace sicl
