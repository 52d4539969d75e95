#include "sicl/data_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sicl/error.hpp"
#include "sicl/graph_io.hpp"

namespace sicl {

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
        std::size_t lead = 0;
        while (lead < cell.size() && cell[lead] == ' ') ++lead;
        out.push_back(cell.substr(lead));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_cell(const std::string& cell, int line_no, int col) {
    double v = 0.0;
    const char* end = cell.data() + cell.size();
    const auto res = std::from_chars(cell.data(), end, v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
        fail(ErrorKind::InvalidInput,
             "csv line " + std::to_string(line_no) + ", column " + std::to_string(col) + ": not a finite number '" + cell + "'");
    return v;
}

}  // namespace

std::string data_to_csv(const scm::DataSample& data) {
    std::string out;
    for (int c = 0; c < data.d(); ++c) {
        if (c) out += ',';
        out += "X" + std::to_string(c);
    }
    out += '\n';
    for (int r = 0; r < data.n(); ++r) {
        for (int c = 0; c < data.d(); ++c) {
            if (c) out += ',';
            const double v = data.at(r, c);
            out += data.is_discrete() ? std::to_string(static_cast<long long>(v)) : format_double(v);
        }
        out += '\n';
    }
    return out;
}

scm::DataSample data_from_csv(const std::string& text, std::optional<scm::DataType> hint) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::InvalidInput, "csv: empty input");
    const int d = static_cast<int>(split_line(line).size());
    if (line.empty() || d < 1) fail(ErrorKind::InvalidInput, "csv: missing header");

    std::vector<double> values;
    bool integral = true;
    int n = 0, line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_line(line);
        if (static_cast<int>(cells.size()) != d)
            fail(ErrorKind::InvalidInput, "csv line " + std::to_string(line_no) + ": expected " + std::to_string(d) + " columns");
        for (int c = 0; c < d; ++c) {
            const double v = parse_cell(cells[c], line_no, c);
            if (v < 0 || v != std::floor(v) || cells[c].find_first_of(".eE") != std::string::npos) integral = false;
            values.push_back(v);
        }
        ++n;
    }
    const scm::DataType dtype = hint.value_or(integral && n > 0 ? scm::DataType::Discrete : scm::DataType::Continuous);
    if (dtype == scm::DataType::Continuous) return scm::DataSample(n, d, std::move(values));
    if (!integral) fail(ErrorKind::InvalidInput, "csv: discrete data must hold non-negative integers");
    std::vector<int> arity(d, 1);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c)
            arity[c] = std::max(arity[c], static_cast<int>(values[static_cast<std::size_t>(r) * d + c]) + 1);
    return scm::DataSample(n, d, std::move(values), std::move(arity));
}

void write_data_csv(const std::filesystem::path& path, const scm::DataSample& data) {
    write_text_file(path, data_to_csv(data));
}

scm::DataSample read_data_csv(const std::filesystem::path& path, std::optional<scm::DataType> hint) {
    return data_from_csv(read_text_file(path), hint);
}

}  // namespace sicl
