#pragma once

// CSV files written and read by the harness. Numbers use the shortest
// round-trip decimal form so a file re-read gives back the exact doubles.
//
//   trace     t,x_0,...,x_{m-1},f,s_t,clamped,pool_size,ms
//   test set  x0,...,x{m-1},f

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "annr/decimal.hpp"
#include "annr/engine.hpp"
#include "annr/errors.hpp"
#include "annr/testbed.hpp"

namespace annr {

/// Writes `content` to a temporary sibling and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw IoError("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " to " + path.string());
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string trace_csv(const RunTrace& trace, std::size_t dim) {
    std::ostringstream os;
    os << 't';
    for (std::size_t i = 0; i < dim; ++i) os << ",x_" << i;
    os << ",f,s_t,clamped,pool_size,ms\n";
    for (const auto& r : trace.rows) {
        os << r.t;
        for (Eigen::Index i = 0; i < r.point.size(); ++i) os << ',' << format_double(r.point[i]);
        os << ',' << format_double(r.value) << ',' << format_double(r.score) << ',' << (r.clamped ? 1 : 0)
           << ',' << r.pool_size << ',' << format_double(r.ms) << '\n';
    }
    return os.str();
}

inline RunTrace parse_trace_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw IoError("trace file is empty");
    const auto header = split_csv_line(line);
    if (header.size() < 7 || header.front() != "t") throw IoError("not a trace file: bad header");
    const std::size_t dim = header.size() - 6;
    for (std::size_t i = 0; i < dim; ++i) {
        if (header[1 + i] != "x_" + std::to_string(i)) throw IoError("not a trace file: bad header");
    }

    auto number = [](const std::string& s, std::size_t lineno) {
        const auto v = parse_double(s);
        if (!v) throw IoError("bad number '" + s + "' on line " + std::to_string(lineno));
        return *v;
    };
    RunTrace trace;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) throw IoError("wrong column count on line " + std::to_string(lineno));
        TraceRow r;
        r.t = static_cast<std::size_t>(number(cells[0], lineno));
        r.point.resize(static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i) r.point[static_cast<Eigen::Index>(i)] = number(cells[1 + i], lineno);
        r.value = number(cells[1 + dim], lineno);
        r.score = number(cells[2 + dim], lineno);
        r.clamped = number(cells[3 + dim], lineno) != 0.0;
        r.pool_size = static_cast<std::size_t>(number(cells[4 + dim], lineno));
        r.ms = number(cells[5 + dim], lineno);
        trace.rows.push_back(std::move(r));
    }
    return trace;
}

inline std::string test_set_csv(const TestSet& ts) {
    std::ostringstream os;
    const std::size_t dim = ts.points.empty() ? 0 : static_cast<std::size_t>(ts.points.front().size());
    for (std::size_t i = 0; i < dim; ++i) os << 'x' << i << ',';
    os << "f\n";
    for (std::size_t k = 0; k < ts.points.size(); ++k) {
        for (Eigen::Index i = 0; i < ts.points[k].size(); ++i) os << format_double(ts.points[k][i]) << ',';
        os << format_double(ts.values[k]) << '\n';
    }
    return os.str();
}

inline TestSet parse_test_set_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw IoError("test set file is empty");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header.back() != "f") throw IoError("not a test set file: bad header");
    const std::size_t dim = header.size() - 1;
    for (std::size_t i = 0; i < dim; ++i) {
        if (header[i] != "x" + std::to_string(i)) throw IoError("not a test set file: bad header");
    }
    TestSet ts;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != dim + 1) throw IoError("wrong column count in test set file");
        Point p(static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i <= dim; ++i) {
            const auto v = parse_double(cells[i]);
            if (!v) throw IoError("bad number '" + cells[i] + "' in test set file");
            if (i < dim) {
                p[static_cast<Eigen::Index>(i)] = *v;
            } else {
                ts.values.push_back(*v);
            }
        }
        ts.points.push_back(std::move(p));
    }
    return ts;
}

}  // namespace annr
