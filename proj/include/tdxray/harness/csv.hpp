#pragma once

// CSV output: comma separator, '.' decimal, header row, LF line endings,
// doubles in %.17g.

#include "tdxray/core.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace tdxray::harness {

/// One CSV field rendered to text.
struct Cell {
    std::string text;

    Cell(double v) : text(format(v)) {}
    Cell(int v) : text(std::to_string(v)) {}
    Cell(long v) : text(std::to_string(v)) {}
    Cell(long long v) : text(std::to_string(v)) {}
    Cell(unsigned v) : text(std::to_string(v)) {}
    Cell(unsigned long v) : text(std::to_string(v)) {}
    Cell(unsigned long long v) : text(std::to_string(v)) {}
    Cell(bool v) : text(v ? "1" : "0") {}
    Cell(const char* s) : text(s) {}
    Cell(std::string s) : text(std::move(s)) {}

    static std::string format(double v) {
        if (std::isnan(v)) return "nan";
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        if (v == 0.0) return "0";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
};

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : width_(header.size()) {
        std::vector<Cell> cells;
        for (auto& h : header) cells.emplace_back(std::move(h));
        append(cells);
    }

    void row(const std::vector<Cell>& cells) {
        if (cells.size() != width_)
            throw Error(ErrorKind::InvalidArgument, "harness/csv",
                        "row has " + std::to_string(cells.size()) + " fields, header has " + std::to_string(width_));
        append(cells);
    }

    const std::string& str() const { return text_; }
    std::size_t rows() const { return rows_ - 1; }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorKind::InvalidArgument, "harness/csv", "cannot write " + path);
        f << text_;
    }

private:
    void append(const std::vector<Cell>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].text.find_first_of(",\n\r\"") != std::string::npos)
                throw Error(ErrorKind::InvalidArgument, "harness/csv", "field needs quoting: " + cells[i].text);
            if (i) text_ += ',';
            text_ += cells[i].text;
        }
        text_ += '\n';
        ++rows_;
    }

    std::size_t width_;
    std::size_t rows_ = 0;
    std::string text_;
};

}  // namespace tdxray::harness
