// csv.hpp - locale-free CSV output and trace input
//
// Numbers are printed with 17 significant digits so a value survives a write /
// read cycle bit for bit. Headers are mandatory.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "numsplit/bath.hpp"

namespace numsplit::csv {

std::string number(double value);

class Table {
public:
    explicit Table(std::vector<std::string> header);

    // Cells are appended left to right; a row must be complete before the next.
    Table& row();
    Table& add(double value);
    Table& add(long value);
    Table& add(int value) { return add(static_cast<long>(value)); }
    Table& add(const std::string& text);
    Table& add(const char* text) { return add(std::string(text)); }

    std::size_t rows() const { return rows_.size(); }
    std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// Splits a CSV file into header + rows; blank lines are skipped.
struct Parsed {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    int column(const std::string& name) const;  // -1 when absent
};

Parsed read(const std::filesystem::path& path);

// Reads (t_us, P_e) columns. Throws ConfigError on a missing file, an empty
// table or unparsable numbers.
DecayTrace read_trace(const std::filesystem::path& path);
void write_trace(const DecayTrace& trace, const std::filesystem::path& path);

}  // namespace numsplit::csv
