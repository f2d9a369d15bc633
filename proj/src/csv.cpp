#include "numsplit/csv.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>

#include "numsplit/error.hpp"

namespace numsplit::csv {

namespace {

std::string quote(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    cells.push_back(cell);
    return cells;
}

double parse_number(const std::string& text, const std::string& where) {
    std::size_t start = text.find_first_not_of(' ');
    std::size_t end = text.find_last_not_of(' ');
    if (start == std::string::npos) throw ConfigError(where + ": empty cell");
    double value = 0.0;
    const char* first = text.data() + start;
    const char* last = text.data() + end + 1;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw ConfigError(where + ": not a number: '" + text + "'");
    return value;
}

}  // namespace

std::string number(double value) { return fmt::format("{:.17g}", value); }

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {}

Table& Table::row() {
    if (!rows_.empty() && rows_.back().size() != header_.size())
        throw std::logic_error("csv row has the wrong number of cells");
    rows_.emplace_back();
    return *this;
}

Table& Table::add(double value) { return add(number(value)); }
Table& Table::add(long value) { return add(fmt::format("{}", value)); }

Table& Table::add(const std::string& text) {
    if (rows_.empty() || rows_.back().size() >= header_.size())
        throw std::logic_error("csv cell outside a row");
    rows_.back().push_back(text);
    return *this;
}

std::string Table::str() const {
    std::string out;
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += quote(cells[i]);
        }
        out += '\n';
    };
    emit(header_);
    for (const auto& r : rows_) {
        if (r.size() != header_.size()) throw std::logic_error("incomplete csv row");
        emit(r);
    }
    return out;
}

void Table::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << str();
    if (!out) throw ConfigError("failed writing " + path.string());
}

int Parsed::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

Parsed read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    Parsed parsed;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
        if (!have_header) {
            parsed.header = split_line(line);
            have_header = true;
        } else {
            parsed.rows.push_back(split_line(line));
        }
    }
    if (!have_header) throw ConfigError(path.string() + ": empty CSV");
    return parsed;
}

DecayTrace read_trace(const std::filesystem::path& path) {
    const Parsed parsed = read(path);
    const int tc = parsed.column("t_us");
    const int pc = parsed.column("P_e");
    if (tc < 0 || pc < 0) throw ConfigError(path.string() + ": expected columns t_us and P_e");
    if (parsed.rows.empty()) throw ConfigError(path.string() + ": no data rows");
    DecayTrace trace;
    for (std::size_t i = 0; i < parsed.rows.size(); ++i) {
        const auto& r = parsed.rows[i];
        const std::string where = path.string() + ":" + std::to_string(i + 2);
        if (r.size() != parsed.header.size()) throw ConfigError(where + ": wrong number of cells");
        trace.time.push_back(parse_number(r[tc], where));
        trace.population.push_back(parse_number(r[pc], where));
    }
    return trace;
}

void write_trace(const DecayTrace& trace, const std::filesystem::path& path) {
    Table table({"t_us", "P_e"});
    for (std::size_t i = 0; i < trace.time.size(); ++i) table.row().add(trace.time[i]).add(trace.population[i]);
    table.write(path);
}

}  // namespace numsplit::csv
