#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dfpower {

// Shortest decimal representation that round-trips to the same double.
// All CSV output goes through this so rereading a file restores bits.
std::string format_double(double v);

// One CSV record; empty fields stay empty strings.
std::vector<std::string> split_csv_line(const std::string& line);

// Minimal reader: header row + records, comma-separated, no quoting (none of
// our payloads contain commas).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 if absent
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

// FNV-1a over the file bytes, for run manifests.
std::uint64_t fnv1a_file(const std::string& path);

}  // namespace dfpower
