#include "swdiff/csv.hpp"

#include <cstdio>

namespace swdiff {

std::string CsvWriter::format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void CsvWriter::preamble(const std::map<std::string, std::string>& config_echo, std::uint64_t seed) {
    os_ << "# " << kToolVersion << "\n";
    os_ << "# config:";
    for (const auto& [key, value] : config_echo) os_ << ' ' << key << '=' << value;
    os_ << "\n";
    os_ << "# seed=" << seed << "\n";
}

void CsvWriter::comment(const std::string& text) { os_ << "# " << text << "\n"; }

void CsvWriter::header(const std::vector<std::string>& columns) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) os_ << ',';
        os_ << columns[c];
    }
    os_ << "\n";
}

CsvWriter& CsvWriter::field(const std::string& v) {
    if (row_open_) os_ << ',';
    os_ << v;
    row_open_ = true;
    return *this;
}

CsvWriter& CsvWriter::field(double v) { return field(format_double(v)); }

CsvWriter& CsvWriter::field(std::int64_t v) { return field(std::to_string(v)); }

void CsvWriter::end_row() {
    os_ << '\n';
    row_open_ = false;
}

}  // namespace swdiff
