#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace swdiff {

inline constexpr const char* kToolVersion = "swdiff 0.1.0";

/// CSV writer with the shared comment preamble: tool version, the full
/// effective config (sorted keys), and the seed. Doubles are written with
/// %.17g so reruns are byte-identical.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void preamble(const std::map<std::string, std::string>& config_echo, std::uint64_t seed);
    void comment(const std::string& text);
    void header(const std::vector<std::string>& columns);

    CsvWriter& field(const std::string& v);
    CsvWriter& field(double v);
    CsvWriter& field(std::int64_t v);
    void end_row();

    static std::string format_double(double v);

private:
    std::ostream& os_;
    bool row_open_ = false;
};

}  // namespace swdiff
