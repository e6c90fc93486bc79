#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace powtopo::util {

//! Split one CSV line. Double-quoted fields may contain commas; "" inside quotes is a literal quote.
std::vector<std::string> split_csv_line(std::string_view line);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; //!< 1-based source line of each row
};

/**
 * Read a CSV file with a header row. Blank lines are skipped, a UTF-8 BOM and CR line endings
 * are tolerated, and every row must have as many fields as the header.
 * @throws DataError naming the file and line on any problem.
 */
CsvTable read_csv(const std::string& path, const std::vector<std::string>& expected_header);

//! Parse a finite double; throws DataError with `what` in the message.
double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);

//! Quote a field if it needs it.
std::string csv_field(std::string_view s);

//! Fixed 6-decimal formatting used in every output CSV.
std::string fixed6(double x);

} // namespace powtopo::util
