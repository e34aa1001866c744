#include <farmselect/cli/csv.hpp>
#include <farmselect/error.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <string_view>

namespace farmselect::cli {
namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            return cells;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

bool is_missing(std::string_view cell)
{
    if (cell.empty()) return true;
    std::string lower(cell);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return lower == "na" || lower == "nan" || lower == "null";
}

std::string where(const std::string& source, std::size_t line, const std::string& column)
{
    return source + ": line " + std::to_string(line) + ", column '" + column + "'";
}

} // namespace

CsvTable read_csv(std::istream& in, const std::string& source)
{
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::vector<double> values;
    Index rows = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (!have_header) {
            std::set<std::string> seen;
            for (std::size_t c = 0; c < cells.size(); ++c) {
                std::string name(cells[c]);
                if (name.empty()) {
                    fail(ErrorKind::DataError, source + ": line " + std::to_string(line_no) + ": header column " +
                                                   std::to_string(c + 1) + " is empty");
                }
                if (!seen.insert(name).second) {
                    fail(ErrorKind::DataError, source + ": duplicate header name '" + name + "'");
                }
                table.header.push_back(std::move(name));
            }
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            fail(ErrorKind::DataError, source + ": line " + std::to_string(line_no) + " has " +
                                           std::to_string(cells.size()) + " fields, expected " +
                                           std::to_string(table.header.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string_view cell = cells[c];
            if (is_missing(cell)) fail(ErrorKind::DataError, where(source, line_no, table.header[c]) + ": missing value");
            double v = 0.0;
            const char* begin = cell.data();
            const char* end = cell.data() + cell.size();
            if (*begin == '+') ++begin;
            const auto [ptr, ec] = std::from_chars(begin, end, v);
            if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
                fail(ErrorKind::DataError,
                     where(source, line_no, table.header[c]) + ": '" + std::string(cell) + "' is not a finite number");
            }
            values.push_back(v);
        }
        ++rows;
    }
    if (!have_header) fail(ErrorKind::DataError, source + ": no header row");
    if (rows == 0) fail(ErrorKind::DataError, source + ": no data rows");

    const Index cols = static_cast<Index>(table.header.size());
    table.values = Eigen::Map<const DenseMatrix>(values.data(), rows, cols);
    return table;
}

CsvTable read_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorKind::DataError, "cannot open '" + path + "'");
    return read_csv(in, path);
}

DatasetFile split_dataset(const CsvTable& table, const std::string& response, const std::string& path)
{
    const auto it = std::find(table.header.begin(), table.header.end(), response);
    if (it == table.header.end()) fail(ErrorKind::DataError, "response column '" + response + "' not found");
    if (table.header.size() < 2) fail(ErrorKind::DataError, "no feature columns besides the response");
    const Index r = static_cast<Index>(it - table.header.begin());

    DatasetFile data;
    data.path = path;
    data.header = table.header;
    data.response_column = response;
    data.y = table.values.col(r);
    data.X.resize(table.values.rows(), table.values.cols() - 1);
    Index out = 0;
    for (Index c = 0; c < table.values.cols(); ++c) {
        if (c == r) continue;
        data.feature_columns.push_back(table.header[static_cast<std::size_t>(c)]);
        data.X.col(out++) = table.values.col(c);
    }
    return data;
}

DatasetFile load_dataset(const std::string& path, const std::string& response)
{
    return split_dataset(read_csv_file(path), response, path);
}

std::string format_double(double value)
{
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    return ec == std::errc() ? std::string(buffer, ptr) : std::string("nan");
}

} // namespace farmselect::cli
