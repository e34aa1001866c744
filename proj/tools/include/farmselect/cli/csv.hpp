#pragma once

#include <farmselect/linalg.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace farmselect::cli {

/// A numeric CSV table: header names and one row of values per record.
struct CsvTable
{
    std::vector<std::string> header;
    DenseMatrix values;
};

/**
 * Comma-separated, header first, decimal point, optional scientific notation.
 * Blank lines are skipped; surrounding whitespace in a cell is ignored.
 * Throws DataError naming the line and column for ragged rows, empty or NA
 * cells and unparsable numbers, and for duplicate header names.
 */
CsvTable read_csv(std::istream& in, const std::string& source = "<stream>");
CsvTable read_csv_file(const std::string& path);

/// Covariates and response taken from a CSV file.
struct DatasetFile
{
    std::string path;
    std::vector<std::string> header;
    std::string response_column;
    std::vector<std::string> feature_columns;
    DenseMatrix X;
    Vector y;
};

/// Throws DataError when the response column is absent or no feature column remains.
DatasetFile split_dataset(const CsvTable& table, const std::string& response, const std::string& path = "");
DatasetFile load_dataset(const std::string& path, const std::string& response);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

} // namespace farmselect::cli
