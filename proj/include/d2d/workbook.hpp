#pragma once

// Table-level access to spreadsheet workbooks (.xlsx) and CSV files. Only what
// a Kumu export needs: sheet names and cell text.

#include <string>
#include <string_view>
#include <vector>

namespace d2d::workbook {

struct Table {
    std::string name;
    std::vector<std::vector<std::string>> rows; ///< rows[0] is the header row

    /// Column of a header, matched case-insensitively after trimming; -1 if absent.
    int column(std::string_view header) const;
    /// Cell text or "" when the row is short.
    std::string cell(std::size_t row, int column) const;
};

/// Every worksheet of an .xlsx file, in workbook order. Throws
/// Error(MalformedWorkbook) with the failing part as location.
std::vector<Table> read_xlsx(std::string_view bytes);

/// Minimal .xlsx with inline strings, stored (uncompressed) zip entries.
std::string write_xlsx(const std::vector<Table> &tables);

/// RFC 4180 CSV: quoted fields, doubled quotes, CRLF or LF, optional UTF-8 BOM.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string write_csv_row(const std::vector<std::string> &fields);

} // namespace d2d::workbook
