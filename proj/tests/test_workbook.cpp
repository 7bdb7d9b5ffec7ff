#include "catch_amalgamated.hpp"

#include <random>

#include "d2d/error.hpp"
#include "d2d/ingest.hpp"
#include "d2d/workbook.hpp"

using namespace d2d;
using namespace d2d::workbook;

TEST_CASE("written workbooks read back cell for cell", "[workbook]") {
    std::vector<Table> tables{
        {"Elements", {{"Label", "Type", "Tags", "Description"}, {"A & <B>", "stock", "-1", "VOI \"quoted\""}}},
        {"Connections", {{"From", "To", "Type"}, {"A & <B>", "A & <B>", "+"}, {"", "", ""}, {"x", "y", "\xE2\x88\x92"}}},
    };
    const auto back = read_xlsx(write_xlsx(tables));
    REQUIRE(back.size() == 2);
    CHECK(back[0].name == "Elements");
    CHECK(back[0].rows == tables[0].rows);
    CHECK(back[1].cell(1, 0) == "A & <B>");
    CHECK(back[1].cell(3, 2) == "\xE2\x88\x92");
    CHECK(back[1].cell(9, 0).empty());
    CHECK(back[1].column(" from ") == 0);
    CHECK(back[1].column("Direction") == -1);
}

TEST_CASE("deflated workbooks with shared strings", "[workbook]") {
    const auto tables = read_xlsx(read_file(D2D_DATA_DIR "/synthetic.xlsx"));
    REQUIRE(tables.size() == 3);
    CHECK(tables[0].name == "Elements");
    CHECK(tables[0].cell(1, 0) == "Cognitive functioning");
    // Numeric cells come back as integers without a trailing ".0".
    CHECK(tables[0].cell(3, 2) == "-1");
    CHECK(tables[1].rows.size() == 16);
}

TEST_CASE("broken archives fail with a located error", "[workbook]") {
    const auto good = write_xlsx({{"Elements", {{"Label"}}}});
    for (std::string bad : {std::string(), std::string("PK\x03\x04garbage"), good.substr(0, good.size() / 2),
                            std::string("not a zip at all")}) {
        try {
            read_xlsx(bad);
            FAIL("expected MalformedWorkbook");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::MalformedWorkbook);
        }
    }
}

TEST_CASE("csv parsing handles quotes, CRLF and a BOM", "[workbook]") {
    const auto rows = parse_csv("\xEF\xBB\xBFLabel,Description\r\n\"a, b\",\"say \"\"hi\"\"\"\nc,\"multi\nline\"\n");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"Label", "Description"});
    CHECK(rows[1] == std::vector<std::string>{"a, b", "say \"hi\""});
    CHECK(rows[2] == std::vector<std::string>{"c", "multi\nline"});
    CHECK(write_csv_row({"plain", "a,b", "q\"", ""}) == "plain,\"a,b\",\"q\"\"\",\r\n");
    CHECK(parse_csv(write_csv_row({"x\ny", "z"}))[0] == std::vector<std::string>{"x\ny", "z"});
}
