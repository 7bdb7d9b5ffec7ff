#include "d2d/workbook.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>

#include <zlib.h>

#include "d2d/cld.hpp"
#include "d2d/error.hpp"

namespace d2d::workbook {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

[[noreturn]] void malformed(const std::string &what, const std::string &where) {
    throw Error(ErrorCode::MalformedWorkbook, "unreadable workbook: " + what, where);
}

// ---------------------------------------------------------------- zip

constexpr std::uint32_t kEndOfCentralDir = 0x06054b50;
constexpr std::uint32_t kCentralHeader = 0x02014b50;
constexpr std::uint32_t kLocalHeader = 0x04034b50;
constexpr std::size_t kMaxEntrySize = std::size_t{256} << 20;

std::uint32_t read_u32(std::string_view data, std::size_t at) {
    if (at + 4 > data.size()) malformed("truncated zip structure", "zip");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(data[at + i]);
    return v;
}

std::uint16_t read_u16(std::string_view data, std::size_t at) {
    if (at + 2 > data.size()) malformed("truncated zip structure", "zip");
    return static_cast<std::uint16_t>(static_cast<unsigned char>(data[at]) |
                                      static_cast<unsigned char>(data[at + 1]) << 8);
}

struct ZipEntry {
    std::uint16_t method = 0;
    std::uint32_t compressed = 0, uncompressed = 0, local_offset = 0;
};

class ZipArchive {
  public:
    explicit ZipArchive(std::string_view data) : data_(data) {
        if (data.size() < 22) malformed("not a zip archive", "zip");
        std::size_t eocd = std::string_view::npos;
        const std::size_t lowest = data.size() > 65557 ? data.size() - 65557 : 0;
        for (std::size_t pos = data.size() - 22 + 1; pos-- > lowest;) {
            if (read_u32(data, pos) == kEndOfCentralDir) {
                eocd = pos;
                break;
            }
        }
        if (eocd == std::string_view::npos) malformed("no zip directory", "zip");
        const std::uint16_t count = read_u16(data, eocd + 10);
        std::size_t pos = read_u32(data, eocd + 16);
        for (std::uint16_t i = 0; i < count; ++i) {
            if (read_u32(data, pos) != kCentralHeader) malformed("corrupt zip directory", "zip");
            ZipEntry e;
            e.method = read_u16(data, pos + 10);
            e.compressed = read_u32(data, pos + 20);
            e.uncompressed = read_u32(data, pos + 24);
            const std::uint16_t name_len = read_u16(data, pos + 28);
            const std::uint16_t extra_len = read_u16(data, pos + 30);
            const std::uint16_t comment_len = read_u16(data, pos + 32);
            e.local_offset = read_u32(data, pos + 42);
            if (pos + 46 + name_len > data.size()) malformed("corrupt zip directory", "zip");
            entries_[std::string(data.substr(pos + 46, name_len))] = e;
            pos += 46 + std::size_t{name_len} + extra_len + comment_len;
        }
    }

    bool contains(const std::string &name) const { return entries_.count(name) != 0; }

    std::string read(const std::string &name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) malformed("missing part", name);
        const ZipEntry &e = it->second;
        if (read_u32(data_, e.local_offset) != kLocalHeader) malformed("corrupt local header", name);
        const std::size_t start = e.local_offset + 30 + std::size_t{read_u16(data_, e.local_offset + 26)} +
                                  read_u16(data_, e.local_offset + 28);
        if (start > data_.size() || e.compressed > data_.size() - start) malformed("truncated entry", name);
        if (e.uncompressed > kMaxEntrySize) malformed("entry too large", name);
        const std::string_view raw = data_.substr(start, e.compressed);
        if (e.method == 0) return std::string(raw);
        if (e.method != 8) malformed("unsupported compression method", name);

        std::string out(e.uncompressed, '\0');
        z_stream zs{};
        if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) malformed("inflate init failed", name);
        zs.next_in = reinterpret_cast<Bytef *>(const_cast<char *>(raw.data()));
        zs.avail_in = static_cast<uInt>(raw.size());
        zs.next_out = reinterpret_cast<Bytef *>(out.data());
        zs.avail_out = static_cast<uInt>(out.size());
        const int rc = inflate(&zs, Z_FINISH);
        const auto produced = zs.total_out;
        inflateEnd(&zs);
        if (rc != Z_STREAM_END || produced != e.uncompressed) malformed("corrupt deflate stream", name);
        return out;
    }

  private:
    std::string_view data_;
    std::map<std::string, ZipEntry> entries_;
};

class ZipWriter {
  public:
    void add(const std::string &name, const std::string &content) {
        const auto crc = static_cast<std::uint32_t>(
            crc32(0L, reinterpret_cast<const Bytef *>(content.data()), static_cast<uInt>(content.size())));
        const auto offset = static_cast<std::uint32_t>(out_.size());
        put32(out_, kLocalHeader);
        put16(out_, 20);
        put16(out_, 0);
        put16(out_, 0); // stored
        put16(out_, 0);
        put16(out_, 0x21); // 1980-01-01
        put32(out_, crc);
        put32(out_, static_cast<std::uint32_t>(content.size()));
        put32(out_, static_cast<std::uint32_t>(content.size()));
        put16(out_, static_cast<std::uint16_t>(name.size()));
        put16(out_, 0);
        out_ += name;
        out_ += content;

        put32(central_, kCentralHeader);
        put16(central_, 20);
        put16(central_, 20);
        put16(central_, 0);
        put16(central_, 0);
        put16(central_, 0);
        put16(central_, 0x21);
        put32(central_, crc);
        put32(central_, static_cast<std::uint32_t>(content.size()));
        put32(central_, static_cast<std::uint32_t>(content.size()));
        put16(central_, static_cast<std::uint16_t>(name.size()));
        put16(central_, 0);
        put16(central_, 0);
        put16(central_, 0);
        put16(central_, 0);
        put32(central_, 0);
        put32(central_, offset);
        central_ += name;
        ++count_;
    }

    std::string finish() {
        std::string result = out_;
        const auto cd_offset = static_cast<std::uint32_t>(result.size());
        result += central_;
        put32(result, kEndOfCentralDir);
        put16(result, 0);
        put16(result, 0);
        put16(result, count_);
        put16(result, count_);
        put32(result, static_cast<std::uint32_t>(central_.size()));
        put32(result, cd_offset);
        put16(result, 0);
        return result;
    }

  private:
    static void put16(std::string &s, std::uint16_t v) {
        s += static_cast<char>(v & 0xff);
        s += static_cast<char>(v >> 8);
    }
    static void put32(std::string &s, std::uint32_t v) {
        for (int i = 0; i < 4; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
    }

    std::string out_, central_;
    std::uint16_t count_ = 0;
};

// ---------------------------------------------------------------- xml

struct XmlEvent {
    enum Kind { Start, End, Text, Done } kind = Done;
    std::string name; ///< local name, namespace prefix stripped
    std::map<std::string, std::string> attributes;
    bool self_closing = false;
    std::string text;
};

void append_utf8(std::string &out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x110000) {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out += s[i];
            continue;
        }
        const auto semi = s.find(';', i);
        if (semi == std::string_view::npos || semi - i > 12) {
            out += s[i];
            continue;
        }
        const auto ent = s.substr(i + 1, semi - i - 1);
        if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "amp") out += '&';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else if (!ent.empty() && ent[0] == '#') {
            std::uint32_t cp = 0;
            bool ok = ent.size() > 1;
            const bool hex = ok && (ent[1] == 'x' || ent[1] == 'X');
            for (std::size_t k = hex ? 2 : 1; ok && k < ent.size(); ++k) {
                const char c = ent[k];
                int d = -1;
                if (c >= '0' && c <= '9') d = c - '0';
                else if (hex && c >= 'a' && c <= 'f') d = c - 'a' + 10;
                else if (hex && c >= 'A' && c <= 'F') d = c - 'A' + 10;
                if (d < 0 || cp > 0x10FFFF) ok = false;
                else cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
            }
            if (!ok || (hex && ent.size() == 2)) {
                out += s.substr(i, semi - i + 1);
            } else {
                append_utf8(out, cp);
            }
        } else {
            out += s.substr(i, semi - i + 1);
        }
        i = semi;
    }
    return out;
}

std::string encode_entities(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

class XmlReader {
  public:
    XmlReader(std::string_view doc, std::string part) : doc_(doc), part_(std::move(part)) {}

    XmlEvent next() {
        XmlEvent ev;
        while (pos_ < doc_.size()) {
            if (doc_[pos_] != '<') {
                const auto end = doc_.find('<', pos_);
                const auto raw = doc_.substr(pos_, end == std::string_view::npos ? std::string_view::npos : end - pos_);
                pos_ = end == std::string_view::npos ? doc_.size() : end;
                ev.kind = XmlEvent::Text;
                ev.text = decode_entities(raw);
                return ev;
            }
            if (starts_with("<?")) {
                skip_past("?>");
            } else if (starts_with("<!--")) {
                skip_past("-->");
            } else if (starts_with("<![CDATA[")) {
                const auto end = doc_.find("]]>", pos_);
                if (end == std::string_view::npos) fail("unterminated CDATA");
                ev.kind = XmlEvent::Text;
                ev.text = std::string(doc_.substr(pos_ + 9, end - pos_ - 9));
                pos_ = end + 3;
                return ev;
            } else if (starts_with("<!")) {
                skip_past(">");
            } else if (starts_with("</")) {
                const auto end = doc_.find('>', pos_);
                if (end == std::string_view::npos) fail("unterminated end tag");
                ev.kind = XmlEvent::End;
                ev.name = local_name(trim(doc_.substr(pos_ + 2, end - pos_ - 2)));
                pos_ = end + 1;
                return ev;
            } else {
                return start_tag();
            }
        }
        return ev;
    }

  private:
    bool starts_with(std::string_view prefix) const { return doc_.substr(pos_, prefix.size()) == prefix; }

    void skip_past(std::string_view marker) {
        const auto end = doc_.find(marker, pos_);
        if (end == std::string_view::npos) fail("unterminated markup");
        pos_ = end + marker.size();
    }

    [[noreturn]] void fail(const std::string &what) const { malformed(what, part_); }

    static std::string local_name(std::string_view qname) {
        const auto colon = qname.find(':');
        return std::string(colon == std::string_view::npos ? qname : qname.substr(colon + 1));
    }

    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

    XmlEvent start_tag() {
        XmlEvent ev;
        ev.kind = XmlEvent::Start;
        std::size_t i = pos_ + 1;
        const std::size_t name_start = i;
        while (i < doc_.size() && !is_space(doc_[i]) && doc_[i] != '>' && doc_[i] != '/') ++i;
        ev.name = local_name(doc_.substr(name_start, i - name_start));
        for (;;) {
            while (i < doc_.size() && is_space(doc_[i])) ++i;
            if (i >= doc_.size()) fail("unterminated start tag");
            if (doc_[i] == '>') {
                ++i;
                break;
            }
            if (doc_[i] == '/') {
                if (i + 1 >= doc_.size() || doc_[i + 1] != '>') fail("malformed start tag");
                ev.self_closing = true;
                i += 2;
                break;
            }
            const std::size_t attr_start = i;
            while (i < doc_.size() && doc_[i] != '=' && !is_space(doc_[i]) && doc_[i] != '>') ++i;
            const std::string attr = std::string(doc_.substr(attr_start, i - attr_start));
            while (i < doc_.size() && is_space(doc_[i])) ++i;
            if (i >= doc_.size() || doc_[i] != '=') fail("attribute without value");
            ++i;
            while (i < doc_.size() && is_space(doc_[i])) ++i;
            if (i >= doc_.size() || (doc_[i] != '"' && doc_[i] != '\'')) fail("unquoted attribute");
            const char quote = doc_[i++];
            const auto close = doc_.find(quote, i);
            if (close == std::string_view::npos) fail("unterminated attribute");
            ev.attributes[attr] = decode_entities(doc_.substr(i, close - i));
            ev.attributes[local_name(attr)] = ev.attributes[attr];
            i = close + 1;
        }
        pos_ = i;
        return ev;
    }

    std::string_view doc_;
    std::string part_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------- xlsx

std::vector<std::string> shared_strings(const ZipArchive &zip, const std::string &part) {
    std::vector<std::string> strings;
    if (!zip.contains(part)) return strings;
    const std::string doc = zip.read(part);
    XmlReader xml(doc, part);
    std::string current;
    bool in_si = false, in_t = false;
    int phonetic_depth = 0;
    for (auto ev = xml.next(); ev.kind != XmlEvent::Done; ev = xml.next()) {
        if (ev.kind == XmlEvent::Start) {
            if (ev.name == "si" && !ev.self_closing) {
                in_si = true;
                current.clear();
            } else if (ev.name == "si") {
                strings.emplace_back();
            } else if (ev.name == "rPh" && !ev.self_closing) {
                ++phonetic_depth;
            } else if (ev.name == "t" && !ev.self_closing) {
                in_t = true;
            }
        } else if (ev.kind == XmlEvent::End) {
            if (ev.name == "si" && in_si) {
                strings.push_back(current);
                in_si = false;
            } else if (ev.name == "rPh" && phonetic_depth > 0) {
                --phonetic_depth;
            } else if (ev.name == "t") {
                in_t = false;
            }
        } else if (ev.kind == XmlEvent::Text && in_si && in_t && phonetic_depth == 0) {
            current += ev.text;
        }
    }
    return strings;
}

int column_from_reference(std::string_view ref) {
    int col = 0;
    std::size_t i = 0;
    for (; i < ref.size() && std::isalpha(static_cast<unsigned char>(ref[i])); ++i) {
        col = col * 26 + (std::toupper(static_cast<unsigned char>(ref[i])) - 'A' + 1);
        if (col > 16384) return -1;
    }
    return i == 0 ? -1 : col - 1;
}

std::string column_letters(int col) {
    std::string s;
    for (++col; col > 0; col = (col - 1) / 26) s.insert(s.begin(), static_cast<char>('A' + (col - 1) % 26));
    return s;
}

std::string format_number_cell(const std::string &text) {
    // Integral values stored as e.g. "1.0" or "-1E0" read back as integers.
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size() && v == static_cast<double>(static_cast<long long>(v)) && std::abs(v) < 1e15)
            return std::to_string(static_cast<long long>(v));
    } catch (...) {
    }
    return text;
}

std::vector<std::vector<std::string>> read_sheet(const ZipArchive &zip, const std::string &part,
                                                 const std::vector<std::string> &strings) {
    const std::string doc = zip.read(part);
    XmlReader xml(doc, part);
    std::map<int, std::vector<std::string>> rows;
    int row_index = -1, next_row = 0, next_col = 0, col = 0;
    std::string type, value;
    bool in_cell = false, in_value = false, in_inline = false, in_t = false;

    auto store = [&](int r, int c, std::string text) {
        if (r < 0 || c < 0 || r > 1'048'576) malformed("cell reference out of range", part);
        auto &cells = rows[r];
        if (static_cast<int>(cells.size()) <= c) cells.resize(c + 1);
        cells[c] = std::move(text);
    };

    for (auto ev = xml.next(); ev.kind != XmlEvent::Done; ev = xml.next()) {
        if (ev.kind == XmlEvent::Start) {
            if (ev.name == "row") {
                row_index = next_row;
                if (auto it = ev.attributes.find("r"); it != ev.attributes.end()) {
                    try {
                        row_index = std::stoi(it->second) - 1;
                    } catch (...) {
                        malformed("bad row number", part);
                    }
                }
                next_row = row_index + 1;
                next_col = 0;
            } else if (ev.name == "c") {
                col = next_col;
                if (auto it = ev.attributes.find("r"); it != ev.attributes.end()) col = column_from_reference(it->second);
                if (col < 0) malformed("bad cell reference", part);
                next_col = col + 1;
                type = ev.attributes.count("t") ? ev.attributes["t"] : "n";
                value.clear();
                in_cell = !ev.self_closing;
            } else if (ev.name == "v" && in_cell && !ev.self_closing) {
                in_value = true;
            } else if (ev.name == "is" && in_cell && !ev.self_closing) {
                in_inline = true;
            } else if (ev.name == "t" && in_inline && !ev.self_closing) {
                in_t = true;
            }
        } else if (ev.kind == XmlEvent::End) {
            if (ev.name == "v") {
                in_value = false;
            } else if (ev.name == "t") {
                in_t = false;
            } else if (ev.name == "is") {
                in_inline = false;
            } else if (ev.name == "c" && in_cell) {
                in_cell = false;
                std::string text;
                if (type == "s") {
                    std::size_t idx = 0;
                    try {
                        idx = static_cast<std::size_t>(std::stoul(value));
                    } catch (...) {
                        malformed("bad shared string index", part);
                    }
                    if (idx >= strings.size()) malformed("shared string index out of range", part);
                    text = strings[idx];
                } else if (type == "n") {
                    text = format_number_cell(value);
                } else if (type == "b") {
                    text = value == "1" ? "TRUE" : "FALSE";
                } else {
                    text = value;
                }
                store(row_index < 0 ? 0 : row_index, col, std::move(text));
            }
        } else if (ev.kind == XmlEvent::Text) {
            if (in_value || (in_inline && in_t)) value += ev.text;
        }
    }

    std::vector<std::vector<std::string>> out;
    if (rows.empty()) return out;
    const int last = rows.rbegin()->first;
    if (last > 1'048'576) malformed("too many rows", part);
    out.resize(static_cast<std::size_t>(last) + 1);
    for (auto &[r, cells] : rows) out[r] = std::move(cells);
    return out;
}

std::string resolve_target(const std::string &target) {
    if (!target.empty() && target[0] == '/') return target.substr(1);
    return "xl/" + target;
}

} // namespace

int Table::column(std::string_view header) const {
    if (rows.empty()) return -1;
    const auto want = lower(trim(header));
    for (std::size_t c = 0; c < rows[0].size(); ++c)
        if (lower(trim(rows[0][c])) == want) return static_cast<int>(c);
    return -1;
}

std::string Table::cell(std::size_t row, int column) const {
    if (column < 0 || row >= rows.size() || static_cast<std::size_t>(column) >= rows[row].size()) return {};
    return rows[row][static_cast<std::size_t>(column)];
}

std::vector<Table> read_xlsx(std::string_view bytes) {
    const ZipArchive zip(bytes);
    const std::string workbook_xml = zip.read("xl/workbook.xml");

    std::map<std::string, std::string> targets;
    if (zip.contains("xl/_rels/workbook.xml.rels")) {
        const std::string rels = zip.read("xl/_rels/workbook.xml.rels");
        XmlReader xml(rels, "xl/_rels/workbook.xml.rels");
        for (auto ev = xml.next(); ev.kind != XmlEvent::Done; ev = xml.next())
            if (ev.kind == XmlEvent::Start && ev.name == "Relationship")
                targets[ev.attributes["Id"]] = resolve_target(ev.attributes["Target"]);
    }
    std::string shared_part = "xl/sharedStrings.xml";
    for (const auto &[id, target] : targets)
        if (target.find("sharedStrings") != std::string::npos) shared_part = target;
    const auto strings = shared_strings(zip, shared_part);

    std::vector<Table> tables;
    XmlReader xml(workbook_xml, "xl/workbook.xml");
    int ordinal = 0;
    for (auto ev = xml.next(); ev.kind != XmlEvent::Done; ev = xml.next()) {
        if (ev.kind != XmlEvent::Start || ev.name != "sheet") continue;
        ++ordinal;
        std::string part;
        if (auto it = targets.find(ev.attributes["id"]); it != targets.end()) part = it->second;
        if (part.empty()) part = "xl/worksheets/sheet" + std::to_string(ordinal) + ".xml";
        tables.push_back({ev.attributes["name"], read_sheet(zip, part, strings)});
    }
    return tables;
}

std::string write_xlsx(const std::vector<Table> &tables) {
    ZipWriter zip;
    std::string types =
        R"(<?xml version="1.0" encoding="UTF-8" standalone="yes"?>)"
        R"(<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">)"
        R"(<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>)"
        R"(<Default Extension="xml" ContentType="application/xml"/>)"
        R"(<Override PartName="/xl/workbook.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml"/>)";
    for (std::size_t i = 0; i < tables.size(); ++i)
        types += R"(<Override PartName="/xl/worksheets/sheet)" + std::to_string(i + 1) +
                 R"(.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml"/>)";
    types += "</Types>";
    zip.add("[Content_Types].xml", types);
    zip.add("_rels/.rels",
            R"(<?xml version="1.0" encoding="UTF-8" standalone="yes"?>)"
            R"(<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">)"
            R"(<Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument" Target="xl/workbook.xml"/>)"
            R"(</Relationships>)");

    std::string workbook = R"(<?xml version="1.0" encoding="UTF-8" standalone="yes"?>)"
                           R"(<workbook xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main" )"
                           R"(xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships"><sheets>)";
    std::string rels = R"(<?xml version="1.0" encoding="UTF-8" standalone="yes"?>)"
                       R"(<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">)";
    for (std::size_t i = 0; i < tables.size(); ++i) {
        const auto n = std::to_string(i + 1);
        workbook += R"(<sheet name=")" + encode_entities(tables[i].name) + R"(" sheetId=")" + n + R"(" r:id="rId)" + n +
                    R"("/>)";
        rels += R"(<Relationship Id="rId)" + n +
                R"(" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/worksheet" Target="worksheets/sheet)" +
                n + R"(.xml"/>)";
    }
    workbook += "</sheets></workbook>";
    rels += "</Relationships>";
    zip.add("xl/workbook.xml", workbook);
    zip.add("xl/_rels/workbook.xml.rels", rels);

    for (std::size_t i = 0; i < tables.size(); ++i) {
        std::string sheet = R"(<?xml version="1.0" encoding="UTF-8" standalone="yes"?>)"
                            R"(<worksheet xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main"><sheetData>)";
        for (std::size_t r = 0; r < tables[i].rows.size(); ++r) {
            const auto rn = std::to_string(r + 1);
            sheet += R"(<row r=")" + rn + R"(">)";
            for (std::size_t c = 0; c < tables[i].rows[r].size(); ++c) {
                const auto &text = tables[i].rows[r][c];
                if (text.empty()) continue;
                sheet += R"(<c r=")" + column_letters(static_cast<int>(c)) + rn + R"(" t="inlineStr"><is><t xml:space="preserve">)" +
                         encode_entities(text) + "</t></is></c>";
            }
            sheet += "</row>";
        }
        sheet += "</sheetData></worksheet>";
        zip.add("xl/worksheets/sheet" + std::to_string(i + 1) + ".xml", sheet);
    }
    return zip.finish();
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, field_started = false;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_row();
        } else {
            field += c;
            field_started = true;
        }
    }
    if (field_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

std::string write_csv_row(const std::vector<std::string> &fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        const auto &f = fields[i];
        if (f.find_first_of(",\"\r\n") != std::string::npos) {
            line += '"';
            for (char c : f) {
                if (c == '"') line += '"';
                line += c;
            }
            line += '"';
        } else {
            line += f;
        }
    }
    line += "\r\n";
    return line;
}

} // namespace d2d::workbook
