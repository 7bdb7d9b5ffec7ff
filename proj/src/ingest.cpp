#include "d2d/ingest.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "d2d/error.hpp"

namespace d2d {

using Json = nlohmann::ordered_json;

void SettingsOverrides::apply_to(ModelSettings &s) const {
    if (base_time_unit_label) s.base_time_unit_label = *base_time_unit_label;
    if (timeframe_units) s.timeframe_units = *timeframe_units;
    if (theta_max_stock) s.theta_max_stock = *theta_max_stock;
    if (theta_max_aux) s.theta_max_aux = *theta_max_aux;
    if (samples) s.samples = *samples;
    if (seed) s.seed = *seed;
    if (bootstrap) s.bootstrap = *bootstrap;
}

bool SettingsOverrides::empty() const {
    return !base_time_unit_label && !timeframe_units && !theta_max_stock && !theta_max_aux && !samples && !seed &&
           !bootstrap;
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::optional<VariableKind> parse_kind(std::string_view text) {
    const auto k = lower(trim(text));
    if (k == "stock") return VariableKind::Stock;
    if (k == "auxiliary" || k == "flow" || k == "aux") return VariableKind::Auxiliary;
    if (k == "constant") return VariableKind::Constant;
    return std::nullopt;
}

std::optional<Polarity> parse_polarity(std::string_view text) {
    const auto p = lower(trim(text));
    if (p == "+" || p == "positive") return Polarity::Positive;
    if (p == "-" || p == "negative" || p == "\xE2\x88\x92" || p == "\xE2\x80\x93") return Polarity::Negative;
    if (p.empty() || p == "?" || p == "unspecified" || p == "+/-" || p == "\xC2\xB1") return Polarity::Unspecified;
    return std::nullopt;
}

std::string polarity_text(Polarity p) {
    switch (p) {
    case Polarity::Positive: return "+";
    case Polarity::Negative: return "-";
    case Polarity::Unspecified: return "";
    }
    return "";
}

std::optional<int> parse_tag(std::string_view text) {
    const auto t = trim(text);
    if (t.empty()) return 0;
    double value = 0.0;
    const char *begin = t.data() + (t[0] == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
    if (value == 1.0) return 1;
    if (value == -1.0) return -1;
    if (value == 0.0) return 0;
    return std::nullopt;
}

const workbook::Table *find_table(const std::vector<workbook::Table> &tables, std::string_view name) {
    for (const auto &t : tables)
        if (lower(trim(t.name)) == lower(name)) return &t;
    return nullptr;
}

int require_column(const workbook::Table &table, std::string_view header) {
    const int c = table.column(header);
    if (c < 0)
        throw Error(ErrorCode::MissingColumn, "sheet '" + table.name + "' has no '" + std::string(header) + "' column",
                    table.name + "!1");
    return c;
}

bool blank_row(const workbook::Table &table, std::size_t r) {
    for (const auto &cell : table.rows[r])
        if (!trim(cell).empty()) return false;
    return true;
}

std::string where(const workbook::Table &table, std::size_t r) { return table.name + "!" + std::to_string(r + 1); }

std::string required_name(const workbook::Table &table, std::size_t r, int col, std::string_view header) {
    auto name = trim(table.cell(r, col));
    if (name.empty())
        throw Error(ErrorCode::EmptyLabel, "empty '" + std::string(header) + "' cell in row " + std::to_string(r + 1),
                    where(table, r));
    return name;
}

Polarity required_polarity(const workbook::Table &table, std::size_t r, int col) {
    auto p = parse_polarity(table.cell(r, col));
    if (!p)
        throw Error(ErrorCode::BadTypeCell,
                    "unrecognised link type '" + table.cell(r, col) + "' in row " + std::to_string(r + 1) +
                        " (expected +, - or empty)",
                    where(table, r));
    return *p;
}

} // namespace

ModelDocument parse_tables(const std::vector<workbook::Table> &tables) {
    ModelDocument doc;
    const auto *elements = find_table(tables, "Elements");
    if (!elements) throw Error(ErrorCode::MissingSheet, "workbook has no 'Elements' sheet", "Elements");
    const auto *connections = find_table(tables, "Connections");
    if (!connections) throw Error(ErrorCode::MissingSheet, "workbook has no 'Connections' sheet", "Connections");
    if (elements->rows.empty()) throw Error(ErrorCode::MissingColumn, "'Elements' sheet is empty", "Elements!1");
    if (connections->rows.empty())
        throw Error(ErrorCode::MissingColumn, "'Connections' sheet is empty", "Connections!1");

    const int label = require_column(*elements, "Label");
    const int type = require_column(*elements, "Type");
    const int tags = require_column(*elements, "Tags");
    const int description = require_column(*elements, "Description");
    for (std::size_t r = 1; r < elements->rows.size(); ++r) {
        if (blank_row(*elements, r)) continue;
        Variable v;
        v.name = required_name(*elements, r, label, "Label");
        const auto kind = parse_kind(elements->cell(r, type));
        if (!kind)
            throw Error(ErrorCode::BadTypeCell,
                        "unrecognised variable type '" + elements->cell(r, type) + "' for '" + v.name +
                            "' (expected stock, auxiliary, flow or constant)",
                        where(*elements, r));
        v.kind = *kind;
        const auto tag = parse_tag(elements->cell(r, tags));
        if (!tag)
            throw Error(ErrorCode::BadTagCell,
                        "tag '" + elements->cell(r, tags) + "' for '" + v.name + "' must be -1, 0 or 1",
                        where(*elements, r));
        v.intervention_direction = *tag;
        const auto desc = elements->cell(r, description);
        v.is_voi = desc.find("VOI") != std::string::npos;
        if (trim(elements->cell(r, tags)).empty()) {
            std::istringstream words(desc);
            std::string first;
            if (words >> first) {
                if (auto t = parse_tag(first); t && *t != 0)
                    doc.warnings.push_back({"TAGS_IN_DESCRIPTION",
                                            "'" + v.name + "' has an empty Tags cell but its Description starts with '" +
                                                first + "'; the intervention direction is read from Tags only",
                                            where(*elements, r)});
            }
        }
        doc.cld.variables.push_back(std::move(v));
    }

    const int from = require_column(*connections, "From");
    const int to = require_column(*connections, "To");
    const int polarity = require_column(*connections, "Type");
    for (std::size_t r = 1; r < connections->rows.size(); ++r) {
        if (blank_row(*connections, r)) continue;
        Link link;
        link.from = required_name(*connections, r, from, "From");
        link.to = required_name(*connections, r, to, "To");
        link.polarity = required_polarity(*connections, r, polarity);
        doc.cld.links.push_back(std::move(link));
    }

    if (const auto *interactions = find_table(tables, "Interactions"); interactions && !interactions->rows.empty()) {
        const int f1 = require_column(*interactions, "From1");
        const int f2 = require_column(*interactions, "From2");
        const int t = require_column(*interactions, "To");
        const int p = require_column(*interactions, "Type");
        for (std::size_t r = 1; r < interactions->rows.size(); ++r) {
            if (blank_row(*interactions, r)) continue;
            InteractionTerm term;
            term.from1 = required_name(*interactions, r, f1, "From1");
            term.from2 = required_name(*interactions, r, f2, "From2");
            term.to = required_name(*interactions, r, t, "To");
            term.polarity = required_polarity(*interactions, r, p);
            doc.cld.interactions.push_back(std::move(term));
        }
    }
    return doc;
}

ModelDocument parse_workbook(std::string_view bytes) { return parse_tables(workbook::read_xlsx(bytes)); }

ModelDocument parse_csv_directory(const std::filesystem::path &dir) {
    std::vector<workbook::Table> tables;
    std::error_code ec;
    for (const auto &entry : std::filesystem::directory_iterator(dir, ec)) {
        if (!entry.is_regular_file()) continue;
        const auto name = lower(entry.path().stem().string());
        if (lower(entry.path().extension().string()) != ".csv") continue;
        if (name == "elements" || name == "connections" || name == "interactions")
            tables.push_back({entry.path().stem().string(), workbook::parse_csv(read_file(entry.path()))});
    }
    if (ec) throw Error(ErrorCode::Io, "cannot list directory: " + ec.message(), dir.string());
    // Directory order is unspecified; sheets are looked up by name.
    return parse_tables(tables);
}

namespace {

[[noreturn]] void schema(const std::string &path, const std::string &message) {
    throw Error(ErrorCode::SchemaViolation, path + ": " + message, path);
}

const Json &member(const Json &obj, const std::string &key, const std::string &path) {
    if (!obj.contains(key)) schema(path + "/" + key, "required field missing");
    return obj.at(key);
}

std::string string_field(const Json &obj, const std::string &key, const std::string &path, bool required,
                         std::string fallback = {}) {
    if (!obj.contains(key)) {
        if (required) schema(path + "/" + key, "required field missing");
        return fallback;
    }
    const auto &v = obj.at(key);
    if (!v.is_string()) schema(path + "/" + key, "expected a string");
    return v.get<std::string>();
}

template <class T>
std::optional<T> integer_field(const Json &obj, const std::string &key, const std::string &path) {
    if (!obj.contains(key)) return std::nullopt;
    const auto &v = obj.at(key);
    if (v.is_number_unsigned()) {
        const auto u = v.get<std::uint64_t>();
        if constexpr (std::is_signed_v<T>) {
            if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) schema(path + "/" + key, "out of range");
        }
        return static_cast<T>(u);
    }
    if (v.is_number_integer()) {
        const auto i = v.get<std::int64_t>();
        if constexpr (std::is_unsigned_v<T>) {
            if (i < 0) schema(path + "/" + key, "must not be negative");
        } else {
            if (i < std::numeric_limits<T>::min() || i > std::numeric_limits<T>::max())
                schema(path + "/" + key, "out of range");
        }
        return static_cast<T>(i);
    }
    schema(path + "/" + key, "expected an integer");
}

std::optional<double> number_field(const Json &obj, const std::string &key, const std::string &path) {
    if (!obj.contains(key)) return std::nullopt;
    const auto &v = obj.at(key);
    if (!v.is_number()) schema(path + "/" + key, "expected a number");
    return v.get<double>();
}

const Json *array_field(const Json &obj, const std::string &key, const std::string &path) {
    if (!obj.contains(key)) return nullptr;
    const auto &v = obj.at(key);
    if (!v.is_array()) schema(path + "/" + key, "expected an array");
    return &v;
}

Polarity polarity_field(const Json &obj, const std::string &path) {
    const auto text = string_field(obj, "polarity", path, false);
    auto p = parse_polarity(text);
    if (!p) schema(path + "/polarity", "expected \"+\", \"-\" or \"\"");
    return *p;
}

} // namespace

ModelDocument parse_json_document(std::string_view text) {
    const Json root = Json::parse(text, nullptr, false);
    if (root.is_discarded()) schema("", "not valid JSON");
    if (!root.is_object()) schema("", "expected an object");

    ModelDocument doc;
    const auto &vars = member(root, "variables", "");
    if (!vars.is_array()) schema("/variables", "expected an array");
    for (std::size_t i = 0; i < vars.size(); ++i) {
        const auto path = "/variables/" + std::to_string(i);
        const auto &obj = vars[i];
        if (!obj.is_object()) schema(path, "expected an object");
        Variable v;
        v.name = trim(string_field(obj, "name", path, true));
        if (v.name.empty()) schema(path + "/name", "must not be empty");
        const auto kind = parse_kind(string_field(obj, "kind", path, true));
        if (!kind) schema(path + "/kind", "expected \"stock\", \"auxiliary\" or \"constant\"");
        v.kind = *kind;
        v.intervention_direction = integer_field<int>(obj, "intervention_direction", path).value_or(0);
        if (v.intervention_direction < -1 || v.intervention_direction > 1)
            schema(path + "/intervention_direction", "must be -1, 0 or 1");
        if (obj.contains("voi")) {
            if (!obj.at("voi").is_boolean()) schema(path + "/voi", "expected a boolean");
            v.is_voi = obj.at("voi").get<bool>();
        }
        doc.cld.variables.push_back(std::move(v));
    }

    auto resolve = [&](const std::string &name, const std::string &path) {
        if (!doc.cld.find(name)) schema(path, "undeclared variable '" + name + "'");
        return name;
    };

    if (const auto *links = array_field(root, "links", "")) {
        for (std::size_t i = 0; i < links->size(); ++i) {
            const auto path = "/links/" + std::to_string(i);
            const auto &obj = (*links)[i];
            if (!obj.is_object()) schema(path, "expected an object");
            Link link;
            link.from = resolve(trim(string_field(obj, "from", path, true)), path + "/from");
            link.to = resolve(trim(string_field(obj, "to", path, true)), path + "/to");
            link.polarity = polarity_field(obj, path);
            doc.cld.links.push_back(std::move(link));
        }
    }
    if (const auto *terms = array_field(root, "interactions", "")) {
        for (std::size_t i = 0; i < terms->size(); ++i) {
            const auto path = "/interactions/" + std::to_string(i);
            const auto &obj = (*terms)[i];
            if (!obj.is_object()) schema(path, "expected an object");
            InteractionTerm term;
            term.from1 = resolve(trim(string_field(obj, "from1", path, true)), path + "/from1");
            term.from2 = resolve(trim(string_field(obj, "from2", path, true)), path + "/from2");
            term.to = resolve(trim(string_field(obj, "to", path, true)), path + "/to");
            term.polarity = polarity_field(obj, path);
            doc.cld.interactions.push_back(std::move(term));
        }
    }
    if (root.contains("settings")) {
        const auto &s = root.at("settings");
        const std::string path = "/settings";
        if (!s.is_object()) schema(path, "expected an object");
        if (s.contains("base_time_unit_label"))
            doc.settings.base_time_unit_label = string_field(s, "base_time_unit_label", path, true);
        doc.settings.timeframe_units = integer_field<int>(s, "timeframe_units", path);
        doc.settings.theta_max_stock = number_field(s, "theta_max_stock", path);
        doc.settings.theta_max_aux = number_field(s, "theta_max_aux", path);
        doc.settings.samples = integer_field<int>(s, "samples", path);
        doc.settings.seed = integer_field<std::uint64_t>(s, "seed", path);
        doc.settings.bootstrap = integer_field<int>(s, "bootstrap", path);
    }
    return doc;
}

CausalLoopDiagram parse_json(std::string_view text) { return parse_json_document(text).cld; }

Json to_json(const CausalLoopDiagram &cld) {
    Json vars = Json::array(), links = Json::array(), terms = Json::array();
    for (const auto &v : cld.variables)
        vars.push_back({{"name", v.name},
                        {"kind", std::string(to_string(v.kind))},
                        {"intervention_direction", v.intervention_direction},
                        {"voi", v.is_voi}});
    for (const auto &l : cld.links)
        links.push_back({{"from", l.from}, {"to", l.to}, {"polarity", polarity_text(l.polarity)}});
    for (const auto &t : cld.interactions)
        terms.push_back(
            {{"from1", t.from1}, {"from2", t.from2}, {"to", t.to}, {"polarity", polarity_text(t.polarity)}});
    return {{"variables", vars}, {"links", links}, {"interactions", terms}};
}

Json to_json(const ModelSettings &s) {
    return {{"base_time_unit_label", s.base_time_unit_label},
            {"timeframe_units", s.timeframe_units},
            {"theta_max_stock", s.theta_max_stock},
            {"theta_max_aux", s.theta_max_aux},
            {"samples", s.samples},
            {"seed", s.seed},
            {"bootstrap", s.bootstrap}};
}

std::string serialize_json(const CausalLoopDiagram &cld, const std::optional<ModelSettings> &settings) {
    Json doc = to_json(cld);
    if (settings) doc["settings"] = to_json(*settings);
    return doc.dump(2) + "\n";
}

std::vector<workbook::Table> to_tables(const CausalLoopDiagram &cld) {
    workbook::Table elements{"Elements", {{"Label", "Type", "Tags", "Description"}}};
    for (const auto &v : cld.variables)
        elements.rows.push_back({v.name, std::string(to_string(v.kind)), std::to_string(v.intervention_direction),
                                 v.is_voi ? "VOI" : ""});
    workbook::Table connections{"Connections", {{"From", "To", "Direction", "Type"}}};
    for (const auto &l : cld.links) connections.rows.push_back({l.from, l.to, "directed", polarity_text(l.polarity)});
    std::vector<workbook::Table> tables{elements, connections};
    if (!cld.interactions.empty()) {
        workbook::Table interactions{"Interactions", {{"From1", "From2", "To", "Type"}}};
        for (const auto &t : cld.interactions)
            interactions.rows.push_back({t.from1, t.from2, t.to, polarity_text(t.polarity)});
        tables.push_back(std::move(interactions));
    }
    return tables;
}

std::string serialize_workbook(const CausalLoopDiagram &cld) { return workbook::write_xlsx(to_tables(cld)); }

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'", path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file_atomic(const std::filesystem::path &path, std::string_view content) {
    static std::atomic<unsigned> counter{0};
    auto tmp = path;
    tmp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write '" + tmp.string() + "'", path.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorCode::Io, "write failed for '" + tmp.string() + "'", path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error(ErrorCode::Io, "cannot move result into place: " + ec.message(), path.string());
    }
}

ModelDocument load_model(const std::filesystem::path &path) {
    std::error_code ec;
    if (std::filesystem::is_directory(path, ec)) return parse_csv_directory(path);
    const auto ext = lower(path.extension().string());
    if (ext == ".xlsx") return parse_workbook(read_file(path));
    return parse_json_document(read_file(path));
}

std::string format_number(double value) {
    if (std::isnan(value)) return "";
    if (value == 0.0) return "0";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

namespace {

Json optional_number(const std::optional<double> &v) { return v ? Json(*v) : Json(nullptr); }

Json intervention_json(const InterventionSpec &iv) {
    return {{"target", iv.target}, {"direction", iv.direction}, {"label", label(iv)}};
}

} // namespace

Json ranking_json(const std::vector<RankingEntry> &ranking) {
    Json out = Json::array();
    for (const auto &e : ranking)
        out.push_back({{"rank", e.rank},
                       {"target", e.intervention.target},
                       {"direction", e.intervention.direction},
                       {"median", e.median_effect},
                       {"ci_low", e.ci_low},
                       {"ci_high", e.ci_high},
                       {"p2_5", e.p025},
                       {"p97_5", e.p975},
                       {"samples", e.samples}});
    return out;
}

Json pairwise_json(const DominanceMatrix &matrix) {
    Json out = Json::array();
    const auto n = matrix.interventions.size();
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            const auto &r = matrix.at(a, b);
            out.push_back({{"a", label(matrix.interventions[a])},
                           {"b", label(matrix.interventions[b])},
                           {"fraction", r.fraction},
                           {"ci_low", r.ci_low},
                           {"ci_high", r.ci_high},
                           {"tie_fraction", r.tie_fraction},
                           {"greater", r.greater},
                           {"less", r.less},
                           {"ties", r.ties},
                           {"samples", r.samples}});
        }
    return out;
}

Json sensitivity_json(const std::vector<SensitivityEntry> &entries) {
    Json out = Json::array();
    for (const auto &e : entries)
        out.push_back({{"parameter", e.parameter},
                       {"scope", e.scope},
                       {"rho", optional_number(e.rho)},
                       {"ci_low", optional_number(e.ci_low)},
                       {"ci_high", optional_number(e.ci_high)}});
    return out;
}

Json to_json(const ExperimentResult &result) {
    Json warnings = Json::array();
    for (const auto &w : result.warnings) warnings.push_back({{"code", w.code}, {"message", w.message}});
    Json vois = Json::array();
    for (const auto &v : result.vois) {
        const auto &m = v.effects;
        Json interventions = Json::array();
        for (const auto &iv : m.interventions) interventions.push_back(intervention_json(iv));
        Json effects = Json::array();
        for (std::size_t j = 0; j < m.columns(); ++j) {
            Json column = Json::array();
            for (std::size_t k = 0; k < m.samples(); ++k)
                column.push_back(m.is_divergent(k, j)
                                     ? Json(nullptr)
                                     : Json(m.effects(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j))));
            effects.push_back(std::move(column));
        }
        Json per = Json::array();
        for (std::size_t j = 0; j < v.sensitivity_per_intervention.size(); ++j)
            per.push_back({{"intervention", label(m.interventions[j])},
                           {"entries", sensitivity_json(v.sensitivity_per_intervention[j])}});
        Json entry = {{"voi", m.voi},
                      {"interventions", interventions},
                      {"effects", effects},
                      {"divergent", m.divergent_count()},
                      {"ranking", ranking_json(v.ranking)},
                      {"pairwise", pairwise_json(v.pairwise)},
                      {"sensitivity", {{"pooled", sensitivity_json(v.sensitivity_pooled)}, {"per_intervention", per}}}};
        if (m.paths.size() > 0) {
            Json paths = Json::array();
            for (Eigen::Index r = 0; r < m.paths.rows(); ++r) {
                Json row = Json::array();
                for (Eigen::Index c = 0; c < m.paths.cols(); ++c) row.push_back(m.paths(r, c));
                paths.push_back(std::move(row));
            }
            entry["paths"] = std::move(paths);
        }
        vois.push_back(std::move(entry));
    }
    return {{"format", "d2d-result/1"},
            {"settings", to_json(result.settings)},
            {"runs", {{"total", result.total_runs}, {"divergent", result.divergent_runs}}},
            {"warnings", warnings},
            {"vois", vois}};
}

Json to_json(const ValidationReport &report) {
    Json issues = Json::array();
    for (const auto &i : report.issues)
        issues.push_back({{"severity", i.severity == Severity::Error ? "error" : "warning"},
                          {"code", i.code},
                          {"message", i.message},
                          {"elements", i.elements},
                          {"suggestions", i.suggestions}});
    return {{"runnable", report.runnable()},
            {"errors", report.error_count()},
            {"warnings", report.warning_count()},
            {"issues", issues}};
}

Json to_json(const Trajectory &trajectory) {
    Json series = Json::object();
    auto column = [](const Eigen::MatrixXd &m, Eigen::Index c) {
        Json values = Json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) values.push_back(m(r, c));
        return values;
    };
    for (std::size_t i = 0; i < trajectory.state_names.size(); ++i)
        series[trajectory.state_names[i]] = column(trajectory.values, static_cast<Eigen::Index>(i));
    for (std::size_t i = 0; i < trajectory.aux_names.size(); ++i)
        series[trajectory.aux_names[i]] = column(trajectory.aux_values, static_cast<Eigen::Index>(i));
    return {{"times", trajectory.times}, {"series", series}};
}

Json result_slice(const Json &result, std::string_view key, std::string_view voi) {
    Json vois = Json::array();
    for (const auto &v : result.at("vois")) {
        if (!voi.empty() && v.at("voi").get<std::string>() != voi) continue;
        vois.push_back({{"voi", v.at("voi")}, {std::string(key), v.at(std::string(key))}});
    }
    return {{"settings", result.at("settings")}, {"vois", vois}};
}

std::string ranking_csv(const ExperimentResult &result) {
    std::string out = workbook::write_csv_row(
        {"voi", "rank", "intervention", "direction", "median", "median_ci_low", "median_ci_high", "p2_5", "p97_5",
         "samples"});
    for (const auto &v : result.vois)
        for (const auto &e : v.ranking)
            out += workbook::write_csv_row({v.effects.voi, std::to_string(e.rank), e.intervention.target,
                                            std::to_string(e.intervention.direction), format_number(e.median_effect),
                                            format_number(e.ci_low), format_number(e.ci_high), format_number(e.p025),
                                            format_number(e.p975), std::to_string(e.samples)});
    return out;
}

std::string pairwise_csv(const ExperimentResult &result) {
    std::string out = workbook::write_csv_row(
        {"voi", "intervention_a", "intervention_b", "fraction_a_gt_b", "ci_low", "ci_high", "tie_fraction", "samples"});
    for (const auto &v : result.vois) {
        const auto &m = v.pairwise;
        for (std::size_t a = 0; a < m.interventions.size(); ++a)
            for (std::size_t b = 0; b < m.interventions.size(); ++b) {
                if (a == b) continue;
                const auto &r = m.at(a, b);
                out += workbook::write_csv_row({v.effects.voi, label(m.interventions[a]), label(m.interventions[b]),
                                                format_number(r.fraction), format_number(r.ci_low),
                                                format_number(r.ci_high), format_number(r.tie_fraction),
                                                std::to_string(r.samples)});
            }
    }
    return out;
}

std::string sensitivity_csv(const ExperimentResult &result) {
    auto opt = [](const std::optional<double> &v) { return v ? format_number(*v) : std::string(); };
    std::string out = workbook::write_csv_row({"voi", "scope", "parameter", "rho", "ci_low", "ci_high"});
    for (const auto &v : result.vois) {
        auto rows = [&](const std::vector<SensitivityEntry> &entries) {
            for (const auto &e : entries)
                out += workbook::write_csv_row(
                    {v.effects.voi, e.scope, e.parameter, opt(e.rho), opt(e.ci_low), opt(e.ci_high)});
        };
        rows(v.sensitivity_pooled);
        for (const auto &per : v.sensitivity_per_intervention) rows(per);
    }
    return out;
}

std::string serialize_results(const ExperimentResult &result, ResultFormat format) {
    if (format == ResultFormat::Json) return to_json(result).dump(2) + "\n";
    return ranking_csv(result) + "\r\n" + sensitivity_csv(result);
}

} // namespace d2d
