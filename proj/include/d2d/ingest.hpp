#pragma once

// Reading diagrams from Kumu-style workbooks, CSV sheet exports and the
// canonical JSON document; writing diagrams and experiment results.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "d2d/cld.hpp"
#include "d2d/experiment.hpp"
#include "d2d/sampling.hpp"
#include "d2d/simulate.hpp"
#include "d2d/workbook.hpp"

namespace d2d {

/// Settings fields present in a document; absent fields keep their defaults.
struct SettingsOverrides {
    std::optional<std::string> base_time_unit_label;
    std::optional<int> timeframe_units;
    std::optional<double> theta_max_stock;
    std::optional<double> theta_max_aux;
    std::optional<int> samples;
    std::optional<std::uint64_t> seed;
    std::optional<int> bootstrap;

    void apply_to(ModelSettings &settings) const;
    bool empty() const;
};

struct ParseWarning {
    std::string code;
    std::string message;
    std::string location;
};

struct ModelDocument {
    CausalLoopDiagram cld;
    SettingsOverrides settings;
    std::vector<ParseWarning> warnings;
};

/// Elements / Connections / optional Interactions tables to a diagram. Errors:
/// MISSING_SHEET, MISSING_COLUMN, BAD_TYPE_CELL, BAD_TAG_CELL, EMPTY_LABEL,
/// each located at "Sheet!row".
ModelDocument parse_tables(const std::vector<workbook::Table> &tables);

ModelDocument parse_workbook(std::string_view bytes);

/// Directory holding elements.csv, connections.csv and optionally interactions.csv.
ModelDocument parse_csv_directory(const std::filesystem::path &dir);

/// Canonical JSON. Throws Error(SchemaViolation) with a JSON pointer location.
ModelDocument parse_json_document(std::string_view text);
CausalLoopDiagram parse_json(std::string_view text);

nlohmann::ordered_json to_json(const CausalLoopDiagram &cld);
nlohmann::ordered_json to_json(const ModelSettings &settings);
std::string serialize_json(const CausalLoopDiagram &cld, const std::optional<ModelSettings> &settings = std::nullopt);

/// The diagram as Kumu-style tables and as an .xlsx workbook.
std::vector<workbook::Table> to_tables(const CausalLoopDiagram &cld);
std::string serialize_workbook(const CausalLoopDiagram &cld);

/// Picks the reader by path: directory -> CSV sheets, .xlsx -> workbook,
/// anything else -> JSON. Throws Error(Io) if unreadable.
ModelDocument load_model(const std::filesystem::path &path);

std::string read_file(const std::filesystem::path &path);
/// Writes to a sibling temporary file, then renames over the target.
void write_file_atomic(const std::filesystem::path &path, std::string_view content);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

enum class ResultFormat { Json, Csv };

nlohmann::ordered_json ranking_json(const std::vector<RankingEntry> &ranking);
nlohmann::ordered_json pairwise_json(const DominanceMatrix &matrix);
nlohmann::ordered_json sensitivity_json(const std::vector<SensitivityEntry> &entries);
nlohmann::ordered_json to_json(const ExperimentResult &result);
nlohmann::ordered_json to_json(const ValidationReport &report);
nlohmann::ordered_json to_json(const Trajectory &trajectory);

/// {"settings", "vois": [{"voi", key: ...}]} cut from a serialized result;
/// key is "ranking", "pairwise" or "sensitivity". A non-empty voi keeps only
/// that VOI.
nlohmann::ordered_json result_slice(const nlohmann::ordered_json &result, std::string_view key,
                                    std::string_view voi = {});

std::string ranking_csv(const ExperimentResult &result);
std::string pairwise_csv(const ExperimentResult &result);
std::string sensitivity_csv(const ExperimentResult &result);

/// JSON: everything, including per-sample effects (null where divergent).
/// CSV: the ranking table, a blank line, then the sensitivity table.
std::string serialize_results(const ExperimentResult &result, ResultFormat format);

} // namespace d2d
