#include "d2d/cli.hpp"

#include <climits>
#include <csignal>
#include <cstdio>
#include <thread>

#include <CLI11.hpp>

#include "d2d/error.hpp"
#include "d2d/experiment.hpp"
#include "d2d/ingest.hpp"
#include "d2d/server.hpp"

namespace d2d {
namespace {

struct SettingsFlags {
    ModelSettings values;
    CLI::Option *base_time_unit = nullptr;
    CLI::Option *timeframe = nullptr;
    CLI::Option *theta_stock = nullptr;
    CLI::Option *theta_aux = nullptr;
    CLI::Option *samples = nullptr;
    CLI::Option *seed = nullptr;
    CLI::Option *bootstrap = nullptr;

    void attach(CLI::App &app) {
        base_time_unit = app.add_option("--base-time-unit", values.base_time_unit_label,
                                        "Label of one base time unit")
                             ->capture_default_str();
        timeframe = app.add_option("--timeframe", values.timeframe_units, "Horizon in base time units")
                        ->check(CLI::Range(2, INT_MAX))
                        ->capture_default_str();
        theta_stock = app.add_option("--theta-stock", values.theta_max_stock,
                                     "Largest link strength into a stock, SD per base time unit")
                          ->check(CLI::PositiveNumber)
                          ->capture_default_str();
        theta_aux = app.add_option("--theta-aux", values.theta_max_aux,
                                   "Largest link strength into an auxiliary, SD per SD")
                        ->check(CLI::PositiveNumber)
                        ->capture_default_str();
        samples = app.add_option("--samples", values.samples, "Parameter samples N")
                      ->check(CLI::Range(2, INT_MAX))
                      ->capture_default_str();
        seed = app.add_option("--seed", values.seed, "Random seed")->capture_default_str();
        bootstrap = app.add_option("--bootstrap", values.bootstrap, "Bootstrap resamples B")
                        ->check(CLI::Range(1, INT_MAX))
                        ->capture_default_str();
    }

    /// Defaults, then settings embedded in the document, then flags.
    ModelSettings resolve(const SettingsOverrides &embedded) const {
        ModelSettings s;
        embedded.apply_to(s);
        if (base_time_unit->count()) s.base_time_unit_label = values.base_time_unit_label;
        if (timeframe->count()) s.timeframe_units = values.timeframe_units;
        if (theta_stock->count()) s.theta_max_stock = values.theta_max_stock;
        if (theta_aux->count()) s.theta_max_aux = values.theta_max_aux;
        if (samples->count()) s.samples = values.samples;
        if (seed->count()) s.seed = values.seed;
        if (bootstrap->count()) s.bootstrap = values.bootstrap;
        return s;
    }
};

struct OutputFlags {
    std::string out;
    std::string format;
    std::string execution = "par";
    int threads = 0;

    void attach(CLI::App &app) {
        app.add_option("--out,-o", out, "Result file; written only on success");
        app.add_option("--format", format, "json or csv; default from the --out extension, else json")
            ->check(CLI::IsMember({"json", "csv"}));
        app.add_option("--execution", execution, "par (OpenMP) or seq (serial reference)")
            ->check(CLI::IsMember({"par", "seq"}))
            ->capture_default_str();
        app.add_option("--threads", threads, "OpenMP threads, 0 = runtime default; D2D_THREADS caps it")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
    }

    ResultFormat result_format() const {
        if (format == "csv") return ResultFormat::Csv;
        if (format == "json") return ResultFormat::Json;
        const auto ext = std::filesystem::path(out).extension().string();
        return ext == ".csv" || ext == ".CSV" ? ResultFormat::Csv : ResultFormat::Json;
    }

    ExperimentOptions options() const {
        ExperimentOptions o;
        o.execution = execution == "seq" ? Execution::Sequential : Execution::Parallel;
        o.threads = threads;
        return o;
    }
};

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::MissingSheet:
    case ErrorCode::MissingColumn:
    case ErrorCode::BadTypeCell:
    case ErrorCode::BadTagCell:
    case ErrorCode::EmptyLabel:
    case ErrorCode::SchemaViolation:
    case ErrorCode::MalformedWorkbook:
    case ErrorCode::Io:
    case ErrorCode::NonFiniteInput:
    case ErrorCode::InvalidSettings:
        return kExitParse;
    case ErrorCode::NonFiniteState:
    case ErrorCode::InsufficientSamples:
        return kExitDivergent;
    default:
        return kExitValidation;
    }
}

std::string fixed(const char *fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

void print_parse_warnings(const ModelDocument &doc, std::ostream &err) {
    for (const auto &w : doc.warnings) err << "warning " << w.code << " at " << w.location << ": " << w.message << "\n";
}

void print_report(const ValidationReport &report, std::ostream &os) {
    for (const auto &issue : report.issues) {
        os << (issue.severity == Severity::Error ? "error   " : "warning ") << issue.code << ": " << issue.message;
        if (!issue.elements.empty()) {
            os << " [";
            for (std::size_t i = 0; i < issue.elements.size(); ++i) os << (i ? ", " : "") << issue.elements[i];
            os << "]";
        }
        if (!issue.suggestions.empty()) {
            os << " suggest stock: ";
            for (std::size_t i = 0; i < issue.suggestions.size(); ++i) os << (i ? ", " : "") << issue.suggestions[i];
        }
        os << "\n";
    }
    os << report.error_count() << " error(s), " << report.warning_count() << " warning(s)\n";
}

void print_ranking(const VoiResult &v, std::ostream &out) {
    out << "VOI " << v.effects.voi << "\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-5s %-32s %13s %13s %13s %6s\n", "rank", "intervention", "median", "ci_low",
                  "ci_high", "n");
    out << line;
    for (const auto &e : v.ranking) {
        std::snprintf(line, sizeof line, "%-5d %-32s %13.6g %13.6g %13.6g %6zu\n", e.rank, label(e.intervention).c_str(),
                      e.median_effect, e.ci_low, e.ci_high, e.samples);
        out << line;
    }
}

void print_sensitivity(const std::vector<SensitivityEntry> &entries, std::size_t top, std::ostream &out) {
    char line[256];
    std::snprintf(line, sizeof line, "%-48s %10s %10s %10s\n", "parameter", "rho", "ci_low", "ci_high");
    out << line;
    auto cell = [](const std::optional<double> &v) { return v ? fixed("%10.4f", *v) : std::string("        NA"); };
    for (std::size_t i = 0; i < entries.size() && i < top; ++i) {
        const auto &e = entries[i];
        std::snprintf(line, sizeof line, "%-48s %s %s %s\n", e.parameter.c_str(), cell(e.rho).c_str(),
                      cell(e.ci_low).c_str(), cell(e.ci_high).c_str());
        out << line;
    }
}

void print_pairwise(const VoiResult &v, std::ostream &out) {
    const auto &m = v.pairwise;
    out << "VOI " << v.effects.voi << ": share of samples where row beats column\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-32s", "");
    out << line;
    for (std::size_t b = 0; b < m.interventions.size(); ++b) {
        std::snprintf(line, sizeof line, " %7s", ("[" + std::to_string(b + 1) + "]").c_str());
        out << line;
    }
    out << "\n";
    for (std::size_t a = 0; a < m.interventions.size(); ++a) {
        std::snprintf(line, sizeof line, "[%zu] %-28s", a + 1, label(m.interventions[a]).c_str());
        out << line;
        for (std::size_t b = 0; b < m.interventions.size(); ++b)
            out << (a == b ? std::string("       -") : fixed(" %6.1f%%", 100.0 * m.at(a, b).fraction));
        out << "\n";
    }
}

enum class Command { Run, Rank, Pairwise, Sensitivity };

int experiment_command(Command command, const std::string &input, const SettingsFlags &settings_flags,
                       const OutputFlags &output, std::size_t top, std::ostream &out, std::ostream &err) {
    const auto doc = load_model(input);
    print_parse_warnings(doc, err);
    const auto settings = settings_flags.resolve(doc.settings);
    check_settings(settings);
    const auto report = validate_structure(doc.cld);
    if (!report.runnable()) {
        print_report(report, err);
        return kExitValidation;
    }
    const auto result = run_experiment(doc.cld, settings, output.options());
    for (const auto &w : result.warnings) err << "warning " << w.code << ": " << w.message << "\n";
    if (result.divergent_runs * 2 > result.total_runs) {
        err << "error: " << result.divergent_runs << " of " << result.total_runs
            << " runs diverged; lower --theta-stock/--theta-aux or shorten --timeframe\n";
        return kExitDivergent;
    }

    const auto format = output.result_format();
    if (!output.out.empty()) {
        std::string content;
        if (command == Command::Run) {
            content = serialize_results(result, format);
        } else if (format == ResultFormat::Csv) {
            content = command == Command::Rank       ? ranking_csv(result)
                      : command == Command::Pairwise ? pairwise_csv(result)
                                                     : sensitivity_csv(result);
        } else {
            const char *key = command == Command::Rank ? "ranking" : command == Command::Pairwise ? "pairwise" : "sensitivity";
            content = result_slice(to_json(result), key).dump(2) + "\n";
        }
        write_file_atomic(output.out, content);
    }

    for (const auto &v : result.vois) {
        switch (command) {
        case Command::Run:
            print_ranking(v, out);
            out << "top sensitivity (pooled)\n";
            print_sensitivity(v.sensitivity_pooled, top, out);
            break;
        case Command::Rank: print_ranking(v, out); break;
        case Command::Pairwise: print_pairwise(v, out); break;
        case Command::Sensitivity:
            out << "VOI " << v.effects.voi << " pooled\n";
            print_sensitivity(v.sensitivity_pooled, top, out);
            for (std::size_t j = 0; j < v.sensitivity_per_intervention.size(); ++j) {
                out << "VOI " << v.effects.voi << " " << label(v.effects.interventions[j]) << "\n";
                print_sensitivity(v.sensitivity_per_intervention[j], top, out);
            }
            break;
        }
    }
    return kExitOk;
}

int validate_command(const std::string &input, std::ostream &out, std::ostream &err) {
    const auto doc = load_model(input);
    print_parse_warnings(doc, err);
    const auto report = validate_structure(doc.cld);
    out << doc.cld.variables.size() << " variables, " << doc.cld.links.size() << " links, "
        << doc.cld.interactions.size() << " interaction terms\n";
    print_report(report, out);
    return report.runnable() ? kExitOk : kExitValidation;
}

int serve_command(const ServerOptions &options, std::ostream &out) {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    Server server(options);
    const int port = server.bind();
    out << "listening on http://" << options.host << ":" << port << " (no authentication)" << std::endl;
    std::thread watcher([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    server.listen();
    server.wait_for_runs();
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Intervention experiments on causal loop diagrams", "d2d"};
    app.require_subcommand(1);
    app.footer("Exit codes: 0 ok, 1 validation errors, 2 unreadable input or bad flags, 3 more than half the runs "
               "diverged.\nInput: .xlsx workbook, directory of CSV sheets, or JSON document.");

    std::string input;
    auto *validate = app.add_subcommand("validate", "Check diagram structure");
    validate->add_option("input", input, "Model file or CSV directory")->required();

    struct ExperimentCommand {
        Command command;
        CLI::App *app;
        SettingsFlags settings;
        OutputFlags output;
        std::size_t top = 5;
    };
    std::vector<std::unique_ptr<ExperimentCommand>> commands;
    auto add_experiment = [&](Command command, const char *name, const char *description, std::size_t top) {
        auto c = std::make_unique<ExperimentCommand>();
        c->command = command;
        c->top = top;
        c->app = app.add_subcommand(name, description);
        c->app->add_option("input", input, "Model file or CSV directory")->required();
        c->settings.attach(*c->app);
        c->output.attach(*c->app);
        if (command == Command::Run || command == Command::Sensitivity)
            c->app->add_option("--top", c->top, "Sensitivity rows to print")->capture_default_str();
        commands.push_back(std::move(c));
    };
    add_experiment(Command::Run, "run", "Run the experiment and write the full result", 5);
    add_experiment(Command::Rank, "rank", "Ranking of interventions by median VOI effect", 5);
    add_experiment(Command::Pairwise, "pairwise", "Pairwise dominance fractions", 5);
    add_experiment(Command::Sensitivity, "sensitivity", "Spearman sensitivity of effects to link strengths",
                   SIZE_MAX);

    ServerOptions server_options;
    auto *serve = app.add_subcommand("serve", "HTTP service for the web workbench");
    serve->add_option("--host", server_options.host, "Bind address")->capture_default_str();
    serve->add_option("--port", server_options.port, "Port, 0 picks a free one")->capture_default_str();
    serve->add_option("--data-dir", server_options.data_dir, "Where models and runs are stored")
        ->capture_default_str();
    serve->add_option("--threads", server_options.run_threads, "OpenMP threads per run")->capture_default_str();
    serve->add_option("--cors-origin", server_options.cors_origin, "Access-Control-Allow-Origin value")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp &e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        // Subcommand --help also lands here with the subcommand's own text.
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        app.exit(e, out, err);
        return kExitParse;
    }

    try {
        if (validate->parsed()) return validate_command(input, out, err);
        if (serve->parsed()) return serve_command(server_options, out);
        for (const auto &c : commands)
            if (c->app->parsed()) return experiment_command(c->command, input, c->settings, c->output, c->top, out, err);
    } catch (const Error &e) {
        err << "error " << to_string(e.code());
        if (!e.location().empty()) err << " at " << e.location();
        err << ": " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitParse;
    }
    return kExitParse;
}

} // namespace d2d
