#include "d2d/server.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <map>
#include <mutex>
#include <random>
#include <thread>

// Eigen first: httplib pulls in <resolv.h>, whose _res macro breaks Eigen.
#include "d2d/error.hpp"
#include "d2d/experiment.hpp"
#include "d2d/ingest.hpp"

#include <httplib.h>

namespace d2d {

using Json = nlohmann::ordered_json;

namespace {

constexpr const char *kJson = "application/json";

std::string now_utc() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Json overrides_json(const SettingsOverrides &s) {
    Json out = Json::object();
    if (s.base_time_unit_label) out["base_time_unit_label"] = *s.base_time_unit_label;
    if (s.timeframe_units) out["timeframe_units"] = *s.timeframe_units;
    if (s.theta_max_stock) out["theta_max_stock"] = *s.theta_max_stock;
    if (s.theta_max_aux) out["theta_max_aux"] = *s.theta_max_aux;
    if (s.samples) out["samples"] = *s.samples;
    if (s.seed) out["seed"] = *s.seed;
    if (s.bootstrap) out["bootstrap"] = *s.bootstrap;
    return out;
}

/// Settings object through the document reader, so field errors carry the
/// same messages as in uploaded documents.
SettingsOverrides parse_overrides(const Json &settings) {
    Json wrapper = {{"variables", Json::array()}, {"settings", settings}};
    return parse_json_document(wrapper.dump()).settings;
}

Json error_body(std::string_view code, std::string_view message, Json details = Json::array()) {
    return {{"code", code}, {"message", message}, {"details", std::move(details)}};
}

void reply(httplib::Response &res, int status, const Json &body) {
    res.status = status;
    res.set_content(body.dump(2) + "\n", kJson);
}

void reply_error(httplib::Response &res, int status, std::string_view code, std::string_view message,
                 Json details = Json::array()) {
    reply(res, status, error_body(code, message, std::move(details)));
}

} // namespace

struct Server::Impl {
    struct StoredModel {
        std::string id;
        std::string created;
        CausalLoopDiagram cld;
        SettingsOverrides settings;
        Json report;
        Json parse_warnings;

        Json document() const {
            Json diagram = to_json(cld);
            if (!settings.empty()) diagram["settings"] = overrides_json(settings);
            return {{"id", id},
                    {"created", created},
                    {"diagram", diagram},
                    {"report", report},
                    {"parse_warnings", parse_warnings}};
        }
    };

    struct RunRecord {
        std::string id;
        std::string model_id;
        std::string created;
        ModelSettings settings;
        Execution execution = Execution::Parallel;
        std::string status = "queued";
        Json error = nullptr;
        Json result = nullptr;

        Json document() const {
            return {{"id", id},
                    {"model_id", model_id},
                    {"created", created},
                    {"settings", to_json(settings)},
                    {"execution", execution == Execution::Sequential ? "seq" : "par"},
                    {"status", status},
                    {"error", error},
                    {"result", result}};
        }
        Json summary() const {
            return {{"id", id}, {"model_id", model_id}, {"created", created}, {"status", status}};
        }
    };

    ServerOptions options;
    httplib::Server http;
    std::mutex mu;
    std::map<std::string, StoredModel> models;
    std::map<std::string, RunRecord> runs;
    std::vector<std::thread> workers;
    std::mutex workers_mu;
    std::mt19937_64 ids{std::random_device{}()};

    explicit Impl(ServerOptions o) : options(std::move(o)) {
        std::filesystem::create_directories(options.data_dir / "models");
        std::filesystem::create_directories(options.data_dir / "runs");
        load();
        routes();
    }

    std::filesystem::path model_path(const std::string &id) const { return options.data_dir / "models" / (id + ".json"); }
    std::filesystem::path run_path(const std::string &id) const { return options.data_dir / "runs" / (id + ".json"); }

    // Callers hold mu.
    std::string fresh_id(char prefix) {
        for (;;) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%c%016llx", prefix, static_cast<unsigned long long>(ids()));
            if (!models.count(buf) && !runs.count(buf)) return buf;
        }
    }
    void persist(const StoredModel &m) { write_file_atomic(model_path(m.id), m.document().dump(2) + "\n"); }
    void persist(const RunRecord &r) { write_file_atomic(run_path(r.id), r.document().dump() + "\n"); }

    void load() {
        for (const auto &entry : std::filesystem::directory_iterator(options.data_dir / "models")) {
            if (entry.path().extension() != ".json") continue;
            const auto j = Json::parse(read_file(entry.path()), nullptr, false);
            if (j.is_discarded()) continue;
            StoredModel m;
            m.id = j.at("id").get<std::string>();
            m.created = j.value("created", "");
            const auto doc = parse_json_document(j.at("diagram").dump());
            m.cld = doc.cld;
            m.settings = doc.settings;
            m.report = j.at("report");
            m.parse_warnings = j.value("parse_warnings", Json::array());
            models.emplace(m.id, std::move(m));
        }
        for (const auto &entry : std::filesystem::directory_iterator(options.data_dir / "runs")) {
            if (entry.path().extension() != ".json") continue;
            const auto j = Json::parse(read_file(entry.path()), nullptr, false);
            if (j.is_discarded()) continue;
            RunRecord r;
            r.id = j.at("id").get<std::string>();
            r.model_id = j.at("model_id").get<std::string>();
            r.created = j.value("created", "");
            parse_overrides(j.at("settings")).apply_to(r.settings);
            r.execution = j.value("execution", "par") == "seq" ? Execution::Sequential : Execution::Parallel;
            r.status = j.at("status").get<std::string>();
            r.error = j.value("error", Json(nullptr));
            r.result = j.value("result", Json(nullptr));
            if (r.status == "queued" || r.status == "running") {
                r.status = "failed";
                r.error = error_body("INTERRUPTED", "the server stopped before this run finished");
                persist(r);
            }
            runs.emplace(r.id, std::move(r));
        }
    }

    void routes() {
        http.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                  {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                  {"Access-Control-Allow-Headers", "Content-Type"}});
        http.Options(R"(.*)", [](const httplib::Request &, httplib::Response &res) { res.status = 204; });
        http.set_exception_handler([](const httplib::Request &, httplib::Response &res, std::exception_ptr ep) {
            std::string what = "internal error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception &e) {
                what = e.what();
            } catch (...) {
            }
            reply_error(res, 500, "INTERNAL", what);
        });
        http.set_error_handler([](const httplib::Request &, httplib::Response &res) {
            if (res.body.empty()) reply_error(res, res.status, "NOT_FOUND", "no such resource");
        });

        http.Post("/models", [this](const httplib::Request &req, httplib::Response &res) { post_model(req, res); });
        http.Get("/models", [this](const httplib::Request &, httplib::Response &res) {
            std::lock_guard lock(mu);
            Json list = Json::array();
            for (const auto &[id, m] : models)
                list.push_back({{"id", id},
                                {"created", m.created},
                                {"variables", m.cld.variables.size()},
                                {"runnable", m.report.at("runnable")}});
            reply(res, 200, list);
        });
        http.Get(R"(/models/([^/]+))", [this](const httplib::Request &req, httplib::Response &res) {
            std::lock_guard lock(mu);
            const auto it = models.find(req.matches[1]);
            if (it == models.end()) return reply_error(res, 404, "UNKNOWN_MODEL", "no model " + std::string(req.matches[1]));
            reply(res, 200, it->second.document());
        });
        http.Get(R"(/models/([^/]+)/runs)", [this](const httplib::Request &req, httplib::Response &res) {
            std::lock_guard lock(mu);
            if (!models.count(req.matches[1]))
                return reply_error(res, 404, "UNKNOWN_MODEL", "no model " + std::string(req.matches[1]));
            Json list = Json::array();
            for (const auto &[id, r] : runs)
                if (r.model_id == req.matches[1]) list.push_back(r.summary());
            reply(res, 200, list);
        });
        http.Post(R"(/models/([^/]+)/runs)",
                  [this](const httplib::Request &req, httplib::Response &res) { post_run(req, res); });
        http.Get(R"(/runs/([^/]+))", [this](const httplib::Request &req, httplib::Response &res) {
            std::lock_guard lock(mu);
            const auto it = runs.find(req.matches[1]);
            if (it == runs.end()) return reply_error(res, 404, "UNKNOWN_RUN", "no run " + std::string(req.matches[1]));
            reply(res, 200, it->second.document());
        });
        for (const char *slice : {"ranking", "pairwise", "sensitivity"}) {
            http.Get(std::string(R"(/runs/([^/]+)/)") + slice,
                     [this, slice](const httplib::Request &req, httplib::Response &res) {
                         std::lock_guard lock(mu);
                         const auto *run = finished_run(req.matches[1], res);
                         if (!run) return;
                         reply(res, 200, result_slice(run->result, slice, req.get_param_value("voi")));
                     });
        }
        http.Get(R"(/runs/([^/]+)/trajectories)",
                 [this](const httplib::Request &req, httplib::Response &res) { get_trajectory(req, res); });
    }

    /// Done run or an error reply; caller holds mu.
    const RunRecord *finished_run(const std::string &id, httplib::Response &res) {
        const auto it = runs.find(id);
        if (it == runs.end()) {
            reply_error(res, 404, "UNKNOWN_RUN", "no run " + id);
            return nullptr;
        }
        if (it->second.status != "done") {
            reply_error(res, 409, "RUN_NOT_FINISHED", "run " + id + " is " + it->second.status,
                        Json::array({{{"status", it->second.status}, {"error", it->second.error}}}));
            return nullptr;
        }
        return &it->second;
    }

    void post_model(const httplib::Request &req, httplib::Response &res) {
        ModelDocument doc;
        try {
            const bool zip = req.body.rfind("PK", 0) == 0;
            doc = zip ? parse_workbook(req.body) : parse_json_document(req.body);
        } catch (const Error &e) {
            return reply_error(res, 400, to_string(e.code()), e.what(),
                               Json::array({{{"location", e.location()}}}));
        }
        StoredModel m;
        m.created = now_utc();
        m.cld = std::move(doc.cld);
        m.settings = doc.settings;
        m.report = to_json(validate_structure(m.cld));
        m.parse_warnings = Json::array();
        for (const auto &w : doc.warnings)
            m.parse_warnings.push_back({{"code", w.code}, {"message", w.message}, {"location", w.location}});
        std::lock_guard lock(mu);
        m.id = fresh_id('m');
        persist(m);
        const Json body = {{"model_id", m.id}, {"report", m.report}, {"parse_warnings", m.parse_warnings}};
        models.emplace(m.id, std::move(m));
        reply(res, 201, body);
    }

    void post_run(const httplib::Request &req, httplib::Response &res) {
        Json body = Json::object();
        if (!req.body.empty()) {
            body = Json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object())
                return reply_error(res, 400, "SCHEMA_VIOLATION", "run settings must be a JSON object");
        }
        std::unique_lock lock(mu);
        const auto it = models.find(req.matches[1]);
        if (it == models.end()) return reply_error(res, 404, "UNKNOWN_MODEL", "no model " + std::string(req.matches[1]));
        const auto &model = it->second;

        RunRecord run;
        try {
            model.settings.apply_to(run.settings);
            parse_overrides(body).apply_to(run.settings);
            check_settings(run.settings);
        } catch (const Error &e) {
            return reply_error(res, 422, to_string(e.code()), e.what(), Json::array({{{"location", e.location()}}}));
        }
        if (body.contains("execution")) {
            const auto &e = body.at("execution");
            if (e != "par" && e != "seq")
                return reply_error(res, 422, "INVALID_SETTINGS", "execution must be \"par\" or \"seq\"",
                                   Json::array({{{"location", "execution"}}}));
            run.execution = e == "seq" ? Execution::Sequential : Execution::Parallel;
        }
        if (!model.report.at("runnable").get<bool>()) {
            Json blocking = Json::array();
            for (const auto &issue : model.report.at("issues"))
                if (issue.at("severity") == "error") blocking.push_back(issue);
            return reply_error(res, 422, "NOT_RUNNABLE", "the diagram has blocking validation errors", blocking);
        }
        if (tagged_interventions(model.cld).empty())
            return reply_error(res, 422, "NOT_RUNNABLE", "no variable is tagged for intervention");

        run.id = fresh_id('r');
        run.model_id = model.id;
        run.created = now_utc();
        persist(run);
        const auto id = run.id;
        const auto cld = model.cld;
        const auto settings = run.settings;
        const auto execution = run.execution;
        runs.emplace(id, std::move(run));
        lock.unlock();

        {
            std::lock_guard wl(workers_mu);
            workers.emplace_back([this, id, cld, settings, execution] { execute(id, cld, settings, execution); });
        }
        reply(res, 202, {{"run_id", id}, {"status", "queued"}});
    }

    void set_status(const std::string &id, const std::string &status, Json error = nullptr, Json result = nullptr) {
        std::lock_guard lock(mu);
        auto &r = runs.at(id);
        r.status = status;
        r.error = std::move(error);
        r.result = std::move(result);
        persist(r);
    }

    void execute(const std::string &id, const CausalLoopDiagram &cld, const ModelSettings &settings,
                 Execution execution) {
        set_status(id, "running");
        try {
            ExperimentOptions opts;
            opts.execution = execution;
            opts.threads = options.run_threads;
            auto result = to_json(run_experiment(cld, settings, opts));
            set_status(id, "done", nullptr, std::move(result));
        } catch (const Error &e) {
            set_status(id, "failed", error_body(to_string(e.code()), e.what()));
        } catch (const std::exception &e) {
            set_status(id, "failed", error_body("INTERNAL", e.what()));
        }
    }

    void get_trajectory(const httplib::Request &req, httplib::Response &res) {
        std::unique_lock lock(mu);
        const auto *run = finished_run(req.matches[1], res);
        if (!run) return;
        const auto cld = models.at(run->model_id).cld;
        const auto settings = run->settings;
        lock.unlock();

        const auto wanted = req.get_param_value("intervention");
        std::optional<InterventionSpec> iv;
        for (const auto &candidate : tagged_interventions(cld))
            if (candidate.target == wanted || label(candidate) == wanted) iv = candidate;
        if (!iv)
            return reply_error(res, 400, "UNKNOWN_TARGET", "intervention must name a tagged variable",
                               Json::array({{{"location", "intervention"}, {"value", wanted}}}));
        long long sample = 0;
        if (req.has_param("sample")) {
            const auto text = req.get_param_value("sample");
            char *end = nullptr;
            sample = std::strtoll(text.c_str(), &end, 10);
            if (text.empty() || *end != '\0' || sample < 0 || sample >= settings.samples)
                return reply_error(res, 400, "INVALID_SETTINGS",
                                   "sample must be an index below " + std::to_string(settings.samples),
                                   Json::array({{{"location", "sample"}, {"value", text}}}));
        }
        const auto params = sample_parameters(cld, settings, static_cast<std::uint64_t>(sample));
        const auto setup = apply_intervention(eliminate_auxiliaries(cld, params), cld, params, *iv);
        Json body = {{"run_id", run_id_of(req)},
                     {"intervention", {{"target", iv->target}, {"direction", iv->direction}, {"label", label(*iv)}}},
                     {"sample", sample},
                     {"base_time_unit", settings.base_time_unit_label},
                     {"vois", variables_of_interest(cld)}};
        try {
            const auto trajectory = solve(setup.system, setup.x0, settings.timeframe_units);
            const auto t = to_json(trajectory);
            body["divergent"] = false;
            body["times"] = t.at("times");
            body["series"] = t.at("series");
        } catch (const Error &e) {
            if (e.code() != ErrorCode::NonFiniteState) throw;
            body["divergent"] = true;
            body["times"] = Json::array();
            body["series"] = Json::object();
        }
        reply(res, 200, body);
    }

    static std::string run_id_of(const httplib::Request &req) { return req.matches[1]; }

    void join_workers() {
        for (;;) {
            std::vector<std::thread> batch;
            {
                std::lock_guard wl(workers_mu);
                batch.swap(workers);
            }
            if (batch.empty()) return;
            for (auto &t : batch) t.join();
        }
    }
};

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Server::~Server() {
    stop();
    impl_->join_workers();
}

int Server::bind() {
    const int port = impl_->options.port == 0 ? impl_->http.bind_to_any_port(impl_->options.host)
                                              : (impl_->http.bind_to_port(impl_->options.host, impl_->options.port)
                                                     ? impl_->options.port
                                                     : -1);
    if (port < 0)
        throw Error(ErrorCode::Io, "cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port),
                    impl_->options.host);
    return port;
}

void Server::listen() { impl_->http.listen_after_bind(); }

void Server::stop() { impl_->http.stop(); }

void Server::wait_for_runs() { impl_->join_workers(); }

} // namespace d2d
