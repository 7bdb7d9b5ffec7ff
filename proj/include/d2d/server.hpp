#pragma once

// HTTP front end: uploaded models and experiment runs, persisted as one JSON
// document each under a data directory.

#include <filesystem>
#include <memory>
#include <string>

namespace d2d {

struct ServerOptions {
    std::filesystem::path data_dir = "d2d-data";
    std::string host = "127.0.0.1";
    int port = 8080;                  ///< 0 picks a free port
    int run_threads = 0;              ///< OpenMP threads per run, 0 = default
    std::string cors_origin = "*";
};

class Server {
public:
    /// Loads stored models and runs; runs left unfinished by a previous
    /// process are marked failed.
    explicit Server(ServerOptions options);
    ~Server();

    Server(const Server &) = delete;
    Server &operator=(const Server &) = delete;

    /// Binds the listening socket and returns the port.
    int bind();
    /// Serves until stop(); call bind() first.
    void listen();
    void stop();

    /// Blocks until every run started so far has finished.
    void wait_for_runs();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace d2d
