#pragma once

#include "storyecho/jobs.hpp"
#include "storyecho/loop.hpp"

#include <memory>
#include <string>

namespace storyecho {

struct ApiError {
    int http_status = 500;
    std::string code;
    std::string detail;

    bool operator==(const ApiError&) const = default;
};

// validation -> 422, not found -> 404, conflicts and illegal transitions ->
// 409, provider failures -> 502, missing or bad token -> 401.
int http_status_for(Errc code);
ApiError to_api_error(const Error& error);
Json encode(const ApiError& error);

// HTTP front end over the loop. Handlers are stateless; generation runs on a
// JobExecutor and clients poll /jobs/{id}. Every route except /health needs
// "Authorization: Bearer <token>" and only sees its family's data.
class ApiService {
public:
    ApiService(InterventionLoop& loop, std::size_t job_parallelism, std::string provider_mode);
    ~ApiService();

    ApiService(const ApiService&) = delete;
    ApiService& operator=(const ApiService&) = delete;

    // Binds without serving; port 0 picks a free port. Returns the port.
    // Throws BindError.
    int bind(const std::string& host, int port);
    // Serves on the bound socket until stop().
    void listen();
    // bind + listen on a background thread.
    int start(const std::string& host, int port);
    void stop();

    JobExecutor& jobs();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace storyecho
