#include "qctrl/rpc.hpp"

#include "qctrl/error.hpp"

#include <sys/socket.h>

#include <chrono>

namespace qctrl {

Json require_field(const Json& params, const std::string& name) {
    if (!params.is_object() || !params.contains(name))
        throw RpcError("schema-error", "missing field '" + name + "'");
    return params.at(name);
}

double require_double(const Json& params, const std::string& name) {
    Json v = require_field(params, name);
    if (!v.is_number()) throw RpcError("schema-error", "field '" + name + "' must be a number");
    return v.get<double>();
}

std::int64_t require_int(const Json& params, const std::string& name) {
    Json v = require_field(params, name);
    if (!v.is_number_integer())
        throw RpcError("schema-error", "field '" + name + "' must be an integer");
    return v.get<std::int64_t>();
}

std::string require_string(const Json& params, const std::string& name) {
    Json v = require_field(params, name);
    if (!v.is_string()) throw RpcError("schema-error", "field '" + name + "' must be a string");
    return v.get<std::string>();
}

double get_double(const Json& params, const std::string& name, double fallback) {
    if (!params.is_object() || !params.contains(name)) return fallback;
    return require_double(params, name);
}

std::int64_t get_int(const Json& params, const std::string& name, std::int64_t fallback) {
    if (!params.is_object() || !params.contains(name)) return fallback;
    return require_int(params, name);
}

std::string get_string(const Json& params, const std::string& name, const std::string& fallback) {
    if (!params.is_object() || !params.contains(name)) return fallback;
    return require_string(params, name);
}

// ---------------------------------------------------------------------------
// LineChannel
// ---------------------------------------------------------------------------

void LineChannel::send_line(const std::string& line) {
    std::string out = line;
    out.push_back('\n');
    conn_.write_all({reinterpret_cast<const std::uint8_t*>(out.data()), out.size()});
}

std::optional<std::string> LineChannel::recv_line() {
    for (;;) {
        auto nl = buf_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buf_.substr(0, nl);
            buf_.erase(0, nl + 1);
            return line;
        }
        std::uint8_t chunk[4096];
        std::size_t n = conn_.read_some(chunk);
        if (n == 0) return std::nullopt;
        buf_.append(reinterpret_cast<const char*>(chunk), n);
    }
}

// ---------------------------------------------------------------------------
// RpcServer
// ---------------------------------------------------------------------------

RpcServer::RpcServer(std::string target, std::uint16_t port)
    : target_(std::move(target)), port_(port) {}

RpcServer::~RpcServer() { stop(); }

void RpcServer::register_method(const std::string& method, Handler handler) {
    methods_[method] = std::move(handler);
}

void RpcServer::start() {
    if (running_.exchange(true)) return;
    listener_ = std::make_unique<net::TcpListener>(port_);
    port_ = listener_->port();
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void RpcServer::stop() {
    if (!running_.exchange(false)) return;
    if (listener_) listener_->close();
    {
        std::lock_guard lock(conn_mutex_);
        for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    for (auto& t : conn_threads_)
        if (t.joinable()) t.join();
    conn_threads_.clear();
    listener_.reset();
}

void RpcServer::accept_loop() {
    while (running_.load()) {
        auto conn = listener_->accept(100);
        if (!conn) continue;
        std::lock_guard lock(conn_mutex_);
        conn_fds_.push_back(conn->fd());
        conn_threads_.emplace_back([this, c = std::move(*conn)]() mutable { serve(std::move(c)); });
    }
}

void RpcServer::serve(net::TcpConn conn) {
    LineChannel chan(std::move(conn));
    try {
        while (running_.load()) {
            auto line = chan.recv_line();
            if (!line) break;
            if (line->empty()) continue;
            chan.send_line(handle_line(*line));
        }
    } catch (const std::exception&) {
        // connection dropped
    }
}

std::string RpcServer::handle_line(const std::string& line) {
    Json id = nullptr;
    auto error_response = [&id](const std::string& code, const std::string& message) {
        Json resp{{"id", id}, {"error", {{"code", code}, {"message", message}}}};
        return resp.dump();
    };

    Json request = Json::parse(line, nullptr, false);
    if (request.is_discarded()) return error_response("parse-error", "request is not valid JSON");
    if (request.contains("id")) id = request.at("id");

    const std::string target = request.value("target", "");
    if (target != target_)
        return error_response("bad-target",
                              "request for target '" + target + "' sent to '" + target_ + "'");

    const std::string method = request.value("method", "");
    auto it = methods_.find(method);
    if (it == methods_.end())
        return error_response("unknown-method", "no method '" + method + "'");

    try {
        Json result = it->second(request.value("params", Json::object()));
        Json resp{{"id", id}, {"result", std::move(result)}};
        return resp.dump();
    } catch (const RpcError& e) {
        return error_response(e.code(), e.what());
    } catch (const std::exception& e) {
        return error_response("error", e.what());
    }
}

// ---------------------------------------------------------------------------
// RpcClient
// ---------------------------------------------------------------------------

namespace {

// Waits for a full line with a deadline using small poll slices.
std::optional<std::string> recv_line_deadline(LineChannel& chan, int timeout_ms) {
    // LineChannel::recv_line blocks; guard with SO_RCVTIMEO on the socket.
    timeval tv{};
    tv.tv_sec = timeout_ms / 1000;
    tv.tv_usec = (timeout_ms % 1000) * 1000;
    setsockopt(chan.conn().fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    try {
        return chan.recv_line();
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

RpcClient::RpcClient(const std::string& host, std::uint16_t port)
    : chan_(net::TcpConn::connect(host, port)) {}

std::string RpcClient::raw_call(const std::string& line, int timeout_ms) {
    chan_.send_line(line);
    auto resp = recv_line_deadline(chan_, timeout_ms);
    if (!resp) throw Error("rpc timeout or connection loss");
    return *resp;
}

Json RpcClient::call(const std::string& target, const std::string& method, Json params,
                     int timeout_ms) {
    Json request{{"id", next_id_++}, {"target", target}, {"method", method},
                 {"params", std::move(params)}};
    Json response = Json::parse(raw_call(request.dump(), timeout_ms));
    if (response.contains("error")) {
        const Json& err = response.at("error");
        throw RpcError(err.value("code", "error"), err.value("message", ""));
    }
    return response.value("result", Json());
}

// ---------------------------------------------------------------------------
// Manager
// ---------------------------------------------------------------------------

Manager::Manager(std::uint16_t port, std::map<std::string, Route> routes)
    : port_(port), routes_(std::move(routes)) {}

Manager::~Manager() { stop(); }

void Manager::start() {
    if (running_.exchange(true)) return;
    listener_ = std::make_unique<net::TcpListener>(port_);
    port_ = listener_->port();
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void Manager::stop() {
    if (!running_.exchange(false)) return;
    if (listener_) listener_->close();
    {
        std::lock_guard lock(conn_mutex_);
        for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    for (auto& t : conn_threads_)
        if (t.joinable()) t.join();
    conn_threads_.clear();
    listener_.reset();
}

void Manager::accept_loop() {
    while (running_.load()) {
        auto conn = listener_->accept(100);
        if (!conn) continue;
        std::lock_guard lock(conn_mutex_);
        conn_fds_.push_back(conn->fd());
        conn_threads_.emplace_back(
            [this, c = std::move(*conn)]() mutable { serve_client(std::move(c)); });
    }
}

std::string Manager::local_dispatch(const Json& request) {
    Json id = request.contains("id") ? request.at("id") : Json(nullptr);
    const std::string method = request.value("method", "");
    if (method == "ping") {
        Json resp{{"id", id}, {"result", "pong"}};
        return resp.dump();
    }
    if (method == "routes") {
        Json table = Json::object();
        for (const auto& [name, route] : routes_)
            table[name] = route.host + ":" + std::to_string(route.port);
        Json resp{{"id", id}, {"result", std::move(table)}};
        return resp.dump();
    }
    Json resp{{"id", id}, {"error", {{"code", "unknown-method"}, {"message", "no method '" + method + "'"}}}};
    return resp.dump();
}

void Manager::serve_client(net::TcpConn conn) {
    LineChannel client(std::move(conn));
    // Upstream connections are cached per client connection, so one client's
    // request order is preserved per target.
    std::map<std::string, std::unique_ptr<LineChannel>> upstreams;

    auto error_line = [](const Json& id, const std::string& code, const std::string& message) {
        Json resp{{"id", id}, {"error", {{"code", code}, {"message", message}}}};
        return resp.dump();
    };

    try {
        while (running_.load()) {
            auto line = client.recv_line();
            if (!line) break;
            if (line->empty()) continue;

            Json request = Json::parse(*line, nullptr, false);
            if (request.is_discarded()) {
                client.send_line(error_line(nullptr, "parse-error", "request is not valid JSON"));
                continue;
            }
            Json id = request.contains("id") ? request.at("id") : Json(nullptr);
            const std::string target = request.value("target", "");

            if (target == "manager") {
                client.send_line(local_dispatch(request));
                continue;
            }
            auto route = routes_.find(target);
            if (route == routes_.end()) {
                client.send_line(error_line(id, "unknown-target", "no route for target '" + target + "'"));
                continue;
            }

            auto up = upstreams.find(target);
            if (up == upstreams.end()) {
                try {
                    auto chan = std::make_unique<LineChannel>(
                        net::TcpConn::connect(route->second.host, route->second.port));
                    up = upstreams.emplace(target, std::move(chan)).first;
                } catch (const std::exception& e) {
                    client.send_line(error_line(id, "upstream-unreachable", e.what()));
                    continue;
                }
            }

            // Forward the request bytes and relay the response bytes verbatim.
            try {
                up->second->send_line(*line);
                auto resp = up->second->recv_line();
                if (!resp) throw Error("upstream closed");
                client.send_line(*resp);
            } catch (const std::exception& e) {
                upstreams.erase(target);
                client.send_line(error_line(id, "upstream-unreachable", e.what()));
            }
        }
    } catch (const std::exception&) {
        // client connection dropped
    }
}

}  // namespace qctrl
