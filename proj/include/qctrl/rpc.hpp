#pragma once

#include "qctrl/net.hpp"

#include <json.hpp>

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace qctrl {

using Json = nlohmann::json;

// Newline-delimited JSON RPC.
//
// Request:  {"id": <any>, "target": "control"|"readout"|"manager",
//            "method": "...", "params": {...}}
// Response: {"id": <any>, "result": ...}
//         | {"id": <any>, "error": {"code": "...", "message": "..."}}
//
// One response per request id per connection; requests on one connection are
// handled in order.
inline constexpr std::uint16_t kManagerPort = 8800;
inline constexpr std::uint16_t kControlPort = 8801;
inline constexpr std::uint16_t kReadoutPort = 8802;

// Thrown by handlers to pick the error code on the wire.
class RpcError : public std::runtime_error {
public:
    RpcError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

// Schema helpers: fetch a typed field or throw a schema error naming it.
Json require_field(const Json& params, const std::string& name);
double require_double(const Json& params, const std::string& name);
std::int64_t require_int(const Json& params, const std::string& name);
std::string require_string(const Json& params, const std::string& name);
double get_double(const Json& params, const std::string& name, double fallback);
std::int64_t get_int(const Json& params, const std::string& name, std::int64_t fallback);
std::string get_string(const Json& params, const std::string& name, const std::string& fallback);

// JSON-lines RPC server bound to one target name.
class RpcServer {
public:
    using Handler = std::function<Json(const Json& params)>;

    RpcServer(std::string target, std::uint16_t port);
    ~RpcServer();

    void register_method(const std::string& method, Handler handler);
    void start();
    void stop();
    std::uint16_t port() const { return port_; }
    const std::string& target() const { return target_; }

private:
    void accept_loop();
    void serve(net::TcpConn conn);
    std::string handle_line(const std::string& line);

    std::string target_;
    std::uint16_t port_;
    std::unique_ptr<net::TcpListener> listener_;
    std::thread accept_thread_;
    std::vector<std::thread> conn_threads_;
    std::mutex conn_mutex_;
    std::vector<int> conn_fds_;
    std::atomic<bool> running_{false};
    std::map<std::string, Handler> methods_;
};

// Buffered line I/O over a TCP connection.
class LineChannel {
public:
    explicit LineChannel(net::TcpConn conn) : conn_(std::move(conn)) {}

    void send_line(const std::string& line);     // appends '\n'
    // Empty optional on EOF.
    std::optional<std::string> recv_line();

    net::TcpConn& conn() { return conn_; }

private:
    net::TcpConn conn_;
    std::string buf_;
};

// Single-connection blocking client.
class RpcClient {
public:
    RpcClient(const std::string& host, std::uint16_t port);

    // Throws RpcError on a server-side error envelope, Error on transport
    // failure or timeout.
    Json call(const std::string& target, const std::string& method, Json params,
              int timeout_ms = 5000);
    // Sends a raw line and returns the raw response line (timeout in ms).
    std::string raw_call(const std::string& line, int timeout_ms = 5000);

private:
    LineChannel chan_;
    std::uint64_t next_id_ = 1;
};

// The Manager: forwards requests to the routed server and relays response
// bytes verbatim. target "manager" answers ping/routes locally.
class Manager {
public:
    struct Route {
        std::string host;
        std::uint16_t port;
    };

    Manager(std::uint16_t port, std::map<std::string, Route> routes);
    ~Manager();

    void start();
    void stop();
    std::uint16_t port() const { return port_; }

private:
    void accept_loop();
    void serve_client(net::TcpConn conn);
    std::string local_dispatch(const Json& request);

    std::uint16_t port_;
    std::map<std::string, Route> routes_;
    std::unique_ptr<net::TcpListener> listener_;
    std::thread accept_thread_;
    std::vector<std::thread> conn_threads_;
    std::mutex conn_mutex_;
    std::vector<int> conn_fds_;
    std::atomic<bool> running_{false};
};

}  // namespace qctrl
