#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace qctrl::net {

// Move-only owned file descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket() { close(); }
    Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void close();
    // Wakes any thread blocked on this socket.
    void shutdown_both();

private:
    int fd_ = -1;
};

// Connected TCP stream.
class TcpConn {
public:
    TcpConn() = default;
    explicit TcpConn(Socket sock) : sock_(std::move(sock)) {}

    static TcpConn connect(const std::string& host, std::uint16_t port);

    void write_all(std::span<const std::uint8_t> data);
    // Throws Error on EOF or socket error.
    void read_exact(std::span<std::uint8_t> data);
    // Returns 0 on orderly EOF.
    std::size_t read_some(std::span<std::uint8_t> data);

    void set_nodelay(bool on = true);
    bool valid() const { return sock_.valid(); }
    int fd() const { return sock_.fd(); }
    void shutdown_both() { sock_.shutdown_both(); }
    void close() { sock_.close(); }

private:
    Socket sock_;
};

// Listening TCP socket bound to loopback.
class TcpListener {
public:
    // port 0 picks an ephemeral port. Throws a named-port Error when the
    // port is already in use.
    explicit TcpListener(std::uint16_t port);

    // Waits up to timeout_ms for a connection; nullopt on timeout or after
    // close().
    std::optional<TcpConn> accept(int timeout_ms);

    std::uint16_t port() const { return port_; }
    void close() { sock_.close(); }

private:
    Socket sock_;
    std::uint16_t port_ = 0;
};

// Datagram socket on loopback.
class UdpSocket {
public:
    UdpSocket() = default;

    // rcvbuf_bytes > 0 requests a receive buffer (forced when permitted).
    static UdpSocket bind(std::uint16_t port, int rcvbuf_bytes = 0);
    static UdpSocket connect(const std::string& host, std::uint16_t port);

    void send(std::span<const std::uint8_t> datagram);
    // nullopt on timeout; size 0 cannot occur for our non-empty frames.
    std::optional<std::size_t> recv(std::span<std::uint8_t> buf, int timeout_ms);

    std::uint16_t port() const { return port_; }
    bool valid() const { return sock_.valid(); }
    void close() { sock_.close(); }

private:
    Socket sock_;
    std::uint16_t port_ = 0;
};

}  // namespace qctrl::net
