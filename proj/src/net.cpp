#include "qctrl/net.hpp"

#include "qctrl/error.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace qctrl::net {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
    throw Error(what + ": " + std::strerror(errno));
}

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (host.empty() || host == "localhost") {
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    } else if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        throw Error("bad host address '" + host + "'");
    }
    return addr;
}

std::uint16_t bound_port(int fd) {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    if (getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
        throw_errno("getsockname");
    return ntohs(addr.sin_port);
}

}  // namespace

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

void Socket::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void Socket::shutdown_both() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

TcpConn TcpConn::connect(const std::string& host, std::uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw_errno("socket");
    Socket sock(fd);
    sockaddr_in addr = make_addr(host, port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw_errno("connect to " + host + ":" + std::to_string(port));
    TcpConn conn(std::move(sock));
    conn.set_nodelay();
    return conn;
}

void TcpConn::write_all(std::span<const std::uint8_t> data) {
    std::size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::send(sock_.fd(), data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("send");
        }
        off += static_cast<std::size_t>(n);
    }
}

void TcpConn::read_exact(std::span<std::uint8_t> data) {
    std::size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::recv(sock_.fd(), data.data() + off, data.size() - off, 0);
        if (n == 0) throw Error("connection closed");
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("recv");
        }
        off += static_cast<std::size_t>(n);
    }
}

std::size_t TcpConn::read_some(std::span<std::uint8_t> data) {
    for (;;) {
        ssize_t n = ::recv(sock_.fd(), data.data(), data.size(), 0);
        if (n >= 0) return static_cast<std::size_t>(n);
        if (errno == EINTR) continue;
        throw_errno("recv");
    }
}

void TcpConn::set_nodelay(bool on) {
    int v = on ? 1 : 0;
    setsockopt(sock_.fd(), IPPROTO_TCP, TCP_NODELAY, &v, sizeof v);
}

TcpListener::TcpListener(std::uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw_errno("socket");
    sock_ = Socket(fd);
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = make_addr("", port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        if (errno == EADDRINUSE)
            throw Error("port " + std::to_string(port) + " already in use");
        throw_errno("bind port " + std::to_string(port));
    }
    if (::listen(fd, 64) != 0) throw_errno("listen");
    port_ = bound_port(fd);
}

std::optional<TcpConn> TcpListener::accept(int timeout_ms) {
    if (!sock_.valid()) return std::nullopt;
    pollfd pfd{sock_.fd(), POLLIN, 0};
    int r = ::poll(&pfd, 1, timeout_ms);
    if (r <= 0) return std::nullopt;
    int fd = ::accept(sock_.fd(), nullptr, nullptr);
    if (fd < 0) return std::nullopt;
    TcpConn conn{Socket(fd)};
    conn.set_nodelay();
    return conn;
}

UdpSocket UdpSocket::bind(std::uint16_t port, int rcvbuf_bytes) {
    int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) throw_errno("socket");
    UdpSocket s;
    s.sock_ = Socket(fd);
    if (rcvbuf_bytes > 0) {
        // SO_RCVBUFFORCE needs CAP_NET_ADMIN; fall back to the capped form.
        if (setsockopt(fd, SOL_SOCKET, SO_RCVBUFFORCE, &rcvbuf_bytes, sizeof rcvbuf_bytes) != 0)
            setsockopt(fd, SOL_SOCKET, SO_RCVBUF, &rcvbuf_bytes, sizeof rcvbuf_bytes);
    }
    sockaddr_in addr = make_addr("", port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        if (errno == EADDRINUSE)
            throw Error("port " + std::to_string(port) + " already in use");
        throw_errno("bind port " + std::to_string(port));
    }
    s.port_ = bound_port(fd);
    return s;
}

UdpSocket UdpSocket::connect(const std::string& host, std::uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) throw_errno("socket");
    UdpSocket s;
    s.sock_ = Socket(fd);
    sockaddr_in addr = make_addr(host, port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw_errno("udp connect");
    s.port_ = bound_port(fd);
    return s;
}

void UdpSocket::send(std::span<const std::uint8_t> datagram) {
    for (;;) {
        ssize_t n = ::send(sock_.fd(), datagram.data(), datagram.size(), 0);
        if (n == static_cast<ssize_t>(datagram.size())) return;
        if (n < 0 && errno == EINTR) continue;
        if (n < 0 && (errno == ENOBUFS || errno == EAGAIN)) continue;  // transient
        throw_errno("udp send");
    }
}

std::optional<std::size_t> UdpSocket::recv(std::span<std::uint8_t> buf, int timeout_ms) {
    pollfd pfd{sock_.fd(), POLLIN, 0};
    int r = ::poll(&pfd, 1, timeout_ms);
    if (r <= 0) return std::nullopt;
    ssize_t n = ::recv(sock_.fd(), buf.data(), buf.size(), 0);
    if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) return std::nullopt;
        throw_errno("udp recv");
    }
    return static_cast<std::size_t>(n);
}

}  // namespace qctrl::net
