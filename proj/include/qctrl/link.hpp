#pragma once

#include "qctrl/wire.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace qctrl {

struct TaskResult {
    bool ok = false;               // response received with WireStatus::Ok
    bool timed_out = false;        // set by drain when the deadline passed first
    std::uint16_t opcode = 0;      // response opcode (high bit set)
    std::uint16_t request_id = 0;
    WireStatus status = WireStatus::Ok;
    std::vector<std::uint8_t> body;  // response payload after the status byte
    std::string error;               // transport-level failure text
    std::chrono::steady_clock::time_point submitted{};
    std::chrono::steady_clock::time_point completed{};
};

// Handle to a submitted task; resolves exactly once.
class Ticket {
public:
    Ticket() = default;

    bool valid() const { return state_ != nullptr; }
    // Waits until resolution or deadline; true when resolved.
    bool wait_until(std::chrono::steady_clock::time_point deadline) const;
    bool done() const;
    // Valid once done(); a timed-out wait leaves the pending result empty.
    TaskResult result() const;

private:
    friend class InstrumentLink;
    struct State;
    std::shared_ptr<State> state_;
};

// One FIFO worker per connected device: submissions from any thread are
// queued, executed strictly in order per device, and their results stored on
// tickets for later reading. Distinct devices proceed in parallel.
class InstrumentLink {
public:
    InstrumentLink() = default;
    ~InstrumentLink();
    InstrumentLink(const InstrumentLink&) = delete;
    InstrumentLink& operator=(const InstrumentLink&) = delete;

    // Connects and spawns the device worker. Throws if the device id is
    // already connected or the endpoint is unreachable.
    void connect_device(std::uint16_t device_id, const std::string& host, std::uint16_t port);
    bool has_device(std::uint16_t device_id) const;
    std::vector<std::uint16_t> device_ids() const;

    // Non-blocking; throws on an unknown device. A connection failure fails
    // the ticket, not the submit.
    Ticket submit(std::uint16_t device_id, std::uint16_t opcode, std::vector<std::uint8_t> body);

    // Blocks until every ticket resolves or the timeout elapses; tickets
    // still pending at the deadline are returned with timed_out set.
    static std::vector<TaskResult> drain(const std::vector<Ticket>& tickets,
                                         std::chrono::milliseconds timeout);

    void disconnect_all();

private:
    struct Device;
    struct PendingTask;

    void worker_loop(Device& dev);

    mutable std::mutex mutex_;
    std::map<std::uint16_t, std::unique_ptr<Device>> devices_;
};

}  // namespace qctrl
