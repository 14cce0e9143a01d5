#include "qctrl/link.hpp"

#include "qctrl/error.hpp"

#include <atomic>

namespace qctrl {

struct Ticket::State {
    mutable std::mutex mutex;
    mutable std::condition_variable cv;
    bool done = false;
    TaskResult result;

    void resolve(TaskResult r) {
        {
            std::lock_guard lock(mutex);
            if (done) return;  // resolve exactly once
            result = std::move(r);
            done = true;
        }
        cv.notify_all();
    }
};

bool Ticket::wait_until(std::chrono::steady_clock::time_point deadline) const {
    if (!state_) return false;
    std::unique_lock lock(state_->mutex);
    return state_->cv.wait_until(lock, deadline, [&] { return state_->done; });
}

bool Ticket::done() const {
    if (!state_) return false;
    std::lock_guard lock(state_->mutex);
    return state_->done;
}

TaskResult Ticket::result() const {
    if (!state_) throw Error("empty ticket");
    std::lock_guard lock(state_->mutex);
    return state_->result;
}

struct InstrumentLink::PendingTask {
    std::uint16_t opcode = 0;
    std::vector<std::uint8_t> body;
    std::shared_ptr<Ticket::State> state;
    std::chrono::steady_clock::time_point submitted{};
};

struct InstrumentLink::Device {
    std::uint16_t id = 0;
    net::TcpConn conn;
    std::thread worker;

    std::mutex queue_mutex;
    std::condition_variable queue_cv;
    std::deque<PendingTask> queue;
    bool stopping = false;
    bool dead = false;            // connection failed; fail all subsequent tasks
    std::string death_reason;
    std::uint16_t next_request_id = 0;
};

InstrumentLink::~InstrumentLink() { disconnect_all(); }

void InstrumentLink::connect_device(std::uint16_t device_id, const std::string& host,
                                    std::uint16_t port) {
    std::lock_guard lock(mutex_);
    if (devices_.count(device_id))
        throw Error("device " + std::to_string(device_id) + " already connected");
    auto dev = std::make_unique<Device>();
    dev->id = device_id;
    dev->conn = net::TcpConn::connect(host, port);
    Device* raw = dev.get();
    dev->worker = std::thread([this, raw] { worker_loop(*raw); });
    devices_.emplace(device_id, std::move(dev));
}

bool InstrumentLink::has_device(std::uint16_t device_id) const {
    std::lock_guard lock(mutex_);
    return devices_.count(device_id) != 0;
}

std::vector<std::uint16_t> InstrumentLink::device_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::uint16_t> ids;
    for (const auto& [id, _] : devices_) ids.push_back(id);
    return ids;
}

Ticket InstrumentLink::submit(std::uint16_t device_id, std::uint16_t opcode,
                              std::vector<std::uint8_t> body) {
    Device* dev = nullptr;
    {
        std::lock_guard lock(mutex_);
        auto it = devices_.find(device_id);
        if (it == devices_.end())
            throw Error("unknown device " + std::to_string(device_id));
        dev = it->second.get();
    }

    Ticket ticket;
    ticket.state_ = std::make_shared<Ticket::State>();

    PendingTask task;
    task.opcode = opcode;
    task.body = std::move(body);
    task.state = ticket.state_;
    task.submitted = std::chrono::steady_clock::now();

    {
        std::lock_guard lock(dev->queue_mutex);
        if (dev->dead) {
            TaskResult r;
            r.error = dev->death_reason;
            r.submitted = task.submitted;
            r.completed = std::chrono::steady_clock::now();
            task.state->resolve(std::move(r));
            return ticket;
        }
        dev->queue.push_back(std::move(task));
    }
    dev->queue_cv.notify_one();
    return ticket;
}

void InstrumentLink::worker_loop(Device& dev) {
    for (;;) {
        PendingTask task;
        {
            std::unique_lock lock(dev.queue_mutex);
            dev.queue_cv.wait(lock, [&] { return dev.stopping || !dev.queue.empty(); });
            if (dev.stopping && dev.queue.empty()) return;
            task = std::move(dev.queue.front());
            dev.queue.pop_front();
            if (dev.dead) {
                TaskResult r;
                r.error = dev.death_reason;
                r.submitted = task.submitted;
                r.completed = std::chrono::steady_clock::now();
                task.state->resolve(std::move(r));
                continue;
            }
        }

        WireMessage msg;
        msg.opcode = task.opcode;
        msg.body = std::move(task.body);

        TaskResult result;
        result.submitted = task.submitted;
        try {
            {
                std::lock_guard lock(dev.queue_mutex);
                msg.request_id = dev.next_request_id++;
            }
            write_message(dev.conn, msg);
            WireMessage resp = read_message(dev.conn);
            if (resp.request_id != msg.request_id)
                throw Error("response id mismatch (sent " + std::to_string(msg.request_id) +
                            ", got " + std::to_string(resp.request_id) + ")");
            if (resp.opcode != (msg.opcode | kOpResponseFlag))
                throw Error("response opcode mismatch");
            result.opcode = resp.opcode;
            result.request_id = resp.request_id;
            if (resp.body.empty()) throw Error("empty response body");
            result.status = static_cast<WireStatus>(resp.body[0]);
            result.body.assign(resp.body.begin() + 1, resp.body.end());
            result.ok = result.status == WireStatus::Ok;
        } catch (const std::exception& e) {
            result.ok = false;
            result.error = e.what();
            std::lock_guard lock(dev.queue_mutex);
            dev.dead = true;
            dev.death_reason = e.what();
        }
        result.completed = std::chrono::steady_clock::now();
        task.state->resolve(std::move(result));
    }
}

std::vector<TaskResult> InstrumentLink::drain(const std::vector<Ticket>& tickets,
                                              std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::vector<TaskResult> results;
    results.reserve(tickets.size());
    for (const auto& t : tickets) {
        if (!t.valid()) {
            TaskResult r;
            r.error = "empty ticket";
            results.push_back(std::move(r));
            continue;
        }
        if (t.wait_until(deadline)) {
            results.push_back(t.result());
        } else {
            TaskResult r;
            r.timed_out = true;
            r.error = "drain timeout";
            results.push_back(std::move(r));
        }
    }
    return results;
}

void InstrumentLink::disconnect_all() {
    std::map<std::uint16_t, std::unique_ptr<Device>> devices;
    {
        std::lock_guard lock(mutex_);
        devices.swap(devices_);
    }
    for (auto& [id, dev] : devices) {
        {
            std::lock_guard lock(dev->queue_mutex);
            dev->stopping = true;
        }
        dev->queue_cv.notify_all();
        dev->conn.shutdown_both();  // wake a worker blocked in recv
        if (dev->worker.joinable()) dev->worker.join();
    }
}

}  // namespace qctrl
