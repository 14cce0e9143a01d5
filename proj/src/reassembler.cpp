#include "qctrl/reassembler.hpp"

#include <chrono>

namespace qctrl {

namespace {
constexpr std::size_t kMaxTombstones = 4096;

double steady_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}
}  // namespace

Reassembler::Reassembler(Clock clock) : clock_(clock ? std::move(clock) : steady_seconds) {}

std::optional<Record> Reassembler::ingest(const Frame& f) {
    RecordKey key{f.device_id, f.channel_id, f.trigger_seq};
    auto [it, inserted] = pending_.try_emplace(key);
    Pending& p = it->second;
    if (inserted) {
        p.frame_count = f.frame_count;
        p.parts.resize(f.frame_count);
        if (evicted_.count(key)) p.corrupt = true;  // late frame after eviction
    } else if (p.frame_count != f.frame_count) {
        p.corrupt = true;  // conflicting frame_count poisons the key
    }

    if (f.frame_index >= p.frame_count) {
        p.corrupt = true;
        return std::nullopt;
    }
    if (!p.parts[f.frame_index].empty()) {
        ++stats_.duplicate_frames;
        return std::nullopt;  // duplicates are idempotent, first frame wins
    }

    p.parts[f.frame_index] = f.payload;
    ++p.received;
    ++stats_.frames;
    stats_.samples += f.payload.size();
    stats_.bytes += kFrameHeaderBytes + 2 * f.payload.size();
    p.last_arrival = clock_();

    if (p.received == p.frame_count) {
        Record rec = finish(key, std::move(p), true);
        pending_.erase(it);
        ++stats_.records_completed;
        if (rec.corrupt) ++stats_.corrupt_records;
        return rec;
    }
    return std::nullopt;
}

std::vector<Record> Reassembler::flush(double older_than) {
    const double now = clock_();
    std::vector<Record> out;
    for (auto it = pending_.begin(); it != pending_.end();) {
        if (now - it->second.last_arrival > older_than) {
            Record rec = finish(it->first, std::move(it->second), false);
            remember_evicted(it->first);
            it = pending_.erase(it);
            ++stats_.records_flushed;
            if (rec.corrupt) ++stats_.corrupt_records;
            out.push_back(std::move(rec));
        } else {
            ++it;
        }
    }
    return out;
}

Record Reassembler::finish(const RecordKey& key, Pending&& p, bool complete) {
    Record rec;
    rec.key = key;
    rec.complete = complete;
    rec.corrupt = p.corrupt;
    rec.frame_count = p.frame_count;
    std::size_t total = 0;
    for (const auto& part : p.parts) total += part.size();
    rec.samples.reserve(total);
    for (std::uint16_t i = 0; i < p.frame_count; ++i) {
        if (p.parts[i].empty()) {
            rec.missing.push_back(i);
        } else {
            rec.samples.insert(rec.samples.end(), p.parts[i].begin(), p.parts[i].end());
        }
    }
    return rec;
}

void Reassembler::remember_evicted(const RecordKey& key) {
    if (evicted_.insert(key).second) {
        evicted_order_.push_back(key);
        if (evicted_order_.size() > kMaxTombstones) {
            evicted_.erase(evicted_order_.front());
            evicted_order_.pop_front();
        }
    }
}

}  // namespace qctrl
