#pragma once

#include "qctrl/frame.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace qctrl {

struct RecordKey {
    std::uint16_t device_id = 0;
    std::uint8_t channel_id = 0;
    std::uint32_t trigger_seq = 0;

    bool operator==(const RecordKey&) const = default;
};

struct RecordKeyHash {
    std::size_t operator()(const RecordKey& k) const {
        return std::hash<std::uint64_t>{}(
            (static_cast<std::uint64_t>(k.device_id) << 40) |
            (static_cast<std::uint64_t>(k.channel_id) << 32) | k.trigger_seq);
    }
};

// One trigger record rebuilt from frames.
struct Record {
    RecordKey key;
    std::vector<std::int16_t> samples;      // frames concatenated in index order
    bool complete = false;
    bool corrupt = false;                   // conflicting frame_count, or born after eviction
    std::vector<std::uint16_t> missing;     // frame indices absent at flush time
    std::uint16_t frame_count = 0;
};

struct ReassemblerStats {
    std::uint64_t frames = 0;
    std::uint64_t duplicate_frames = 0;
    std::uint64_t samples = 0;              // accepted (non-duplicate) samples
    std::uint64_t bytes = 0;                // accepted frame bytes incl. headers
    std::uint64_t records_completed = 0;
    std::uint64_t records_flushed = 0;
    std::uint64_t corrupt_records = 0;
};

// Rebuilds per-trigger records from frames arriving in any order. Single
// ingest owner; duplicates are idempotent; flush() evicts stale keys and
// surfaces their incompleteness, keeping memory bounded. A frame for an
// evicted key starts a fresh record flagged corrupt and never merges with
// the evicted data.
class Reassembler {
public:
    // The clock returns seconds on a steady timeline; injectable for tests.
    using Clock = std::function<double()>;
    explicit Reassembler(Clock clock = {});

    // Returns the completed record once its last frame lands.
    std::optional<Record> ingest(const Frame& f);

    // Evicts keys whose last frame arrived more than older_than seconds ago.
    std::vector<Record> flush(double older_than);

    std::size_t pending() const { return pending_.size(); }
    const ReassemblerStats& stats() const { return stats_; }

private:
    struct Pending {
        std::uint16_t frame_count = 0;
        std::uint16_t received = 0;
        bool corrupt = false;
        double last_arrival = 0.0;
        std::vector<std::vector<std::int16_t>> parts;  // by frame_index
    };

    Record finish(const RecordKey& key, Pending&& p, bool complete);
    void remember_evicted(const RecordKey& key);

    Clock clock_;
    std::unordered_map<RecordKey, Pending, RecordKeyHash> pending_;
    std::unordered_set<RecordKey, RecordKeyHash> evicted_;
    std::deque<RecordKey> evicted_order_;   // bounds the tombstone set
    ReassemblerStats stats_;
};

}  // namespace qctrl
