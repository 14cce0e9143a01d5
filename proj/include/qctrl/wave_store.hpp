#pragma once

#include "qctrl/waveform.hpp"

#include <optional>
#include <shared_mutex>
#include <vector>

namespace qctrl {

// Fixed-capacity slot table addressed by index. Concurrent readers, exclusive
// writers; overwriting a slot is allowed.
class WaveformStore {
public:
    explicit WaveformStore(std::size_t capacity = 256);

    std::size_t capacity() const { return slots_.size(); }

    void put(std::size_t slot, Waveform w);          // throws on out-of-range slot
    Waveform get(std::size_t slot) const;            // throws on out-of-range or empty slot
    bool occupied(std::size_t slot) const;
    void clear(std::size_t slot);

private:
    void check_slot(std::size_t slot) const;

    mutable std::shared_mutex mutex_;
    std::vector<std::optional<Waveform>> slots_;
};

}  // namespace qctrl
