#include "qctrl/wave_store.hpp"

#include "qctrl/error.hpp"

#include <mutex>

namespace qctrl {

WaveformStore::WaveformStore(std::size_t capacity) : slots_(capacity) {
    if (capacity == 0) throw Error("store capacity must be positive");
}

void WaveformStore::check_slot(std::size_t slot) const {
    if (slot >= slots_.size())
        throw Error("slot " + std::to_string(slot) + " out of range (capacity " +
                    std::to_string(slots_.size()) + ")");
}

void WaveformStore::put(std::size_t slot, Waveform w) {
    check_slot(slot);
    std::unique_lock lock(mutex_);
    slots_[slot] = std::move(w);
}

Waveform WaveformStore::get(std::size_t slot) const {
    check_slot(slot);
    std::shared_lock lock(mutex_);
    if (!slots_[slot]) throw Error("slot " + std::to_string(slot) + " is empty");
    return *slots_[slot];
}

bool WaveformStore::occupied(std::size_t slot) const {
    check_slot(slot);
    std::shared_lock lock(mutex_);
    return slots_[slot].has_value();
}

void WaveformStore::clear(std::size_t slot) {
    check_slot(slot);
    std::unique_lock lock(mutex_);
    slots_[slot].reset();
}

}  // namespace qctrl
