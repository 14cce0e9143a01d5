#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qctrl {

// Digitizer data-link frame, little-endian, 16-byte header:
//
//   magic        2B  {0x51, 0x44}
//   version      1B  1
//   channel_id   1B
//   device_id    2B
//   trigger_seq  4B
//   frame_index  2B
//   frame_count  2B
//   sample_count 2B
//   payload      sample_count * i16 (sign-extended 12-bit codes)
//
// A frame tops out at 728 samples so the datagram (1472 B) fits a standard
// 1500-byte MTU.
inline constexpr std::uint8_t kFrameMagic0 = 0x51;
inline constexpr std::uint8_t kFrameMagic1 = 0x44;
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderBytes = 16;
inline constexpr std::uint16_t kMaxFrameSamples = 728;
inline constexpr std::size_t kMaxFrameBytes = kFrameHeaderBytes + 2 * kMaxFrameSamples;
inline constexpr std::int16_t kAdcCodeMin = -2048;
inline constexpr std::int16_t kAdcCodeMax = 2047;

struct Frame {
    std::uint8_t channel_id = 0;
    std::uint16_t device_id = 0;
    std::uint32_t trigger_seq = 0;
    std::uint16_t frame_index = 0;
    std::uint16_t frame_count = 1;
    std::vector<std::int16_t> payload;

    bool operator==(const Frame&) const = default;
};

std::vector<std::uint8_t> encode_frame(const Frame& f);
// Throws on bad magic, bad version, header/length inconsistencies,
// frame_index >= frame_count, or out-of-range sample codes.
Frame decode_frame(std::span<const std::uint8_t> datagram);

// Splits a trigger record into frames of at most kMaxFrameSamples samples.
std::vector<Frame> fragment_record(std::uint16_t device_id, std::uint8_t channel_id,
                                   std::uint32_t trigger_seq,
                                   std::span<const std::int16_t> samples);

}  // namespace qctrl
