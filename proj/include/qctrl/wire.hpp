#pragma once

#include "qctrl/net.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace qctrl {

// Instrument-link wire format (AWGs and DC sources), little-endian, no
// padding:
//
//   total_len  u32   byte length of opcode + request_id + body
//   opcode     u16   responses set the high bit (0x8000) and echo request_id
//   request_id u16
//   body       opcode-specific
inline constexpr std::uint16_t kOpUploadWave = 0x0001;   // slot u16, count u32, codes i16[]
inline constexpr std::uint16_t kOpSetOffset = 0x0002;    // channel u8, code i16
inline constexpr std::uint16_t kOpSetDelay = 0x0003;     // channel u8, samples u32
inline constexpr std::uint16_t kOpSetTrig = 0x0004;      // mode u8
inline constexpr std::uint16_t kOpPlay = 0x0005;         // channel u8, slot u16
inline constexpr std::uint16_t kOpReadbackWave = 0x0006; // slot u16
inline constexpr std::uint16_t kOpDcSet = 0x0010;        // channel u8, microvolts i64
inline constexpr std::uint16_t kOpPing = 0x00FF;         // empty
inline constexpr std::uint16_t kOpResponseFlag = 0x8000;

// First response-body byte.
enum class WireStatus : std::uint8_t {
    Ok = 0,
    BadOpcode = 1,
    BadSlot = 2,
    BadRequest = 3,
    RangeError = 4,
};

struct WireMessage {
    std::uint16_t opcode = 0;
    std::uint16_t request_id = 0;
    std::vector<std::uint8_t> body;

    bool operator==(const WireMessage&) const = default;
};

std::vector<std::uint8_t> encode_message(const WireMessage& m);
// Expects exactly one whole message (length prefix included); throws on a
// short buffer or a length mismatch.
WireMessage decode_message(std::span<const std::uint8_t> bytes);

// Stream framing over a TCP connection.
void write_message(net::TcpConn& conn, const WireMessage& m);
WireMessage read_message(net::TcpConn& conn);

// Bounds-checked little-endian cursor; throws Error("short buffer") on
// overrun.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    std::span<const std::uint8_t> bytes(std::size_t n);
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

class ByteWriter {
public:
    explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void bytes(std::span<const std::uint8_t> data);

private:
    std::vector<std::uint8_t>& out_;
};

// Typed request bodies.
std::vector<std::uint8_t> make_upload_wave(std::uint16_t slot, std::span<const std::int16_t> codes);
std::vector<std::uint8_t> make_set_offset(std::uint8_t channel, std::int16_t code);
std::vector<std::uint8_t> make_set_delay(std::uint8_t channel, std::uint32_t samples);
std::vector<std::uint8_t> make_set_trig(std::uint8_t mode);
std::vector<std::uint8_t> make_play(std::uint8_t channel, std::uint16_t slot);
std::vector<std::uint8_t> make_dc_set(std::uint8_t channel, std::int64_t microvolts);
std::vector<std::uint8_t> make_readback(std::uint16_t slot);

struct UploadWaveBody {
    std::uint16_t slot;
    std::vector<std::int16_t> codes;
};
UploadWaveBody parse_upload_wave(std::span<const std::uint8_t> body);
std::vector<std::int16_t> parse_code_payload(std::span<const std::uint8_t> bytes);

}  // namespace qctrl
