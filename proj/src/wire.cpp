#include "qctrl/wire.hpp"

#include "qctrl/error.hpp"

namespace qctrl {

std::uint8_t ByteReader::u8() {
    if (pos_ + 1 > data_.size()) throw Error("short buffer");
    return data_[pos_++];
}

std::uint16_t ByteReader::u16() {
    if (pos_ + 2 > data_.size()) throw Error("short buffer");
    std::uint16_t v = static_cast<std::uint16_t>(data_[pos_]) |
                      static_cast<std::uint16_t>(data_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
}

std::uint32_t ByteReader::u32() {
    if (pos_ + 4 > data_.size()) throw Error("short buffer");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = v << 8 | data_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::u64() {
    if (pos_ + 8 > data_.size()) throw Error("short buffer");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = v << 8 | data_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 8;
    return v;
}

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n) {
    if (pos_ + n > data_.size()) throw Error("short buffer");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

void ByteWriter::u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::bytes(std::span<const std::uint8_t> data) {
    out_.insert(out_.end(), data.begin(), data.end());
}

std::vector<std::uint8_t> encode_message(const WireMessage& m) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + m.body.size());
    ByteWriter w(out);
    w.u32(static_cast<std::uint32_t>(4 + m.body.size()));
    w.u16(m.opcode);
    w.u16(m.request_id);
    w.bytes(m.body);
    return out;
}

WireMessage decode_message(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const std::uint32_t total_len = r.u32();
    if (total_len < 4) throw Error("wire message length too small");
    if (bytes.size() != 4u + total_len) throw Error("wire message length mismatch");
    WireMessage m;
    m.opcode = r.u16();
    m.request_id = r.u16();
    auto body = r.bytes(total_len - 4);
    m.body.assign(body.begin(), body.end());
    return m;
}

void write_message(net::TcpConn& conn, const WireMessage& m) {
    conn.write_all(encode_message(m));
}

WireMessage read_message(net::TcpConn& conn) {
    std::uint8_t len_buf[4];
    conn.read_exact(len_buf);
    std::uint32_t total_len = 0;
    for (int i = 3; i >= 0; --i) total_len = total_len << 8 | len_buf[i];
    if (total_len < 4) throw Error("wire message length too small");
    std::vector<std::uint8_t> rest(total_len);
    conn.read_exact(rest);
    WireMessage m;
    ByteReader r(rest);
    m.opcode = r.u16();
    m.request_id = r.u16();
    auto body = r.bytes(total_len - 4);
    m.body.assign(body.begin(), body.end());
    return m;
}

std::vector<std::uint8_t> make_upload_wave(std::uint16_t slot,
                                           std::span<const std::int16_t> codes) {
    std::vector<std::uint8_t> out;
    out.reserve(6 + 2 * codes.size());
    ByteWriter w(out);
    w.u16(slot);
    w.u32(static_cast<std::uint32_t>(codes.size()));
    for (std::int16_t c : codes) w.i16(c);
    return out;
}

std::vector<std::uint8_t> make_set_offset(std::uint8_t channel, std::int16_t code) {
    std::vector<std::uint8_t> out;
    ByteWriter w(out);
    w.u8(channel);
    w.i16(code);
    return out;
}

std::vector<std::uint8_t> make_set_delay(std::uint8_t channel, std::uint32_t samples) {
    std::vector<std::uint8_t> out;
    ByteWriter w(out);
    w.u8(channel);
    w.u32(samples);
    return out;
}

std::vector<std::uint8_t> make_set_trig(std::uint8_t mode) { return {mode}; }

std::vector<std::uint8_t> make_play(std::uint8_t channel, std::uint16_t slot) {
    std::vector<std::uint8_t> out;
    ByteWriter w(out);
    w.u8(channel);
    w.u16(slot);
    return out;
}

std::vector<std::uint8_t> make_dc_set(std::uint8_t channel, std::int64_t microvolts) {
    std::vector<std::uint8_t> out;
    ByteWriter w(out);
    w.u8(channel);
    w.i64(microvolts);
    return out;
}

std::vector<std::uint8_t> make_readback(std::uint16_t slot) {
    std::vector<std::uint8_t> out;
    ByteWriter w(out);
    w.u16(slot);
    return out;
}

UploadWaveBody parse_upload_wave(std::span<const std::uint8_t> body) {
    ByteReader r(body);
    UploadWaveBody b;
    b.slot = r.u16();
    const std::uint32_t count = r.u32();
    if (r.remaining() != 2u * count) throw Error("upload body length mismatch");
    b.codes.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) b.codes[i] = r.i16();
    return b;
}

std::vector<std::int16_t> parse_code_payload(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % 2 != 0) throw Error("odd code payload length");
    std::vector<std::int16_t> codes(bytes.size() / 2);
    ByteReader r(bytes);
    for (auto& c : codes) c = r.i16();
    return codes;
}

}  // namespace qctrl
