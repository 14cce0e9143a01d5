#include "qctrl/frame.hpp"

#include "qctrl/error.hpp"
#include "qctrl/wire.hpp"

namespace qctrl {

std::vector<std::uint8_t> encode_frame(const Frame& f) {
    if (f.payload.empty() || f.payload.size() > kMaxFrameSamples)
        throw Error("frame payload must hold 1..728 samples");
    if (f.frame_index >= f.frame_count) throw Error("frame_index must be < frame_count");
    std::vector<std::uint8_t> out;
    out.reserve(kFrameHeaderBytes + 2 * f.payload.size());
    ByteWriter w(out);
    w.u8(kFrameMagic0);
    w.u8(kFrameMagic1);
    w.u8(kFrameVersion);
    w.u8(f.channel_id);
    w.u16(f.device_id);
    w.u32(f.trigger_seq);
    w.u16(f.frame_index);
    w.u16(f.frame_count);
    w.u16(static_cast<std::uint16_t>(f.payload.size()));
    for (std::int16_t s : f.payload) {
        if (s < kAdcCodeMin || s > kAdcCodeMax) throw Error("sample code outside 12-bit range");
        w.i16(s);
    }
    return out;
}

Frame decode_frame(std::span<const std::uint8_t> datagram) {
    ByteReader r(datagram);
    if (r.u8() != kFrameMagic0 || r.u8() != kFrameMagic1) throw Error("bad frame magic");
    if (r.u8() != kFrameVersion) throw Error("bad frame version");
    Frame f;
    f.channel_id = r.u8();
    f.device_id = r.u16();
    f.trigger_seq = r.u32();
    f.frame_index = r.u16();
    f.frame_count = r.u16();
    const std::uint16_t sample_count = r.u16();
    if (sample_count == 0 || sample_count > kMaxFrameSamples)
        throw Error("bad frame sample_count");
    if (r.remaining() != 2u * sample_count)
        throw Error("frame sample_count inconsistent with datagram length");
    if (f.frame_index >= f.frame_count) throw Error("frame_index must be < frame_count");
    f.payload.resize(sample_count);
    for (auto& s : f.payload) {
        s = r.i16();
        if (s < kAdcCodeMin || s > kAdcCodeMax) throw Error("sample code outside 12-bit range");
    }
    return f;
}

std::vector<Frame> fragment_record(std::uint16_t device_id, std::uint8_t channel_id,
                                   std::uint32_t trigger_seq,
                                   std::span<const std::int16_t> samples) {
    if (samples.empty()) throw Error("cannot fragment an empty record");
    const std::size_t count =
        (samples.size() + kMaxFrameSamples - 1) / kMaxFrameSamples;
    if (count > 0xFFFF) throw Error("record needs too many frames");
    std::vector<Frame> frames;
    frames.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Frame f;
        f.device_id = device_id;
        f.channel_id = channel_id;
        f.trigger_seq = trigger_seq;
        f.frame_index = static_cast<std::uint16_t>(i);
        f.frame_count = static_cast<std::uint16_t>(count);
        const std::size_t begin = i * kMaxFrameSamples;
        const std::size_t len = std::min<std::size_t>(kMaxFrameSamples, samples.size() - begin);
        f.payload.assign(samples.begin() + static_cast<std::ptrdiff_t>(begin),
                         samples.begin() + static_cast<std::ptrdiff_t>(begin + len));
        frames.push_back(std::move(f));
    }
    return frames;
}

}  // namespace qctrl
