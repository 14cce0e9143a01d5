#include <qctrl/error.hpp>
#include <qctrl/wire.hpp>

#include <doctest.h>

#include <random>

using namespace qctrl;

TEST_CASE("wire: dc_set golden bytes") {
    // DC_SET channel 1, 1,250,000 uV, request id 7
    WireMessage m;
    m.opcode = kOpDcSet;
    m.request_id = 7;
    m.body = make_dc_set(1, 1'250'000);
    const std::vector<std::uint8_t> expect = {
        0x0D, 0x00, 0x00, 0x00,  // total_len = 13
        0x10, 0x00,              // opcode 0x0010
        0x07, 0x00,              // request id 7
        0x01,                    // channel
        0xD0, 0x12, 0x13, 0x00, 0x00, 0x00, 0x00, 0x00,  // 1,250,000 LE
    };
    CHECK(encode_message(m) == expect);
}

TEST_CASE("wire: upload golden header") {
    WireMessage m;
    m.opcode = kOpUploadWave;
    m.request_id = 0x0201;
    const std::int16_t codes[] = {-1, 2};
    m.body = make_upload_wave(3, codes);
    auto bytes = encode_message(m);
    // total_len = 4 + (2 + 4 + 4) = 14
    const std::vector<std::uint8_t> expect = {
        0x0E, 0x00, 0x00, 0x00, 0x01, 0x00, 0x01, 0x02,
        0x03, 0x00,              // slot
        0x02, 0x00, 0x00, 0x00,  // count
        0xFF, 0xFF, 0x02, 0x00,  // codes
    };
    CHECK(bytes == expect);
}

TEST_CASE("wire: round trip on random messages") {
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> len_dist(0, 512);
    std::uniform_int_distribution<int> byte_dist(0, 255);
    std::uniform_int_distribution<int> u16_dist(0, 0xFFFF);
    for (int trial = 0; trial < 1000; ++trial) {
        WireMessage m;
        m.opcode = static_cast<std::uint16_t>(u16_dist(rng));
        m.request_id = static_cast<std::uint16_t>(u16_dist(rng));
        m.body.resize(static_cast<std::size_t>(len_dist(rng)));
        for (auto& b : m.body) b = static_cast<std::uint8_t>(byte_dist(rng));
        CHECK(decode_message(encode_message(m)) == m);
    }
}

TEST_CASE("wire: truncated and oversized buffers rejected") {
    WireMessage m;
    m.opcode = kOpPing;
    m.request_id = 1;
    auto bytes = encode_message(m);
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
        std::span<const std::uint8_t> partial(bytes.data(), cut);
        CHECK_THROWS_AS(decode_message(partial), Error);
    }
    auto extended = bytes;
    extended.push_back(0);
    CHECK_THROWS_AS(decode_message(extended), Error);
}

TEST_CASE("wire: upload body parse validates count") {
    const std::int16_t codes[] = {10, -20, 30};
    auto body = make_upload_wave(9, codes);
    UploadWaveBody b = parse_upload_wave(body);
    CHECK(b.slot == 9);
    CHECK(b.codes == std::vector<std::int16_t>({10, -20, 30}));
    body.pop_back();
    CHECK_THROWS_AS(parse_upload_wave(body), Error);
}
