#include <gtest/gtest.h>

#include <random>

#include "m2vscope/vlc.hpp"
#include "test_support.hpp"

using namespace m2vscope;
using m2vscope::test::error_kind_of;

namespace {

std::vector<std::uint8_t> pack(std::string_view code) {
    BitWriter w;
    w.put_code(code);
    w.put_bits(0, 32);  // padding so peeks never run short
    return w.bytes();
}

}  // namespace

TEST(Vlc, AddressIncrementCodes) {
    const auto& t = vlc_tables().address_increment;
    for (auto [code, value] : {std::pair{"1", 1}, std::pair{"011", 2}, std::pair{"010", 3}}) {
        const auto data = pack(code);
        BitCursor c(data);
        const VlcSymbol s = t.decode(c);
        EXPECT_EQ(s.kind, SymbolKind::Value);
        EXPECT_EQ(s.value, value) << code;
        EXPECT_EQ(c.bits_consumed(), std::string_view(code).size());
    }
}

TEST(Vlc, ZeroRunIsInvalidCode) {
    const auto data = pack("00000000000");
    BitCursor c(data);
    EXPECT_EQ(error_kind_of([&] { vlc_tables().address_increment.decode(c); }), ErrorKind::InvalidCode);
    EXPECT_EQ(c.bits_consumed(), 0u);
}

TEST(Vlc, DcSizeZeroConsumesNoMagnitude) {
    BitWriter w;
    put_dc_differential(w, Component::Luma, 0);
    const std::uint64_t written = w.bit_count();
    w.put_bits(0xFFFF, 16);
    BitCursor c(w.bytes());
    EXPECT_EQ(decode_dc_differential(c, Component::Luma), 0);
    EXPECT_EQ(c.bits_consumed(), written);
}

TEST(Vlc, DcDifferentialSignRule) {
    for (auto [bits, delta] : {std::pair{0b0111, -8}, std::pair{0b1000, 8}}) {
        BitWriter w;
        put_value(w, vlc_tables().dc_size_luma, 4);
        w.put_bits(static_cast<std::uint32_t>(bits), 4);
        w.put_bits(0, 16);
        BitCursor c(w.bytes());
        EXPECT_EQ(decode_dc_differential(c, Component::Luma), delta);
    }
}

TEST(Vlc, DcDifferentialRoundTripsEverySize) {
    for (Component comp : {Component::Luma, Component::Chroma}) {
        for (int s = 1; s <= 11; ++s) {
            const int lo = 1 << (s - 1);
            const int hi = (1 << s) - 1;
            for (int m = lo; m <= hi; ++m) {
                for (int delta : {m, -m}) {
                    BitWriter w;
                    put_dc_differential(w, comp, delta);
                    const std::uint64_t n = w.bit_count();
                    w.put_bits(0, 24);
                    BitCursor c(w.bytes());
                    ASSERT_EQ(decode_dc_differential(c, comp), delta);
                    ASSERT_EQ(c.bits_consumed(), n);
                }
            }
        }
    }
}

TEST(Vlc, FirstCoefficientOfB14) {
    const auto data = pack("10");
    BitCursor c(data);
    const RunLevel rl = decode_run_level(c, CoefficientTable::B14, true);
    EXPECT_FALSE(rl.is_eob);
    EXPECT_EQ(rl.run, 0);
    EXPECT_EQ(rl.level, 1);
    EXPECT_EQ(c.bits_consumed(), 2u);
}

TEST(Vlc, EndOfBlockInB14) {
    const auto data = pack("10");
    BitCursor c(data);
    EXPECT_TRUE(decode_run_level(c, CoefficientTable::B14, false).is_eob);
    EXPECT_EQ(c.bits_consumed(), 2u);
}

TEST(Vlc, EscapeRunLevel) {
    BitWriter w;
    put_run_level(w, CoefficientTable::B14, false, 5, 300);
    EXPECT_EQ(w.bit_count(), 24u);
    w.put_bits(0, 16);
    BitCursor c(w.bytes());
    const RunLevel rl = decode_run_level(c, CoefficientTable::B14, false);
    EXPECT_TRUE(rl.is_escape);
    EXPECT_EQ(rl.run, 5);
    EXPECT_EQ(rl.level, 300);
}

TEST(Vlc, EscapeLevelZeroIsRejected) {
    for (int raw : {0, 0x800}) {
        BitWriter w;
        w.put_code(*vlc_tables().b14.encode({SymbolKind::Escape, 0, 0}));
        w.put_bits(3, 6);
        w.put_bits(static_cast<std::uint32_t>(raw), 12);
        w.put_bits(0, 16);
        BitCursor c(w.bytes());
        EXPECT_EQ(error_kind_of([&] { decode_run_level(c, CoefficientTable::B14, false); }), ErrorKind::EscapeLevelZero);
    }
}

TEST(Vlc, TablesArePrefixFreeAndBounded) {
    for (const VlcTable* t : vlc_tables().all()) {
        EXPECT_NO_THROW(t->audit()) << t->name();
        EXPECT_LE(t->max_code_length(), kMaxVlcLength) << t->name();
        for (const auto& e : t->entries()) EXPECT_LE(e.code.size(), t->max_code_length());
    }
}

TEST(Vlc, EveryEntryRoundTrips) {
    for (const VlcTable* t : vlc_tables().all()) {
        for (const auto& e : t->entries()) {
            const auto code = t->encode(e.symbol);
            ASSERT_TRUE(code.has_value()) << t->name() << " " << e.code;
            const auto data = pack(*code);
            BitCursor c(data);
            const VlcSymbol s = t->decode(c);
            EXPECT_EQ(c.bits_consumed(), code->size()) << t->name() << " " << e.code;
            EXPECT_EQ(s.kind, e.symbol.kind);
            EXPECT_EQ(s.value, e.symbol.value);
            EXPECT_EQ(s.level, e.symbol.level);
        }
    }
}

TEST(Vlc, PrefixAuditRejectsOverlap) {
    EXPECT_EQ(error_kind_of([] { VlcTable::parse("1 increment 1\n10 increment 2\n", "bad"); }), ErrorKind::SpecError);
}

TEST(Vlc, RandomRunLevelsRoundTrip) {
    std::mt19937 rng(11);
    for (CoefficientTable table : {CoefficientTable::B14, CoefficientTable::B15}) {
        for (int i = 0; i < 2000; ++i) {
            const int run = static_cast<int>(rng() % 64);
            int level = static_cast<int>(rng() % 2047) + 1;
            if (rng() & 1) level = -level;
            const bool first = table == CoefficientTable::B14 && (rng() & 1);
            BitWriter w;
            put_run_level(w, table, first, run, level);
            const std::uint64_t n = w.bit_count();
            w.put_bits(0, 24);
            BitCursor c(w.bytes());
            const RunLevel rl = decode_run_level(c, table, first);
            ASSERT_EQ(rl.run, run);
            ASSERT_EQ(rl.level, level);
            ASSERT_EQ(c.bits_consumed(), n);
        }
    }
}
