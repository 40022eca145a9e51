#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace m2vscope;
using namespace m2vscope::fixtures;
using m2vscope::test::error_kind_of;

namespace {

GeneratedFixture gen(std::string_view text) { return generate(parse_fixture_spec(text)); }

}  // namespace

TEST(FixtureParser, ReadsSequenceAndPictures) {
    const FixtureSpec s = parse_fixture_spec(
        "name demo  # trailing comment\n"
        "size 32 48\n"
        "bit_rate 800000\n"
        "intra_matrix flat 20\n"
        "picture I content=flat dc=90\n"
        "repeat 3 picture P content=motion mv=2,-2 residual=1 pad=4000\n");
    EXPECT_EQ(s.name, "demo");
    EXPECT_EQ(s.width, 32);
    EXPECT_EQ(s.height, 48);
    EXPECT_EQ(s.bit_rate, 800000);
    ASSERT_TRUE(s.intra_matrix.has_value());
    EXPECT_EQ((*s.intra_matrix)[17], 20);
    ASSERT_EQ(s.pictures.size(), 4u);
    EXPECT_EQ(s.pictures[0].dc, 90);
    EXPECT_EQ(s.pictures[3].type, CodingType::P);
    EXPECT_EQ(s.pictures[3].mv, (MotionVector{2, -2}));
    EXPECT_EQ(s.pictures[3].pad_to_bits, 4000);
}

TEST(FixtureParser, RejectsBadInput) {
    EXPECT_EQ(error_kind_of([] { parse_fixture_spec("size 16\n"); }), ErrorKind::SpecError);
    EXPECT_EQ(error_kind_of([] { parse_fixture_spec("bit_rate fast\n"); }), ErrorKind::SpecError);
    EXPECT_EQ(error_kind_of([] { parse_fixture_spec("picture X\n"); }), ErrorKind::SpecError);
    EXPECT_EQ(error_kind_of([] { parse_fixture_spec("picture I content=plaid\n"); }), ErrorKind::SpecError);
    EXPECT_EQ(error_kind_of([] { parse_fixture_spec("picture I dc\n"); }), ErrorKind::SpecError);
    EXPECT_EQ(error_kind_of([] { parse_fixture_spec("intra_matrix 1 2 3\n"); }), ErrorKind::SpecError);
    EXPECT_EQ(error_kind_of([] { parse_fixture_spec("repeat 2 size 16 16\n"); }), ErrorKind::SpecError);
}

TEST(FixtureGenerator, RejectsInvalidSpecs) {
    EXPECT_EQ(error_kind_of([] { gen("size 16 16\npicture P\n"); }), ErrorKind::SpecError);
    EXPECT_EQ(error_kind_of([] { gen("size 20 16\npicture I\n"); }), ErrorKind::SpecError);
    EXPECT_EQ(error_kind_of([] { gen("size 16 16\npicture I\npicture B dir=bi\n"); }), ErrorKind::SpecError);
    EXPECT_EQ(error_kind_of([] { gen("size 16 16\n"); }), ErrorKind::SpecError);
    EXPECT_EQ(error_kind_of([] { gen("size 16 16\npicture I pad=64\n"); }), ErrorKind::SpecError);
    EXPECT_EQ(error_kind_of([] { gen("size 16 16\npicture I field_dct=1\n"); }), ErrorKind::SpecError);
}

TEST(FixtureGenerator, FlatIntraIsConstant) {
    const auto fx = gen("size 16 16\npicture I content=flat dc=77\n");
    ASSERT_EQ(fx.display.size(), 1u);
    for (auto v : fx.display[0].y.pixels()) EXPECT_EQ(v, fx.display[0].y.pixels()[0]);
    EXPECT_TRUE(fx.exact);
    EXPECT_EQ(fx.frame_bits.size(), 1u);
    EXPECT_EQ(fx.frame_bits[0], fx.sequence_end_bit - fx.first_picture_bit);
}

TEST(FixtureGenerator, FullSampleShiftCopiesReference) {
    const auto fx = test::fixture("p_full_mv");
    ASSERT_EQ(fx.display.size(), 2u);
    const Plane& i = fx.display[0].y;
    const Plane& p = fx.display[1].y;
    int checked = 0;
    for (int y = 0; y < p.height(); ++y) {
        for (int x = 0; x + 2 < p.width(); ++x) {
            // Macroblocks whose vector would leave the picture fall back to zero.
            if (x >= 32) continue;
            EXPECT_EQ(p.at(x, y), i.at(x + 2, y));
            ++checked;
        }
    }
    EXPECT_GT(checked, 0);
}

TEST(FixtureGenerator, DisplayOrderFollowsTemporalReference) {
    const auto fx = gen("size 16 16\npicture I tr=0\npicture P tr=2 content=motion\npicture B tr=1 content=motion dir=bi\n");
    ASSERT_EQ(fx.display.size(), 3u);
    EXPECT_EQ(fx.display[0].coding_type, CodingType::I);
    EXPECT_EQ(fx.display[1].coding_type, CodingType::B);
    EXPECT_EQ(fx.display[2].coding_type, CodingType::P);
    EXPECT_EQ(fx.display[1].decode_index, 2);
}

TEST(FixtureGenerator, IsDeterministic) {
    const auto a = test::fixture("ipb_reorder");
    const auto b = test::fixture("ipb_reorder");
    EXPECT_EQ(a.bytes, b.bytes);
    EXPECT_EQ(a.frame_bits, b.frame_bits);
}

TEST(FixtureGenerator, PaddingHitsTargetExactly) {
    const auto fx = gen("size 32 32\npicture I content=textured pad=16000\npicture P content=motion mv=2,0 pad=12000\n");
    ASSERT_EQ(fx.frame_bits.size(), 2u);
    EXPECT_EQ(fx.frame_bits[0], 16000);
    EXPECT_EQ(fx.frame_bits[1], 12000);
}

TEST(FixtureGenerator, StreamHasExpectedUnits) {
    const auto fx = test::fixture("i_flat");
    BitCursor c(fx.bytes);
    std::vector<std::uint8_t> codes;
    while (auto code = c.next_start_code()) codes.push_back(*code);
    ASSERT_GE(codes.size(), 6u);
    EXPECT_EQ(codes[0], start_code::sequence_header);
    EXPECT_EQ(codes[1], start_code::extension);
    EXPECT_EQ(codes[2], start_code::group);
    EXPECT_EQ(codes[3], start_code::picture);
    EXPECT_EQ(codes[4], start_code::extension);
    EXPECT_EQ(codes.back(), start_code::sequence_end);
}
