#include <gtest/gtest.h>

#include <random>

#include "m2vscope/motion.hpp"
#include "test_support.hpp"

using namespace m2vscope;
using m2vscope::test::error_kind_of;

namespace {

int decode_component(int f_code, int predictor, int target) {
    BitWriter w;
    put_motion_component(w, f_code, predictor, target);
    w.put_bits(0, 24);
    BitCursor c(w.bytes());
    return decode_motion_component(c, f_code, predictor);
}

FrameHandle ramp_frame(int w, int h, int offset = 0) {
    auto f = std::make_shared<FramePicture>(FramePicture::blank(w, h));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) f->y.at(x, y) = static_cast<std::uint8_t>((x * 3 + y * 7 + offset) & 0xFF);
    for (int y = 0; y < h / 2; ++y)
        for (int x = 0; x < w / 2; ++x) {
            f->cb.at(x, y) = static_cast<std::uint8_t>(x + y + offset);
            f->cr.at(x, y) = static_cast<std::uint8_t>(200 - x - offset);
        }
    return f;
}

FrameHandle flat_frame(int w, int h, std::uint8_t v) { return std::make_shared<FramePicture>(FramePicture::blank(w, h, v)); }

PredictionRequest frame_request(const FramePicture& fwd, MotionVector mv, int mb_x = 0, int mb_y = 0) {
    PredictionRequest req;
    req.forward = true;
    req.vectors[0][0] = mv;
    req.refs[0][0] = views_of(fwd, FieldSelect::Whole);
    req.mb_x = mb_x;
    req.mb_y = mb_y;
    return req;
}

}  // namespace

TEST(Motion, ZeroCodeKeepsPredictor) {
    BitWriter w;
    w.put_code(*vlc_tables().motion_code.encode({SymbolKind::Value, 0, 0}));
    w.put_bits(0, 24);
    BitCursor c(w.bytes());
    EXPECT_EQ(decode_motion_component(c, 3, -7), -7);
    EXPECT_EQ(c.bits_consumed(), 1u);
}

TEST(Motion, FCodeOneHasNoResidual) {
    BitWriter w;
    w.put_code(*vlc_tables().motion_code.encode({SymbolKind::Value, 3, 0}));
    const auto n = w.bit_count();
    w.put_bits(0, 24);
    BitCursor c(w.bytes());
    EXPECT_EQ(decode_motion_component(c, 1, 0), 3);
    EXPECT_EQ(c.bits_consumed(), n);
}

TEST(Motion, RangeWrap) {
    EXPECT_EQ(apply_motion_delta(15, 4, 2), 19);
    EXPECT_EQ(apply_motion_delta(30, 4, 2), -30);
    EXPECT_EQ(apply_motion_delta(-30, -4, 2), 30);
    EXPECT_EQ(motion_range(2).low, -32);
    EXPECT_EQ(motion_range(2).high, 31);
}

TEST(Motion, RoundTripEveryTarget) {
    std::mt19937 rng(29);
    for (int f = 1; f <= 9; ++f) {
        const MotionRange r = motion_range(f);
        for (int i = 0; i < 300; ++i) {
            const int pred = r.low + static_cast<int>(rng() % static_cast<unsigned>(r.span));
            const int target = r.low + static_cast<int>(rng() % static_cast<unsigned>(r.span));
            ASSERT_EQ(decode_component(f, pred, target), target) << "f_code " << f;
        }
    }
}

TEST(Motion, DecodedComponentStaysInRange) {
    for (int f = 1; f <= 4; ++f) {
        const MotionRange r = motion_range(f);
        for (int code = -16; code <= 16; ++code) {
            const int max_residual = code == 0 ? 0 : (1 << (f - 1)) - 1;
            for (int residual = 0; residual <= max_residual; ++residual) {
                for (int pred = r.low; pred <= r.high; pred += 7) {
                    BitWriter w;
                    w.put_code(*vlc_tables().motion_code.encode({SymbolKind::Value, code, 0}));
                    if (f > 1 && code != 0) w.put_bits(static_cast<std::uint32_t>(residual), static_cast<unsigned>(f - 1));
                    w.put_bits(0, 24);
                    BitCursor c(w.bytes());
                    const int v = decode_motion_component(c, f, pred);
                    ASSERT_GE(v, r.low);
                    ASSERT_LE(v, r.high);
                }
            }
        }
    }
}

TEST(Motion, InvalidFCode) { EXPECT_THROW(motion_range(15), Error); }

TEST(Predict, ZeroVectorCopiesReference) {
    const auto ref = ramp_frame(32, 32);
    const auto p = predict(frame_request(*ref, {0, 0}, 1, 1));
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) ASSERT_EQ(p.y[static_cast<std::size_t>(y * 16 + x)], ref->y.at(16 + x, 16 + y));
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) ASSERT_EQ(p.cb[static_cast<std::size_t>(y * 8 + x)], ref->cb.at(8 + x, 8 + y));
}

TEST(Predict, HalfSampleRoundsUp) {
    auto ref = flat_frame(32, 16, 0);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 32; ++x) ref->y.at(x, y) = static_cast<std::uint8_t>(x % 2 ? 11 : 10);
    const auto p = predict(frame_request(*ref, {1, 0}));
    EXPECT_EQ(p.y[0], 11);
    EXPECT_EQ(p.y[1], 11);
}

TEST(Predict, BidirectionalAverageRoundsUpAndIsSymmetric) {
    const auto a = flat_frame(16, 16, 100);
    const auto b = flat_frame(16, 16, 101);
    PredictionRequest req = frame_request(*a, {0, 0});
    req.backward = true;
    req.refs[1][0] = views_of(*b, FieldSelect::Whole);
    const auto p = predict(req);
    EXPECT_EQ(p.y[0], 101);
    EXPECT_EQ(p.cr[63], 101);

    const auto x = ramp_frame(32, 32, 5);
    const auto y = ramp_frame(32, 32, 90);
    PredictionRequest fwd = frame_request(*x, {3, 1});
    fwd.backward = true;
    fwd.vectors[1][0] = {2, 5};
    fwd.refs[1][0] = views_of(*y, FieldSelect::Whole);
    PredictionRequest swapped = fwd;
    std::swap(swapped.vectors[0][0], swapped.vectors[1][0]);
    std::swap(swapped.refs[0][0], swapped.refs[1][0]);
    const auto p1 = predict(fwd);
    const auto p2 = predict(swapped);
    EXPECT_EQ(p1.y, p2.y);
    EXPECT_EQ(p1.cb, p2.cb);
    EXPECT_EQ(p1.cr, p2.cr);
}

TEST(Predict, ChromaVectorTruncatesTowardZero) {
    auto ref = flat_frame(32, 32, 0);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) ref->cb.at(x, y) = static_cast<std::uint8_t>(x * 10);
    // Luma -3 half samples: chroma -1 (half sample) rather than -2.
    const auto p = predict(frame_request(*ref, {-3, 0}, 1, 0));
    EXPECT_EQ(p.cb[0], (70 + 80 + 1) / 2);
}

TEST(Predict, OutOfBoundsIsMalformed) {
    const auto ref = flat_frame(16, 16, 50);
    EXPECT_EQ(error_kind_of([&] { predict(frame_request(*ref, {-2, 0})); }), ErrorKind::MalformedStream);
    EXPECT_EQ(error_kind_of([&] { predict(frame_request(*ref, {1, 0})); }), ErrorKind::MalformedStream);
}

TEST(Predict, FieldInFrameUsesSelectedFields) {
    auto ref = flat_frame(16, 32, 0);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 16; ++x) ref->y.at(x, y) = static_cast<std::uint8_t>(y % 2 ? 200 : 20);
    PredictionRequest req;
    req.mode = PredictionMode::FieldInFrame;
    req.forward = true;
    req.refs[0][0] = views_of(*ref, FieldSelect::Bottom);  // top lines from the bottom field
    req.refs[0][1] = views_of(*ref, FieldSelect::Top);
    const auto p = predict(req);
    EXPECT_EQ(p.y[0], 200);
    EXPECT_EQ(p.y[16], 20);
    EXPECT_EQ(p.y[32], 200);
}

TEST(SelectReference, Cases) {
    ReferencePair refs;
    refs.forward = flat_frame(16, 16, 1);
    refs.backward = flat_frame(16, 16, 2);
    PictureInfo p;
    p.coding_type = CodingType::P;
    EXPECT_EQ(select_reference(p, Direction::Forward, false, refs), refs.backward.get());

    PictureInfo b;
    b.coding_type = CodingType::B;
    EXPECT_EQ(select_reference(b, Direction::Forward, false, refs), refs.forward.get());
    EXPECT_EQ(select_reference(b, Direction::Backward, false, refs), refs.backward.get());

    const auto current = flat_frame(16, 16, 3);
    PictureInfo second = p;
    second.structure = PictureStructure::BottomField;
    const SecondFieldState sf{true, current.get()};
    EXPECT_EQ(select_reference(second, Direction::Forward, false, refs, sf), current.get());
    EXPECT_EQ(select_reference(second, Direction::Forward, true, refs, sf), refs.backward.get());

    EXPECT_EQ(error_kind_of([&] { select_reference(p, Direction::Forward, false, ReferencePair{}); }), ErrorKind::MissingReference);
}

TEST(Conceal, SingleCandidate) {
    const MotionVector only{4, 2};
    BoundaryEdges edges;
    edges.above = std::vector<int>(4, 0);
    const auto choice = conceal_select_mv(
        std::span(&only, 1), [](MotionVector) { return std::optional(std::vector<std::uint8_t>(16, 255)); }, edges, 4);
    EXPECT_EQ(choice.vector, only);
}

TEST(Conceal, TieGoesToFirst) {
    const std::vector<MotionVector> cands{{0, 0}, {2, 0}};
    const auto choice = conceal_select_mv(
        cands, [](MotionVector) { return std::optional(std::vector<std::uint8_t>(16, 9)); }, BoundaryEdges{}, 4);
    EXPECT_EQ(choice.index, 0u);
}

TEST(Conceal, HandBuiltEdges) {
    // Candidate A reproduces the neighbour edge exactly, B is off by 2 on the
    // four top samples: V = 4 * 2^2 = 16.
    const std::vector<MotionVector> cands{{0, 0}, {2, 0}};
    BoundaryEdges edges;
    edges.above = std::vector<int>{10, 10, 10, 10};
    auto predict_block = [](MotionVector mv) { return std::optional(std::vector<std::uint8_t>(16, mv.horizontal == 0 ? 10 : 12)); };
    const auto choice = conceal_select_mv(cands, predict_block, edges, 4);
    EXPECT_EQ(choice.index, 0u);
    EXPECT_EQ(choice.variation, 0);
    std::vector<std::uint8_t> b(16, 12);
    EXPECT_EQ(total_variation(b, 4, edges), 16);

    const std::vector<MotionVector> reversed{{2, 0}, {0, 0}};
    EXPECT_EQ(conceal_select_mv(reversed, predict_block, edges, 4).vector, (MotionVector{0, 0}));
}

TEST(Conceal, AllThreeEdges) {
    BoundaryEdges edges;
    edges.above = std::vector<int>{0, 0};
    edges.left = std::vector<int>{0, 0};
    edges.below = std::vector<int>{0, 0};
    const std::vector<std::uint8_t> block{1, 2, 3, 4};  // rows {1,2},{3,4}
    // top: 1+4, left: 1+9, bottom: 9+16
    EXPECT_EQ(total_variation(block, 2, edges), 5 + 10 + 25);
}

TEST(Conceal, ArgminStableUnderWorseAppends) {
    std::mt19937 rng(31);
    BoundaryEdges edges;
    edges.above = std::vector<int>(8, 128);
    edges.left = std::vector<int>(8, 128);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<MotionVector> cands;
        std::vector<std::vector<std::uint8_t>> blocks;
        for (int i = 0; i < 3; ++i) {
            cands.push_back({i, trial});
            blocks.emplace_back(64, static_cast<std::uint8_t>(rng() % 256));
        }
        auto fn = [&](MotionVector mv) { return std::optional(blocks[static_cast<std::size_t>(mv.horizontal)]); };
        const auto best = conceal_select_mv(cands, fn, edges, 8);
        cands.push_back({3, trial});
        const int far = std::abs(static_cast<int>(blocks[best.index][0]) - 128) > 100 ? 128 : (blocks[best.index][0] < 128 ? 255 : 0);
        blocks.emplace_back(64, static_cast<std::uint8_t>(far));
        const auto again = conceal_select_mv(cands, fn, edges, 8);
        if (total_variation(blocks.back(), 8, edges) > best.variation) EXPECT_EQ(again.index, best.index);
    }
}

TEST(Conceal, NoUsableCandidate) {
    const std::vector<MotionVector> cands{{0, 0}};
    EXPECT_EQ(error_kind_of([&] {
                  conceal_select_mv(cands, [](MotionVector) { return std::optional<std::vector<std::uint8_t>>(); }, BoundaryEdges{}, 4);
              }),
              ErrorKind::NoCandidates);
}
