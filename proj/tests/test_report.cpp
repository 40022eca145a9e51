#include <gtest/gtest.h>

#include "m2vscope/report.hpp"
#include "test_support.hpp"

using namespace m2vscope;
using m2vscope::test::error_kind_of;

namespace {

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < s.size()) {
        const auto nl = s.find('\n', start);
        out.push_back(s.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

DecodeResult decoded(const std::string& name) { return decode_stream(test::fixture(name).bytes); }

}  // namespace

TEST(Report, CsvHeaderAndRows) {
    const DecodeResult r = decoded("vbv_equilibrium");
    const std::string csv = report_csv(r.report("eq"));
    const auto rows = lines(csv);
    ASSERT_EQ(rows.size(), 26u);
    EXPECT_EQ(rows[0], kCsvHeader);
    EXPECT_EQ(rows[1].substr(0, 7), "0,I0,I,");
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    EXPECT_EQ(csv.back(), '\n');
}

TEST(Report, CsvSingleton) {
    const std::string csv = report_csv(decoded("i_flat").report("x"));
    EXPECT_EQ(lines(csv).size(), 2u);
}

TEST(Report, CsvDecodeTimes) {
    const auto rows = lines(report_csv(decoded("scale_25fps").report("s")));
    ASSERT_EQ(rows.size(), 26u);
    EXPECT_NE(rows[2].find(",0.040000,"), std::string::npos);
    EXPECT_NE(rows[25].find(",0.960000,"), std::string::npos);
}

TEST(Report, JsonMirrorsCsv) {
    const BandwidthReport rep = decoded("ipb_reorder").report("ipb");
    const auto j = nlohmann::json::parse(report_json(rep));
    EXPECT_EQ(j["stream"], "ipb");
    EXPECT_EQ(j["frames"].size(), 4u);
    const auto& s = j["summary"];
    EXPECT_EQ(s["min_bits"].get<std::int64_t>(), rep.min_bits);
    EXPECT_EQ(s["max_bits"].get<std::int64_t>(), rep.max_bits);
    EXPECT_EQ(s["avg_bits_rational"]["numerator"].get<std::int64_t>(), rep.total_bits);
    EXPECT_EQ(s["avg_bits_rational"]["denominator"].get<std::int64_t>(), 4);
    EXPECT_EQ(s["avg_bits_rounded"].get<std::int64_t>(), rep.avg_bits_rounded);
    EXPECT_EQ(s["bit_rate"].get<std::int64_t>(), 400000);
    EXPECT_DOUBLE_EQ(s["frame_period_s"].get<double>(), 0.04);
    EXPECT_TRUE(s["flags"].contains("vbv_underflow"));
    const auto rows = lines(report_csv(rep));
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& f = j["frames"][i];
        const std::string prefix = std::to_string(i) + "," + f["frame_name"].get<std::string>() + "," +
                                   f["coding_type"].get<std::string>() + "," + std::to_string(f["bits"].get<std::int64_t>()) + ",";
        EXPECT_EQ(rows[i + 1].substr(0, prefix.size()), prefix);
    }
}

TEST(Report, Y4mHeaderAndSize) {
    const DecodeResult r = decoded("p_full_mv");
    const std::string y4m = y4m_stream(r.display, r.sequence.frame_rate(), r.sequence.progressive_sequence);
    EXPECT_EQ(y4m.substr(0, y4m.find('\n')), "YUV4MPEG2 W48 H48 F25:1 Ip A0:0 C420jpeg");
    const std::size_t frame_bytes = 6 + 48 * 48 + 2 * 24 * 24;
    EXPECT_EQ(y4m.size(), y4m.find('\n') + 1 + 2 * frame_bytes);
}

TEST(Report, Y4mOrderFollowsDisplay) {
    const DecodeResult r = decoded("ipb_reorder");
    const std::string y4m = y4m_stream(r.display, r.sequence.frame_rate(), true);
    const std::size_t header = y4m.find('\n') + 1;
    const std::size_t frame_bytes = 6 + 48 * 32 + 2 * 24 * 16;
    for (std::size_t i = 0; i < r.display.size(); ++i) {
        const std::string luma = y4m.substr(header + i * frame_bytes + 6, 48 * 32);
        EXPECT_EQ(luma, std::string(reinterpret_cast<const char*>(r.display[i]->y.pixels().data()), 48 * 32));
    }
}

TEST(Report, PgmFormat) {
    const DecodeResult r = decoded("scale_25fps");
    const std::string pgm = pgm_image(*r.display[0]);
    EXPECT_EQ(pgm.substr(0, 13), "P5\n64 48\n255\n");
    EXPECT_EQ(pgm.size(), 13u + 64 * 48);
    EXPECT_EQ(pgm_filename(0), "frame_000.pgm");
    EXPECT_EQ(pgm_filename(12), "frame_012.pgm");
}

TEST(Report, GeometryMismatch) {
    auto a = std::make_shared<FramePicture>(FramePicture::blank(16, 16));
    auto b = std::make_shared<FramePicture>(FramePicture::blank(32, 16));
    const std::vector<FrameHandle> frames{a, b};
    EXPECT_EQ(error_kind_of([&] { y4m_stream(frames, FrameRate{25, 1}, true); }), ErrorKind::GeometryMismatch);
}

TEST(Report, Deterministic) {
    const auto a = decoded("corrupt_slice").report("c");
    const auto b = decoded("corrupt_slice").report("c");
    EXPECT_EQ(report_csv(a), report_csv(b));
    EXPECT_EQ(report_json(a), report_json(b));
}

TEST(Report, AtomicWriteLeavesNoTemp) {
    const auto dir = test::scratch_dir("atomic");
    write_file_atomic(dir / "out.csv", "a,b\n");
    EXPECT_EQ(test::read_bytes(dir / "out.csv"), "a,b\n");
    EXPECT_FALSE(std::filesystem::exists(dir / "out.csv.tmp"));
    EXPECT_EQ(error_kind_of([&] { write_file_atomic(dir / "missing" / "out.csv", "x"); }), ErrorKind::Io);
}
