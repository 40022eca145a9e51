// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "../test_support.hpp"
#include "m2vscope/report.hpp"

using namespace m2vscope;
namespace fs = std::filesystem;
namespace oracle = m2vscope::fixtures::oracle;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

const char* const kGolden[] = {"i_flat",         "i_ac_basis",     "i_textured_multi", "p_full_mv",
                               "p_half_mv",      "ipb_reorder",    "field_in_frame",   "field_pictures",
                               "skip",           "vbv_equilibrium", "vbv_oversized",   "scale_25fps"};

const char* const kAllFixtures[] = {"i_flat",         "i_ac_basis",      "i_textured_multi", "p_full_mv",
                                    "p_half_mv",      "ipb_reorder",     "field_in_frame",   "field_pictures",
                                    "skip",           "vbv_equilibrium", "vbv_oversized",    "scale_25fps",
                                    "corrupt_slice"};

Outcome scan_bijection() {
    Outcome o;
    for (const ScanMatrix* scan : {&ScanMatrix::zigzag(), &ScanMatrix::alternate()}) {
        std::set<int> hit;
        for (int p = 0; p < 64; ++p) {
            const RunLevel unit{p, 1};
            const Block m = inverse_scan(std::span(&unit, 1), *scan);
            int nonzero = 0;
            for (int i = 0; i < 64; ++i) {
                if (m[static_cast<std::size_t>(i)]) {
                    ++nonzero;
                    hit.insert(i);
                }
            }
            o.require(nonzero == 1, "unit vector " + std::to_string(p) + " hit " + std::to_string(nonzero) + " cells");
        }
        o.require(hit.size() == 64, "only " + std::to_string(hit.size()) + " cells covered");
    }
    if (o.ok) o.detail = "zigzag and alternate, 64 cells each";
    return o;
}

Outcome dequant_sweep() {
    Outcome o;
    std::int64_t cases = 0, mismatches = 0;
    for (int qf = -60; qf <= 60; ++qf) {
        for (int w : {1, 8, 16, 255}) {
            QuantMatrix m;
            m.fill(static_cast<std::uint8_t>(w));
            for (int qs : {2, 16, 62}) {
                for (bool intra : {false, true}) {
                    for (int precision = 8; precision <= 11; ++precision) {
                        // QF at every position: each block covers 64 evaluations.
                        Block q;
                        q.fill(qf);
                        if (inverse_quantize(q, intra, m, qs, precision) != oracle::dequantize(q, intra, m, qs, precision)) ++mismatches;
                        // Single coefficient: the parity toggle is exercised on both sums.
                        for (std::size_t pos : {std::size_t{0}, std::size_t{1}, std::size_t{63}}) {
                            Block s{};
                            s[pos] = qf;
                            if (inverse_quantize(s, intra, m, qs, precision) != oracle::dequantize(s, intra, m, qs, precision)) ++mismatches;
                        }
                        cases += 64 + 3 * 64;
                    }
                }
            }
        }
    }
    o.require(mismatches == 0, std::to_string(mismatches) + " mismatching blocks");
    o.detail = o.ok ? std::to_string(cases) + " coefficient evaluations, 0 mismatches" : o.detail;
    return o;
}

Outcome idct_accuracy() {
    Outcome o;
    Block dc{};
    dc[0] = 8;
    Block ones;
    ones.fill(1);
    o.require(idct_8x8(dc) == ones, "F(0,0)=8 is not all ones");
    std::mt19937 rng(2024);
    std::uniform_int_distribution<int> full(-2048, 2047);
    std::uniform_int_distribution<int> small(-64, 64);
    int worst = 0;
    const int blocks = 10000;
    for (int i = 0; i < blocks; ++i) {
        Block b;
        for (int& v : b) v = i % 2 ? full(rng) : small(rng);
        const Block got = idct_8x8(b);
        const Block want = oracle::idct(b);
        for (std::size_t k = 0; k < 64; ++k) worst = std::max(worst, std::abs(got[k] - want[k]));
    }
    o.require(worst <= 1, "max deviation " + std::to_string(worst));
    if (o.ok) o.detail = std::to_string(blocks) + " blocks, max deviation " + std::to_string(worst);
    return o;
}

Outcome vlc_round_trip() {
    Outcome o;
    std::size_t entries = 0;
    for (const VlcTable* t : vlc_tables().all()) {
        try {
            t->audit();
        } catch (const Error& e) {
            o.require(false, e.what());
        }
        for (const auto& e : t->entries()) {
            ++entries;
            const auto code = t->encode(e.symbol);
            if (!code) {
                o.require(false, t->name() + ": no encoding for " + e.code);
                continue;
            }
            BitWriter w;
            w.put_code(*code);
            w.put_bits(0, 32);
            BitCursor c(w.bytes());
            const VlcSymbol s = t->decode(c);
            o.require(c.bits_consumed() == code->size() && s.kind == e.symbol.kind && s.value == e.symbol.value &&
                          s.level == e.symbol.level,
                      t->name() + ": " + e.code + " does not round-trip");
        }
    }
    if (o.ok) o.detail = std::to_string(entries) + " entries in " + std::to_string(vlc_tables().all().size()) + " tables";
    return o;
}

Outcome golden_decode() {
    Outcome o;
    int exact = 0;
    for (const char* name : kGolden) {
        const auto fx = test::fixture(name);
        DecodeOptions opts;
        opts.strict = true;
        DecodeResult r;
        try {
            r = decode_stream(fx.bytes, opts);
        } catch (const Error& e) {
            o.require(false, std::string(name) + ": " + e.what());
            continue;
        }
        o.require(r.display.size() == fx.display.size(), std::string(name) + ": display count");
        if (r.display.size() != fx.display.size()) continue;
        const int tolerance = fx.exact ? 0 : 1;
        exact += fx.exact;
        for (std::size_t i = 0; i < r.display.size(); ++i) {
            o.require(r.display[i]->temporal_reference == fx.display[i].temporal_reference &&
                          r.display[i]->decode_index == fx.display[i].decode_index,
                      std::string(name) + ": display order differs at slot " + std::to_string(i));
            const int d = test::max_abs_diff(*r.display[i], fx.display[i]);
            o.require(d >= 0 && d <= tolerance, std::string(name) + ": slot " + std::to_string(i) + " differs by " + std::to_string(d));
        }
    }
    if (o.ok) o.detail = std::to_string(std::size(kGolden)) + " fixtures, " + std::to_string(exact) + " bit-exact";
    return o;
}

Outcome bandwidth_accounting() {
    Outcome o;
    for (const char* name : kAllFixtures) {
        const auto fx = test::fixture(name);
        const DecodeResult r = decode_stream(fx.bytes);
        const BandwidthReport rep = r.report(name);
        std::int64_t sum = 0;
        for (const auto& f : rep.per_frame) sum += f.bits;
        o.require(sum == fx.sequence_end_bit - fx.first_picture_bit, std::string(name) + ": bits do not sum to the stream span");
        o.require(r.sequence_end_bit - r.first_picture_bit == sum, std::string(name) + ": decoder span differs");
        o.require(rep.per_frame.size() == fx.frame_bits.size(), std::string(name) + ": frame count");
        for (std::size_t i = 0; i < std::min(rep.per_frame.size(), fx.frame_bits.size()); ++i) {
            o.require(rep.per_frame[i].bits == fx.frame_bits[i], std::string(name) + ": frame " + std::to_string(i) + " bits");
        }
        o.require(rep.min_bits <= rep.avg_bits() && rep.avg_bits() <= rep.max_bits, std::string(name) + ": min/avg/max order");
        for (std::size_t k = 0; k < rep.per_frame.size(); ++k) {
            o.require(rep.per_frame[k].decode_time == static_cast<double>(k) * 0.04,
                      std::string(name) + ": decode_time of frame " + std::to_string(k));
        }
        if (std::string(name) == "scale_25fps") {
            o.require(rep.per_frame.size() == 25 && rep.per_frame.back().decode_time < 1.0, "25 frames do not fit in one second");
        }
    }
    if (o.ok) o.detail = std::to_string(std::size(kAllFixtures)) + " fixtures, sums exact";
    return o;
}

Outcome vbv_behaviour() {
    Outcome o;
    const DecodeResult eq = decode_stream(test::fixture("vbv_equilibrium").bytes);
    o.require(eq.frames.size() >= 25, "equilibrium fixture has fewer than 25 frames");
    for (const auto& f : eq.frames) {
        o.require(f.bits == 16000, "picture is not bit_rate * frame_period bits");
        o.require(f.vbv_fullness_after == eq.frames.front().vbv_fullness_after && !f.vbv_underflow && !f.vbv_overflow,
                  "fullness moved at frame " + std::to_string(f.frame_index));
    }
    const DecodeResult big = decode_stream(test::fixture("vbv_oversized").bytes);
    const BandwidthReport rep = big.report("oversized");
    o.require(rep.any_underflow, "oversized picture did not raise underflow");
    o.require(big.frames.size() == 4, "oversized fixture did not decode completely");
    if (o.ok) {
        o.detail = "fullness " + std::to_string(eq.frames.front().vbv_fullness_after) + " over " + std::to_string(eq.frames.size()) +
                   " frames; underflow flagged";
    }
    return o;
}

Outcome cli_determinism() {
    Outcome o;
    const auto dir = test::scratch_dir("acceptance_determinism");
    for (const char* name : {"ipb_reorder", "corrupt_slice", "field_pictures"}) {
        const fs::path in = dir / (std::string(name) + ".m2v");
        test::write_bytes(in, test::fixture(name).bytes);
        std::string runs[2][3];
        for (int k = 0; k < 2; ++k) {
            const fs::path out = dir / (std::string(name) + "_" + std::to_string(k));
            const int rc = test::run_cli("--input \"" + in.string() + "\" --report both --report-path \"" + (out.string() + ".csv") +
                                         "\" --frame-dump y4m --frame-dump-path \"" + (out.string() + ".y4m") + "\"");
            o.require(rc == 0, std::string(name) + ": exit " + std::to_string(rc));
            runs[k][0] = test::read_bytes(out.string() + ".csv");
            runs[k][1] = test::read_bytes(out.string() + ".json");
            runs[k][2] = test::read_bytes(out.string() + ".y4m");
        }
        for (int a = 0; a < 3; ++a) {
            o.require(!runs[0][a].empty() && runs[0][a] == runs[1][a], std::string(name) + ": artifact " + std::to_string(a) + " differs");
        }
    }
    if (o.ok) o.detail = "CSV, JSON and Y4M identical across reruns of 3 streams";
    return o;
}

Outcome error_resilience() {
    Outcome o;
    const auto fx = test::fixture("corrupt_slice");
    const DecodeResult r = decode_stream(fx.bytes);
    o.require(r.counters.slice_errors == 1, "expected one slice error, got " + std::to_string(r.counters.slice_errors));
    o.require(r.counters.concealed_macroblocks == fx.corrupted_macroblocks,
              "concealed " + std::to_string(r.counters.concealed_macroblocks) + " macroblocks, expected " +
                  std::to_string(fx.corrupted_macroblocks));
    o.require(r.counters.concealment_selections == fx.corrupted_macroblocks, "boundary-variation selection not used for every macroblock");
    std::int64_t sum = 0;
    for (const auto& f : r.frames) sum += f.bits;
    o.require(sum == fx.sequence_end_bit - fx.first_picture_bit, "bit accounting broken by the corrupt slice");
    // Rows outside the damaged slice still match the generator.
    if (r.display.size() == fx.display.size()) {
        const Plane& got = r.display.back()->y;
        const Plane& want = fx.display.back().y;
        for (int y = 0; y < got.height(); ++y) {
            if (y / 16 == 1) continue;
            for (int x = 0; x < got.width(); ++x) {
                o.require(std::abs(got.at(x, y) - want.at(x, y)) <= 1, "undamaged row " + std::to_string(y) + " differs");
            }
        }
    } else {
        o.require(false, "display count");
    }
    const auto dir = test::scratch_dir("acceptance_resilience");
    const fs::path in = dir / "corrupt.m2v";
    test::write_bytes(in, fx.bytes);
    const int rc = test::run_cli("--input \"" + in.string() + "\" --strict");
    o.require(rc == 2, "strict mode exited " + std::to_string(rc));
    o.require(!fs::exists(dir / "corrupt.csv"), "strict failure left a report behind");
    if (o.ok) o.detail = std::to_string(r.counters.concealed_macroblocks) + " macroblocks concealed, strict exit 2";
    return o;
}

Outcome scale_sanity() {
    Outcome o;
    const BandwidthReport rep = decode_stream(test::fixture("scale_25fps").bytes).report("scale");
    const double avg = rep.avg_bits();
    o.require(rep.frames() == 25, "expected 25 frames");
    o.require(avg >= 12200.0 && avg <= 17907.0, "average " + std::to_string(avg) + " outside [12200, 17907]");
    if (o.ok) {
        o.detail = "min " + std::to_string(rep.min_bits) + ", avg " + std::to_string(rep.avg_bits_rounded) + ", max " +
                   std::to_string(rep.max_bits);
    }
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> check;
    };
    const Criterion criteria[] = {
        {1, "scan bijection", 1.0, scan_bijection},
        {2, "inverse quantization oracle", 10.0, dequant_sweep},
        {3, "IDCT accuracy", 30.0, idct_accuracy},
        {4, "VLC round trip", 5.0, vlc_round_trip},
        {5, "golden decode", 30.0, golden_decode},
        {6, "bandwidth accounting", 60.0, bandwidth_accounting},
        {7, "VBV equilibrium and underflow", 60.0, vbv_behaviour},
        {8, "CLI determinism", 60.0, cli_determinism},
        {9, "error resilience", 60.0, error_resilience},
        {10, "scale sanity", 60.0, scale_sanity},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_s) {
            o.ok = false;
            o.detail = "took " + std::to_string(secs) + " s";
        }
        failures += !o.ok;
        std::printf("%s %2d %-30s %7.3fs  %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
    return failures == 0 ? 0 : 1;
}
