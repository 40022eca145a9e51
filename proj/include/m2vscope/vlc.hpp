#pragma once

// Table-driven variable-length decoding. Tables are loaded from the text in
// tables.hpp, audited for prefix-freeness, and compiled into a two-level
// peek-and-index structure.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "m2vscope/bitio.hpp"
#include "m2vscope/error.hpp"
#include "m2vscope/tables.hpp"

namespace m2vscope {

enum class SymbolKind : std::uint8_t { Value, Escape, Eob, RunLevel, MbType };

namespace mb_flag {
inline constexpr int quant = 1;
inline constexpr int forward = 2;
inline constexpr int backward = 4;
inline constexpr int pattern = 8;
inline constexpr int intra = 16;
}  // namespace mb_flag

struct VlcSymbol {
    SymbolKind kind = SymbolKind::Value;
    int value = 0;  // increment, size, cbp, motion code, run, or mb flags
    int level = 0;  // RunLevel only

    friend bool operator==(const VlcSymbol&, const VlcSymbol&) = default;
};

struct VlcEntry {
    std::string code;
    VlcSymbol symbol;
};

inline constexpr unsigned kMaxVlcLength = 17;

class VlcTable {
public:
    /// Parses the `<bitstring> <symbol-name> <args...>` format. Entries tagged
    /// `first` or `notfirst` are kept only when `variant` matches the tag.
    static VlcTable parse(std::string_view text, std::string name, std::string_view variant = {}) {
        VlcTable table;
        table.name_ = std::move(name);
        std::istringstream lines{std::string(text)};
        std::string line;
        int line_no = 0;
        while (std::getline(lines, line)) {
            ++line_no;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            std::istringstream fields(line);
            std::string code, symbol_name;
            if (!(fields >> code)) continue;
            if (!(fields >> symbol_name)) bad_line(table.name_, line_no, "missing symbol");
            std::vector<std::string> args;
            for (std::string a; fields >> a;) args.push_back(a);

            std::string tag;
            if (!args.empty() && (args.back() == "first" || args.back() == "notfirst")) {
                tag = args.back();
                args.pop_back();
            }
            if (!tag.empty() && tag != variant) continue;

            VlcSymbol sym = make_symbol(table.name_, line_no, symbol_name, args);
            const bool signed_code = !code.empty() && code.back() == 's';
            if (signed_code) code.pop_back();
            if (code.empty() || code.find_first_not_of("01") != std::string::npos) {
                bad_line(table.name_, line_no, "bad bitstring");
            }
            if (signed_code) {
                VlcSymbol neg = sym;
                if (sym.kind == SymbolKind::RunLevel) neg.level = -sym.level;
                else neg.value = -sym.value;
                table.entries_.push_back({code + "0", sym});
                table.entries_.push_back({code + "1", neg});
            } else {
                table.entries_.push_back({code, sym});
            }
        }
        table.audit();
        table.build();
        return table;
    }

    const std::string& name() const noexcept { return name_; }
    const std::vector<VlcEntry>& entries() const noexcept { return entries_; }
    unsigned max_code_length() const noexcept { return max_len_; }

    /// Throws SpecError unless every code is at most 17 bits and no code is a
    /// prefix of another.
    void audit() const {
        if (entries_.empty()) fail(ErrorKind::SpecError, name_ + ": empty table");
        std::vector<std::string> codes;
        for (const auto& e : entries_) {
            if (e.code.size() > kMaxVlcLength) {
                fail(ErrorKind::SpecError, name_ + ": code " + e.code + " longer than 17 bits");
            }
            codes.push_back(e.code);
        }
        std::sort(codes.begin(), codes.end());
        // In sorted order a prefix sorts immediately before some extension of it.
        for (std::size_t i = 0; i + 1 < codes.size(); ++i) {
            if (codes[i + 1].compare(0, codes[i].size(), codes[i]) == 0) {
                fail(ErrorKind::SpecError, name_ + ": code " + codes[i] + " is a prefix of " + codes[i + 1]);
            }
        }
    }

    VlcSymbol decode(BitCursor& cursor) const {
        const auto avail = static_cast<unsigned>(std::min<std::uint64_t>(cursor.bits_left(), max_len_));
        const std::uint32_t window = avail == 0 ? 0 : (cursor.peek_bits(avail) << (max_len_ - avail));
        const std::uint32_t top = window >> (max_len_ - root_bits_);
        Slot slot = root_[top];
        if (slot.sub >= 0) {
            const unsigned sub_bits = max_len_ - root_bits_;
            const std::uint32_t low = window & ((1u << sub_bits) - 1);
            slot = subtables_[static_cast<std::size_t>(slot.sub)][low];
        }
        if (slot.entry < 0 || slot.length > avail) {
            fail(ErrorKind::InvalidCode, name_ + ": no code matches at bit " + std::to_string(cursor.bits_consumed()));
        }
        cursor.skip_bits(slot.length);
        return entries_[static_cast<std::size_t>(slot.entry)].symbol;
    }

    std::optional<std::string_view> encode(const VlcSymbol& symbol) const {
        auto it = encoder_.find(key(symbol));
        if (it == encoder_.end()) return std::nullopt;
        return std::string_view(it->second);
    }

private:
    struct Slot {
        std::int32_t entry = -1;
        std::int32_t sub = -1;
        std::uint8_t length = 0;
    };

    [[noreturn]] static void bad_line(const std::string& name, int line_no, const std::string& why) {
        fail(ErrorKind::SpecError, name + ":" + std::to_string(line_no) + ": " + why);
    }

    static VlcSymbol make_symbol(const std::string& name, int line_no, const std::string& kind,
                                 const std::vector<std::string>& args) {
        auto number = [&](std::size_t i) {
            if (i >= args.size()) bad_line(name, line_no, "missing argument");
            return std::stoi(args[i]);
        };
        if (kind == "escape") return {SymbolKind::Escape, 0, 0};
        if (kind == "eob") return {SymbolKind::Eob, 0, 0};
        if (kind == "runlevel") return {SymbolKind::RunLevel, number(0), number(1)};
        if (kind == "mbtype") {
            int flags = 0;
            for (const auto& a : args) {
                if (a == "quant") flags |= mb_flag::quant;
                else if (a == "forward") flags |= mb_flag::forward;
                else if (a == "backward") flags |= mb_flag::backward;
                else if (a == "pattern") flags |= mb_flag::pattern;
                else if (a == "intra") flags |= mb_flag::intra;
                else bad_line(name, line_no, "unknown macroblock flag " + a);
            }
            return {SymbolKind::MbType, flags, 0};
        }
        if (kind == "increment" || kind == "cbp" || kind == "motion" || kind == "size") {
            return {SymbolKind::Value, number(0), 0};
        }
        bad_line(name, line_no, "unknown symbol " + kind);
    }

    static std::tuple<int, int, int> key(const VlcSymbol& s) {
        return {static_cast<int>(s.kind), s.value, s.level};
    }

    void build() {
        max_len_ = 0;
        for (const auto& e : entries_) max_len_ = std::max<unsigned>(max_len_, static_cast<unsigned>(e.code.size()));
        root_bits_ = std::min(max_len_, 9u);
        root_.assign(std::size_t{1} << root_bits_, Slot{});
        const unsigned sub_bits = max_len_ - root_bits_;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const std::string& code = entries_[i].code;
            encoder_.emplace(key(entries_[i].symbol), code);
            std::uint32_t bits = 0;
            for (char c : code) bits = (bits << 1) | static_cast<std::uint32_t>(c == '1');
            const auto len = static_cast<unsigned>(code.size());
            Slot leaf{static_cast<std::int32_t>(i), -1, static_cast<std::uint8_t>(len)};
            if (len <= root_bits_) {
                const std::uint32_t first = bits << (root_bits_ - len);
                const std::uint32_t count = 1u << (root_bits_ - len);
                for (std::uint32_t k = 0; k < count; ++k) root_[first + k] = leaf;
            } else {
                const std::uint32_t prefix = bits >> (len - root_bits_);
                Slot& parent = root_[prefix];
                if (parent.sub < 0) {
                    parent.sub = static_cast<std::int32_t>(subtables_.size());
                    subtables_.emplace_back(std::size_t{1} << sub_bits, Slot{});
                }
                auto& sub = subtables_[static_cast<std::size_t>(parent.sub)];
                const unsigned rest = len - root_bits_;
                const std::uint32_t low = bits & ((1u << rest) - 1);
                const std::uint32_t first = low << (sub_bits - rest);
                const std::uint32_t count = 1u << (sub_bits - rest);
                for (std::uint32_t k = 0; k < count; ++k) sub[first + k] = leaf;
            }
        }
    }

    std::string name_;
    std::vector<VlcEntry> entries_;
    unsigned max_len_ = 0;
    unsigned root_bits_ = 0;
    std::vector<Slot> root_;
    std::vector<std::vector<Slot>> subtables_;
    std::map<std::tuple<int, int, int>, std::string> encoder_;
};

/// The full set of tables, loaded and audited once.
struct VlcTables {
    VlcTable address_increment;
    VlcTable mb_type_i;
    VlcTable mb_type_p;
    VlcTable mb_type_b;
    VlcTable coded_block_pattern;
    VlcTable motion_code;
    VlcTable dc_size_luma;
    VlcTable dc_size_chroma;
    VlcTable b14_first;
    VlcTable b14;
    VlcTable b15;

    std::vector<const VlcTable*> all() const {
        return {&address_increment, &mb_type_i, &mb_type_p, &mb_type_b, &coded_block_pattern, &motion_code,
                &dc_size_luma, &dc_size_chroma, &b14_first, &b14, &b15};
    }
};

inline const VlcTables& vlc_tables() {
    static const VlcTables t{
        VlcTable::parse(tables::macroblock_address_increment, "macroblock_address_increment"),
        VlcTable::parse(tables::macroblock_type_i, "macroblock_type_i"),
        VlcTable::parse(tables::macroblock_type_p, "macroblock_type_p"),
        VlcTable::parse(tables::macroblock_type_b, "macroblock_type_b"),
        VlcTable::parse(tables::coded_block_pattern, "coded_block_pattern"),
        VlcTable::parse(tables::motion_code, "motion_code"),
        VlcTable::parse(tables::dct_dc_size_luminance, "dct_dc_size_luminance"),
        VlcTable::parse(tables::dct_dc_size_chrominance, "dct_dc_size_chrominance"),
        VlcTable::parse(tables::dct_coefficients_b14, "dct_coefficients_b14_first", "first"),
        VlcTable::parse(tables::dct_coefficients_b14, "dct_coefficients_b14", "notfirst"),
        VlcTable::parse(tables::dct_coefficients_b15, "dct_coefficients_b15"),
    };
    return t;
}

inline VlcSymbol decode_symbol(BitCursor& cursor, const VlcTable& table) { return table.decode(cursor); }

enum class Component { Luma, Chroma };

/// dct_dc_size followed by that many differential bits. A leading 0 in the
/// differential marks a negative delta.
inline int decode_dc_differential(BitCursor& cursor, Component component) {
    const auto& t = vlc_tables();
    const int size = (component == Component::Luma ? t.dc_size_luma : t.dc_size_chroma).decode(cursor).value;
    if (size == 0) return 0;
    const auto bits = static_cast<int>(cursor.read_bits(static_cast<unsigned>(size)));
    const int half = 1 << (size - 1);
    return bits >= half ? bits : bits - ((1 << size) - 1);
}

struct RunLevel {
    int run = 0;
    int level = 0;
    bool is_eob = false;
    bool is_escape = false;

    friend bool operator==(const RunLevel&, const RunLevel&) = default;
};

enum class CoefficientTable { B14, B15 };

inline RunLevel decode_run_level(BitCursor& cursor, CoefficientTable table_select, bool first_coefficient) {
    const auto& t = vlc_tables();
    const VlcTable& table = table_select == CoefficientTable::B15 ? t.b15
                            : first_coefficient                  ? t.b14_first
                                                                 : t.b14;
    const VlcSymbol sym = table.decode(cursor);
    switch (sym.kind) {
        case SymbolKind::Eob: return {0, 0, true, false};
        case SymbolKind::RunLevel: return {sym.value, sym.level, false, false};
        case SymbolKind::Escape: {
            const int run = static_cast<int>(cursor.read_bits(6));
            int level = static_cast<int>(cursor.read_bits(12));
            if (level & 0x800) level -= 4096;
            if (level == 0 || level == -2048) {
                fail(ErrorKind::EscapeLevelZero, "escape level " + std::to_string(level));
            }
            return {run, level, false, true};
        }
        default: fail(ErrorKind::InvalidCode, table.name() + ": unexpected symbol");
    }
}

// Encoding side, used by the fixture generator.

inline void put_symbol(BitWriter& w, const VlcTable& table, const VlcSymbol& symbol) {
    auto code = table.encode(symbol);
    if (!code) fail(ErrorKind::SpecError, table.name() + ": symbol has no code");
    w.put_code(*code);
}

inline void put_value(BitWriter& w, const VlcTable& table, int value) {
    put_symbol(w, table, {SymbolKind::Value, value, 0});
}

inline int dc_size_of(int delta) {
    int magnitude = delta < 0 ? -delta : delta;
    int size = 0;
    while (magnitude) {
        ++size;
        magnitude >>= 1;
    }
    return size;
}

inline void put_dc_differential(BitWriter& w, Component component, int delta) {
    const auto& t = vlc_tables();
    const int size = dc_size_of(delta);
    if (size > 11) fail(ErrorKind::SpecError, "dc differential out of range");
    put_value(w, component == Component::Luma ? t.dc_size_luma : t.dc_size_chroma, size);
    if (size == 0) return;
    const int bits = delta > 0 ? delta : delta + (1 << size) - 1;
    w.put_bits(static_cast<std::uint32_t>(bits), static_cast<unsigned>(size));
}

/// Emits a table code when one exists, otherwise the 6+12-bit escape.
inline void put_run_level(BitWriter& w, CoefficientTable table_select, bool first_coefficient, int run, int level) {
    const auto& t = vlc_tables();
    const VlcTable& table = table_select == CoefficientTable::B15 ? t.b15
                            : first_coefficient                  ? t.b14_first
                                                                 : t.b14;
    if (level == 0 || level < -2047 || level > 2047 || run < 0 || run > 63) {
        fail(ErrorKind::SpecError, "run/level not encodable");
    }
    if (auto code = table.encode({SymbolKind::RunLevel, run, level})) {
        w.put_code(*code);
        return;
    }
    w.put_code(*table.encode({SymbolKind::Escape, 0, 0}));
    w.put_bits(static_cast<std::uint32_t>(run), 6);
    w.put_signed(level, 12);
}

inline void put_eob(BitWriter& w, CoefficientTable table_select) {
    const auto& t = vlc_tables();
    w.put_code(*(table_select == CoefficientTable::B15 ? t.b15 : t.b14).encode({SymbolKind::Eob, 0, 0}));
}

}  // namespace m2vscope
