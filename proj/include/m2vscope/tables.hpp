#pragma once

// Code tables, scan orders and default matrices of ISO/IEC 13818-2, kept as
// plain text so they can be diffed line by line against the standard.
//
// VLC table format: one entry per line, `<bitstring> <symbol-name> <args...>`.
// A trailing `s` on a bitstring is the sign bit; the loader expands it into a
// `0` entry (positive) and a `1` entry (negated value). `#` starts a comment.

#include <string_view>

namespace m2vscope::tables {

// Table B-1.
inline constexpr std::string_view macroblock_address_increment = R"(
1            increment 1
011          increment 2
010          increment 3
0011         increment 4
0010         increment 5
00011        increment 6
00010        increment 7
0000111      increment 8
0000110      increment 9
00001011     increment 10
00001010     increment 11
00001001     increment 12
00001000     increment 13
00000111     increment 14
00000110     increment 15
0000010111   increment 16
0000010110   increment 17
0000010101   increment 18
0000010100   increment 19
0000010011   increment 20
0000010010   increment 21
00000100011  increment 22
00000100010  increment 23
00000100001  increment 24
00000100000  increment 25
00000011111  increment 26
00000011110  increment 27
00000011101  increment 28
00000011100  increment 29
00000011011  increment 30
00000011010  increment 31
00000011001  increment 32
00000011000  increment 33
00000001000  escape
)";

// Table B-2.
inline constexpr std::string_view macroblock_type_i = R"(
1      mbtype intra
01     mbtype quant intra
)";

// Table B-3.
inline constexpr std::string_view macroblock_type_p = R"(
1      mbtype forward pattern
01     mbtype pattern
001    mbtype forward
00011  mbtype intra
00010  mbtype quant forward pattern
00001  mbtype quant pattern
000001 mbtype quant intra
)";

// Table B-4.
inline constexpr std::string_view macroblock_type_b = R"(
10     mbtype forward backward
11     mbtype forward backward pattern
010    mbtype backward
011    mbtype backward pattern
0010   mbtype forward
0011   mbtype forward pattern
00011  mbtype intra
00010  mbtype quant forward backward pattern
000011 mbtype quant forward pattern
000010 mbtype quant backward pattern
000001 mbtype quant intra
)";

// Table B-9 (cbp value, bit 5 = block 0).
inline constexpr std::string_view coded_block_pattern = R"(
111       cbp 60
1101      cbp 4
1100      cbp 8
1011      cbp 16
1010      cbp 32
10011     cbp 12
10010     cbp 48
10001     cbp 20
10000     cbp 40
01111     cbp 28
01110     cbp 44
01101     cbp 52
01100     cbp 56
01011     cbp 1
01010     cbp 61
01001     cbp 2
01000     cbp 62
001111    cbp 24
001110    cbp 36
001101    cbp 3
001100    cbp 63
0010111   cbp 5
0010110   cbp 9
0010101   cbp 17
0010100   cbp 33
0010011   cbp 6
0010010   cbp 10
0010001   cbp 18
0010000   cbp 34
00011111  cbp 7
00011110  cbp 11
00011101  cbp 19
00011100  cbp 35
00011011  cbp 13
00011010  cbp 49
00011001  cbp 21
00011000  cbp 41
00010111  cbp 14
00010110  cbp 50
00010101  cbp 22
00010100  cbp 42
00010011  cbp 15
00010010  cbp 51
00010001  cbp 23
00010000  cbp 43
00001111  cbp 25
00001110  cbp 37
00001101  cbp 26
00001100  cbp 38
00001011  cbp 29
00001010  cbp 45
00001001  cbp 53
00001000  cbp 57
00000111  cbp 30
00000110  cbp 46
00000101  cbp 54
00000100  cbp 58
000000111 cbp 31
000000110 cbp 47
000000101 cbp 55
000000100 cbp 59
000000011 cbp 27
000000010 cbp 39
000000001 cbp 0
)";

// Table B-10.
inline constexpr std::string_view motion_code = R"(
1             motion 0
01s           motion 1
001s          motion 2
0001s         motion 3
000011s       motion 4
0000101s      motion 5
0000100s      motion 6
0000011s      motion 7
000001011s    motion 8
000001010s    motion 9
000001001s    motion 10
0000010001s   motion 11
0000010000s   motion 12
0000001111s   motion 13
0000001110s   motion 14
0000001101s   motion 15
0000001100s   motion 16
)";

// Table B-12.
inline constexpr std::string_view dct_dc_size_luminance = R"(
100        size 0
00         size 1
01         size 2
101        size 3
110        size 4
1110       size 5
11110      size 6
111110     size 7
1111110    size 8
11111110   size 9
111111110  size 10
111111111  size 11
)";

// Table B-13.
inline constexpr std::string_view dct_dc_size_chrominance = R"(
00          size 0
01          size 1
10          size 2
110         size 3
1110        size 4
11110       size 5
111110      size 6
1111110     size 7
11111110    size 8
111111110   size 9
1111111110  size 10
1111111111  size 11
)";

// Table B-14. Entries tagged `first` apply only to the first coefficient of
// a non-intra block, entries tagged `notfirst` everywhere else.
inline constexpr std::string_view dct_coefficients_b14 = R"(
10                 eob            notfirst
1s                 runlevel 0 1   first
11s                runlevel 0 1   notfirst
011s               runlevel 1 1
0100s              runlevel 0 2
0101s              runlevel 2 1
00101s             runlevel 0 3
00111s             runlevel 3 1
00110s             runlevel 4 1
000110s            runlevel 1 2
000111s            runlevel 5 1
000101s            runlevel 6 1
000100s            runlevel 7 1
0000110s           runlevel 0 4
0000100s           runlevel 2 2
0000111s           runlevel 8 1
0000101s           runlevel 9 1
000001             escape
00100110s          runlevel 0 5
00100001s          runlevel 0 6
00100101s          runlevel 1 3
00100100s          runlevel 3 2
00100111s          runlevel 10 1
00100011s          runlevel 11 1
00100010s          runlevel 12 1
00100000s          runlevel 13 1
0000001010s        runlevel 0 7
0000001100s        runlevel 1 4
0000001011s        runlevel 2 3
0000001111s        runlevel 4 2
0000001001s        runlevel 5 2
0000001110s        runlevel 14 1
0000001101s        runlevel 15 1
0000001000s        runlevel 16 1
000000011101s      runlevel 0 8
000000011000s      runlevel 0 9
000000010011s      runlevel 0 10
000000010000s      runlevel 0 11
000000011011s      runlevel 1 5
000000010100s      runlevel 2 4
000000011100s      runlevel 3 3
000000010010s      runlevel 4 3
000000011110s      runlevel 6 2
000000010101s      runlevel 7 2
000000010001s      runlevel 8 2
000000011111s      runlevel 17 1
000000011010s      runlevel 18 1
000000011001s      runlevel 19 1
000000010111s      runlevel 20 1
000000010110s      runlevel 21 1
0000000011010s     runlevel 0 12
0000000011001s     runlevel 0 13
0000000011000s     runlevel 0 14
0000000010111s     runlevel 0 15
0000000010110s     runlevel 1 6
0000000010101s     runlevel 1 7
0000000010100s     runlevel 2 5
0000000010011s     runlevel 3 4
0000000010010s     runlevel 5 3
0000000010001s     runlevel 9 2
0000000010000s     runlevel 10 2
0000000011111s     runlevel 22 1
0000000011110s     runlevel 23 1
0000000011101s     runlevel 24 1
0000000011100s     runlevel 25 1
0000000011011s     runlevel 26 1
00000000011111s    runlevel 0 16
00000000011110s    runlevel 0 17
00000000011101s    runlevel 0 18
00000000011100s    runlevel 0 19
00000000011011s    runlevel 0 20
00000000011010s    runlevel 0 21
00000000011001s    runlevel 0 22
00000000011000s    runlevel 0 23
00000000010111s    runlevel 0 24
00000000010110s    runlevel 0 25
00000000010101s    runlevel 0 26
00000000010100s    runlevel 0 27
00000000010011s    runlevel 0 28
00000000010010s    runlevel 0 29
00000000010001s    runlevel 0 30
00000000010000s    runlevel 0 31
000000000011000s   runlevel 0 32
000000000010111s   runlevel 0 33
000000000010110s   runlevel 0 34
000000000010101s   runlevel 0 35
000000000010100s   runlevel 0 36
000000000010011s   runlevel 0 37
000000000010010s   runlevel 0 38
000000000010001s   runlevel 0 39
000000000010000s   runlevel 0 40
000000000011111s   runlevel 1 8
000000000011110s   runlevel 1 9
000000000011101s   runlevel 1 10
000000000011100s   runlevel 1 11
000000000011011s   runlevel 1 12
000000000011010s   runlevel 1 13
000000000011001s   runlevel 1 14
0000000000010011s  runlevel 1 15
0000000000010010s  runlevel 1 16
0000000000010001s  runlevel 1 17
0000000000010000s  runlevel 1 18
0000000000010100s  runlevel 6 3
0000000000011010s  runlevel 11 2
0000000000011001s  runlevel 12 2
0000000000011000s  runlevel 13 2
0000000000010111s  runlevel 14 2
0000000000010110s  runlevel 15 2
0000000000010101s  runlevel 16 2
0000000000011111s  runlevel 27 1
0000000000011110s  runlevel 28 1
0000000000011101s  runlevel 29 1
0000000000011100s  runlevel 30 1
0000000000011011s  runlevel 31 1
)";

// Table B-15 (intra blocks when intra_vlc_format = 1).
inline constexpr std::string_view dct_coefficients_b15 = R"(
0110               eob
10s                runlevel 0 1
010s               runlevel 1 1
110s               runlevel 0 2
00101s             runlevel 2 1
0111s              runlevel 0 3
00111s             runlevel 3 1
000110s            runlevel 4 1
00110s             runlevel 1 2
000111s            runlevel 5 1
0000110s           runlevel 6 1
0000100s           runlevel 7 1
11100s             runlevel 0 4
0000111s           runlevel 2 2
0000101s           runlevel 8 1
1111000s           runlevel 9 1
000001             escape
11101s             runlevel 0 5
000101s            runlevel 0 6
1111001s           runlevel 1 3
00100110s          runlevel 3 2
1111010s           runlevel 10 1
00100001s          runlevel 11 1
00100101s          runlevel 12 1
00100100s          runlevel 13 1
000100s            runlevel 0 7
00100111s          runlevel 1 4
11111100s          runlevel 2 3
11111101s          runlevel 4 2
000000100s         runlevel 5 2
000000101s         runlevel 14 1
000000111s         runlevel 15 1
0000001101s        runlevel 16 1
1111011s           runlevel 0 8
1111100s           runlevel 0 9
00100011s          runlevel 0 10
00100010s          runlevel 0 11
00100000s          runlevel 1 5
0000001100s        runlevel 2 4
000000011100s      runlevel 3 3
000000010010s      runlevel 4 3
000000011110s      runlevel 6 2
000000010101s      runlevel 7 2
000000010001s      runlevel 8 2
000000011111s      runlevel 17 1
000000011010s      runlevel 18 1
000000011001s      runlevel 19 1
000000010111s      runlevel 20 1
000000010110s      runlevel 21 1
11111010s          runlevel 0 12
11111011s          runlevel 0 13
11111110s          runlevel 0 14
11111111s          runlevel 0 15
0000000010110s     runlevel 1 6
0000000010101s     runlevel 1 7
0000000010100s     runlevel 2 5
0000000010011s     runlevel 3 4
0000000010010s     runlevel 5 3
0000000010001s     runlevel 9 2
0000000010000s     runlevel 10 2
0000000011111s     runlevel 22 1
0000000011110s     runlevel 23 1
0000000011101s     runlevel 24 1
0000000011100s     runlevel 25 1
0000000011011s     runlevel 26 1
00000000011111s    runlevel 0 16
00000000011110s    runlevel 0 17
00000000011101s    runlevel 0 18
00000000011100s    runlevel 0 19
00000000011011s    runlevel 0 20
00000000011010s    runlevel 0 21
00000000011001s    runlevel 0 22
00000000011000s    runlevel 0 23
00000000010111s    runlevel 0 24
00000000010110s    runlevel 0 25
00000000010101s    runlevel 0 26
00000000010100s    runlevel 0 27
00000000010011s    runlevel 0 28
00000000010010s    runlevel 0 29
00000000010001s    runlevel 0 30
00000000010000s    runlevel 0 31
000000000011000s   runlevel 0 32
000000000010111s   runlevel 0 33
000000000010110s   runlevel 0 34
000000000010101s   runlevel 0 35
000000000010100s   runlevel 0 36
000000000010011s   runlevel 0 37
000000000010010s   runlevel 0 38
000000000010001s   runlevel 0 39
000000000010000s   runlevel 0 40
000000000011111s   runlevel 1 8
000000000011110s   runlevel 1 9
000000000011101s   runlevel 1 10
000000000011100s   runlevel 1 11
000000000011011s   runlevel 1 12
000000000011010s   runlevel 1 13
000000000011001s   runlevel 1 14
0000000000010011s  runlevel 1 15
0000000000010010s  runlevel 1 16
0000000000010001s  runlevel 1 17
0000000000010000s  runlevel 1 18
0000000000010100s  runlevel 6 3
0000000000011010s  runlevel 11 2
0000000000011001s  runlevel 12 2
0000000000011000s  runlevel 13 2
0000000000010111s  runlevel 14 2
0000000000010110s  runlevel 15 2
0000000000010101s  runlevel 16 2
0000000000011111s  runlevel 27 1
0000000000011110s  runlevel 28 1
0000000000011101s  runlevel 29 1
0000000000011100s  runlevel 30 1
0000000000011011s  runlevel 31 1
)";

// Scan orders: 64 integers per matrix in serial order, each the row-major
// cell index (row * 8 + col) that serial position maps to.
inline constexpr std::string_view zigzag_scan = R"(
 0  1  8 16  9  2  3 10
17 24 32 25 18 11  4  5
12 19 26 33 40 48 41 34
27 20 13  6  7 14 21 28
35 42 49 56 57 50 43 36
29 22 15 23 30 37 44 51
58 59 52 45 38 31 39 46
53 60 61 54 47 55 62 63
)";

inline constexpr std::string_view alternate_scan = R"(
 0  8 16 24  1  9  2 10
17 25 32 40 48 56 57 49
41 33 26 18  3 11  4 12
19 27 34 42 50 58 35 43
51 59 20 28  5 13  6 14
21 29 36 44 52 60 37 45
53 61 22 30  7 15 23 31
38 46 54 62 39 47 55 63
)";

// Default intra quantiser matrix, row-major.
inline constexpr std::string_view default_intra_matrix = R"(
 8 16 19 22 26 27 29 34
16 16 22 24 27 29 34 37
19 22 26 27 29 34 34 38
22 22 26 27 29 34 37 40
22 26 27 29 32 35 40 48
26 27 29 32 35 40 48 58
26 27 29 34 38 46 56 69
27 29 35 38 46 56 69 83
)";

inline constexpr int default_non_intra_weight = 16;

// quantiser_scale for q_scale_type = 1, indexed by quantiser_scale_code 1..31.
inline constexpr int non_linear_quantiser_scale[32] = {
    0,  1,  2,  3,  4,  5,  6,  7,  8,  10, 12, 14, 16, 18,  20,  22,
    24, 28, 32, 36, 40, 44, 48, 52, 56, 64, 72, 80, 88, 96, 104, 112,
};

}  // namespace m2vscope::tables
