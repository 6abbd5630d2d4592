#include "boilernet/text.hpp"

#include <algorithm>
#include <array>

namespace boilernet::text {

char32_t decode_utf8(std::string_view s, std::size_t& pos) {
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    unsigned char b0 = byte(pos);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xe0) == 0xc0) {
        len = 2;
        cp = b0 & 0x1f;
    } else if ((b0 & 0xf0) == 0xe0) {
        len = 3;
        cp = b0 & 0x0f;
    } else if ((b0 & 0xf8) == 0xf0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++pos;
        return 0xfffd;
    }
    if (pos + len > s.size()) {
        ++pos;
        return 0xfffd;
    }
    for (std::size_t i = 1; i < len; ++i) {
        unsigned char b = byte(pos + i);
        if ((b & 0xc0) != 0x80) {
            ++pos;
            return 0xfffd;
        }
        cp = (cp << 6) | (b & 0x3f);
    }
    // reject overlong encodings and surrogates
    static constexpr std::array<char32_t, 5> min_cp = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_cp[len] || (cp >= 0xd800 && cp <= 0xdfff) || cp > 0x10ffff) {
        ++pos;
        return 0xfffd;
    }
    pos += len;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) cp = 0xfffd;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xc0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xe0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    } else {
        out += static_cast<char>(0xf0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    }
}

std::vector<char32_t> to_codepoints(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t pos = 0;
    while (pos < s.size()) out.push_back(decode_utf8(s, pos));
    return out;
}

namespace {

struct Range {
    char32_t lo;
    char32_t hi;
};

// Letter/digit ranges. Coarse by intent: each range is entirely treated
// as word-constituent even where Unicode interleaves a few symbols.
constexpr Range kWordRanges[] = {
    {U'0', U'9'},
    {U'A', U'Z'},
    {U'a', U'z'},
    {0x00aa, 0x00aa}, // feminine ordinal
    {0x00b5, 0x00b5}, // micro sign
    {0x00ba, 0x00ba}, // masculine ordinal
    {0x00c0, 0x00d6}, // Latin-1 letters (excl. multiplication sign)
    {0x00d8, 0x00f6}, // Latin-1 letters (excl. division sign)
    {0x00f8, 0x02af}, // Latin extended A/B, IPA
    {0x0370, 0x0373}, {0x0376, 0x0377}, {0x037b, 0x037d},
    {0x0386, 0x0386}, {0x0388, 0x03ff}, // Greek
    {0x0400, 0x0481}, {0x048a, 0x052f}, // Cyrillic
    {0x0531, 0x0556}, {0x0561, 0x0587}, // Armenian
    {0x05d0, 0x05ea}, // Hebrew
    {0x0620, 0x064a}, {0x0660, 0x0669}, {0x066e, 0x066f},
    {0x0671, 0x06d3}, {0x06f0, 0x06f9}, // Arabic + digits
    {0x0904, 0x0939}, {0x0958, 0x0961}, {0x0966, 0x096f}, // Devanagari
    {0x0e01, 0x0e30}, {0x0e32, 0x0e33}, {0x0e40, 0x0e46},
    {0x0e50, 0x0e59}, // Thai
    {0x10a0, 0x10c5}, {0x10d0, 0x10fa}, // Georgian
    {0x1e00, 0x1fbc}, {0x1fc2, 0x1ffc}, // Latin/Greek extended additional
    {0x3041, 0x3096}, // Hiragana
    {0x30a1, 0x30fa}, // Katakana
    {0x3400, 0x4dbf}, // CJK ext A
    {0x4e00, 0x9fff}, // CJK unified
    {0xac00, 0xd7a3}, // Hangul syllables
    {0xff10, 0xff19}, {0xff21, 0xff3a}, {0xff41, 0xff5a}, // fullwidth
};

} // namespace

bool is_word_char(char32_t cp) {
    for (const Range& r : kWordRanges) {
        if (cp < r.lo) return false;
        if (cp <= r.hi) return true;
    }
    return false;
}

char32_t to_lower(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 32;
    if (cp >= 0x00c0 && cp <= 0x00de && cp != 0x00d7) return cp + 32; // Latin-1
    if (cp >= 0x0391 && cp <= 0x03a9 && cp != 0x03a2) return cp + 32; // Greek
    if (cp >= 0x0410 && cp <= 0x042f) return cp + 32;                 // Cyrillic
    if (cp >= 0x0400 && cp <= 0x040f) return cp + 80;                 // Cyrillic supplements
    if (cp >= 0x0100 && cp <= 0x017f) return (cp % 2 == 0) ? cp + 1 : cp; // Latin ext A pairs
    return cp;
}

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_space(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
           cp == U'\v' || cp == 0x00a0;
}

bool is_blank(std::string_view s) {
    std::size_t pos = 0;
    while (pos < s.size()) {
        if (!is_space(decode_utf8(s, pos))) return false;
    }
    return true;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t pos = 0;
    while (pos < s.size()) {
        char32_t cp = decode_utf8(s, pos);
        if (is_word_char(cp)) {
            append_utf8(current, to_lower(cp));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string normalize_whitespace(std::string_view s) {
    std::string out;
    bool pending_space = false;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t start = pos;
        char32_t cp = decode_utf8(s, pos);
        if (is_space(cp)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out.append(s.substr(start, pos - start));
        }
    }
    return out;
}

std::string truncate_codepoints(std::string_view s, std::size_t n) {
    std::size_t pos = 0;
    std::size_t count = 0;
    while (pos < s.size() && count < n) {
        decode_utf8(s, pos);
        ++count;
    }
    return std::string(s.substr(0, pos));
}

} // namespace boilernet::text
