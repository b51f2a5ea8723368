#include "storyecho/unicode.hpp"

#include <unicode/uchar.h>
#include <unicode/uscript.h>

#include <algorithm>
#include <array>

namespace storyecho {

namespace {

struct Range {
    char32_t first;
    char32_t last;
};

// Scripts.txt, Unicode 17.0, Script=Han. U+16FE2 is split out (gc=Po).
constexpr std::array<Range, 21> kHanRanges{{
    {0x2E80, 0x2E99},   {0x2E9B, 0x2EF3},   {0x2F00, 0x2FD5},   {0x3005, 0x3005},
    {0x3007, 0x3007},   {0x3021, 0x3029},   {0x3038, 0x303B},   {0x3400, 0x4DBF},
    {0x4E00, 0x9FFF},   {0xF900, 0xFA6D},   {0xFA70, 0xFAD9},   {0x16FE3, 0x16FE3},
    {0x16FF0, 0x16FF6}, {0x20000, 0x2A6DF}, {0x2A700, 0x2B81D}, {0x2B820, 0x2CEAD},
    {0x2CEB0, 0x2EBE0}, {0x2EBF0, 0x2EE5D}, {0x2F800, 0x2FA1D}, {0x30000, 0x3134A},
    {0x31350, 0x33479},
}};

constexpr char32_t kReplacement = 0xFFFD;

} // namespace

std::u32string decode_utf8(std::string_view text)
{
    std::u32string out;
    out.reserve(text.size());
    const auto* s = reinterpret_cast<const unsigned char*>(text.data());
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        const unsigned char b0 = s[i];
        if (b0 < 0x80) {
            out.push_back(b0);
            ++i;
            continue;
        }
        int len = 0;
        char32_t cp = 0;
        char32_t min = 0;
        if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
            min = 0x80;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
            min = 0x800;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
            min = 0x10000;
        } else {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        if (i + len > n) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        bool valid = true;
        for (int k = 1; k < len; ++k) {
            const unsigned char b = s[i + k];
            if ((b & 0xC0) != 0x80) {
                valid = false;
                break;
            }
            cp = (cp << 6) | (b & 0x3F);
        }
        if (!valid || cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp)
{
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode_utf8(std::u32string_view text)
{
    std::string out;
    out.reserve(text.size() * 3);
    for (char32_t cp : text) {
        append_utf8(out, cp);
    }
    return out;
}

bool is_han(char32_t cp)
{
    // Ranges are sorted; binary search on the last code point.
    auto it = std::lower_bound(kHanRanges.begin(), kHanRanges.end(), cp,
                               [](const Range& r, char32_t value) { return r.last < value; });
    return it != kHanRanges.end() && cp >= it->first;
}

std::size_t count_han_chars(std::string_view text)
{
    const auto cps = decode_utf8(text);
    return static_cast<std::size_t>(std::count_if(cps.begin(), cps.end(), is_han));
}

bool is_sentence_terminal(char32_t cp)
{
    return cp == U'。' || cp == U'！' || cp == U'？';
}

std::string first_sentence(std::string_view text)
{
    const auto cps = decode_utf8(text);
    auto it = std::find_if(cps.begin(), cps.end(), is_sentence_terminal);
    if (it == cps.end()) {
        return encode_utf8(cps);
    }
    return encode_utf8(std::u32string_view(cps.data(), static_cast<std::size_t>(it - cps.begin()) + 1));
}

bool is_single_sentence(std::string_view text)
{
    auto cps = decode_utf8(text);
    while (!cps.empty() && (cps.back() == U' ' || cps.back() == U'\n' || cps.back() == U'　')) {
        cps.pop_back();
    }
    if (cps.empty()) {
        return false;
    }
    // Allow a run of terminals at the very end ("……！？").
    std::size_t end = cps.size();
    while (end > 0 && is_sentence_terminal(cps[end - 1])) {
        --end;
    }
    return std::none_of(cps.begin(), cps.begin() + static_cast<std::ptrdiff_t>(end),
                        is_sentence_terminal);
}

std::u32string prefix_code_points(std::string_view text, std::size_t n)
{
    auto cps = decode_utf8(text);
    if (cps.size() > n) {
        cps.resize(n);
    }
    return cps;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle)
{
    if (needle.empty()) {
        return 0;
    }
    std::size_t count = 0;
    std::size_t pos = haystack.find(needle);
    while (pos != std::string_view::npos) {
        ++count;
        pos = haystack.find(needle, pos + needle.size());
    }
    return count;
}

bool is_latin_letter(char32_t cp)
{
    UErrorCode status = U_ZERO_ERROR;
    const auto script = uscript_getScript(static_cast<UChar32>(cp), &status);
    return U_SUCCESS(status) && script == USCRIPT_LATIN && u_isalpha(static_cast<UChar32>(cp));
}

bool is_emoji(char32_t cp)
{
    const auto c = static_cast<UChar32>(cp);
    return u_hasBinaryProperty(c, UCHAR_EXTENDED_PICTOGRAPHIC) ||
           u_hasBinaryProperty(c, UCHAR_REGIONAL_INDICATOR) ||
           u_hasBinaryProperty(c, UCHAR_EMOJI_MODIFIER) || cp == 0xFE0F || cp == 0x20E3;
}

} // namespace storyecho
