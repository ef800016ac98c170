#include "clinex/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace clinex::text {

namespace {

const icu::Normalizer2& nfc_normalizer() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
        throw std::runtime_error("ICU NFC normalizer unavailable");
    }
    return *n;
}

std::string to_utf8(const icu::UnicodeString& s) {
    std::string out;
    s.toUTF8String(out);
    return out;
}

icu::UnicodeString normalized(std::string_view s) {
    const icu::UnicodeString src =
        icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString out = nfc_normalizer().normalize(src, status);
    if (U_FAILURE(status)) return src;
    return out;
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
    const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
    const auto length = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < length) {
        UChar32 c = 0;
        U8_NEXT(bytes, i, length, c);
        if (c < 0) return false;
    }
    return true;
}

std::string nfc(std::string_view s) { return to_utf8(normalized(s)); }

std::string fold_case(std::string_view s) {
    icu::UnicodeString u = normalized(s);
    u.foldCase();
    return to_utf8(u);
}

std::string collapse_whitespace(std::string_view s) {
    const icu::UnicodeString u =
        icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    icu::UnicodeString out;
    bool pending_space = false;
    for (int32_t i = 0; i < u.length();) {
        const UChar32 c = u.char32At(i);
        i += U16_LENGTH(c);
        if (u_isUWhiteSpace(c)) {
            pending_space = !out.isEmpty();
            continue;
        }
        if (pending_space) out.append(static_cast<UChar>(' '));
        pending_space = false;
        out.append(c);
    }
    return to_utf8(out);
}

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

std::string match_key(std::string_view s) {
    icu::UnicodeString u = normalized(s);
    u.foldCase();
    u.findAndReplace(icu::UnicodeString(static_cast<UChar32>(0x064A)),   // ARABIC LETTER YEH
                     icu::UnicodeString(static_cast<UChar32>(0x06CC)));  // FARSI YEH
    u.findAndReplace(icu::UnicodeString(static_cast<UChar32>(0x0643)),   // ARABIC LETTER KAF
                     icu::UnicodeString(static_cast<UChar32>(0x06A9)));  // KEHEH
    return collapse_whitespace(to_utf8(u));
}

std::vector<std::string_view> split_lines(std::string_view s) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find('\n', start);
        if (end == std::string_view::npos) end = s.size();
        auto line = s.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

}  // namespace clinex::text
