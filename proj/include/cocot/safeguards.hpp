#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "cocot/chain.hpp"
#include "cocot/model.hpp"

namespace cocot {

enum class PiiKind { Email, PhoneNumber, NationalId, PaymentCard };

inline std::string_view to_string(PiiKind k) {
    switch (k) {
        case PiiKind::Email: return "Email";
        case PiiKind::PhoneNumber: return "PhoneNumber";
        case PiiKind::NationalId: return "NationalId";
        case PiiKind::PaymentCard: return "PaymentCard";
    }
    return "Email";
}

inline std::optional<PiiKind> pii_kind_from_string(std::string_view s) {
    for (auto k : {PiiKind::Email, PiiKind::PhoneNumber, PiiKind::NationalId, PiiKind::PaymentCard}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

struct PiiFinding {
    PiiKind kind = PiiKind::Email;
    std::size_t start = 0;  // byte offsets, [start, end)
    std::size_t end = 0;
    std::string preview;

    bool operator==(const PiiFinding&) const = default;
};

/// Mask every character except the last two.
inline std::string mask_preview(std::string_view value) {
    if (value.size() <= 2) return std::string(value.size(), '*');
    return std::string(value.size() - 2, '*') + std::string(value.substr(value.size() - 2));
}

inline bool luhn_valid(std::string_view digits) {
    int sum = 0;
    bool twice = false;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
        int d = *it - '0';
        if (twice) {
            d *= 2;
            if (d > 9) d -= 9;
        }
        sum += d;
        twice = !twice;
    }
    return !digits.empty() && sum % 10 == 0;
}

namespace detail {

inline bool is_digit_at(std::string_view text, std::size_t i) {
    return i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]));
}

inline bool is_email_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '%' || c == '+' || c == '-';
}

/// A digit group must not continue into neighbouring digits, either directly
/// or through a single separator.
inline bool digit_boundaries_clean(std::string_view text, std::size_t start, std::size_t end) {
    if (start > 0) {
        if (is_digit_at(text, start - 1)) return false;
        const char sep = text[start - 1];
        if ((sep == '-' || sep == '.') && start > 1 && is_digit_at(text, start - 2)) return false;
    }
    if (is_digit_at(text, end)) return false;
    if (end < text.size()) {
        const char sep = text[end];
        if ((sep == '-' || sep == '.') && is_digit_at(text, end + 1)) return false;
    }
    return true;
}

/// All regex matches for which `accept` holds; a rejected match resumes the
/// search one character later so overlapping candidates are not lost.
inline void scan(std::string_view text, const std::regex& re, PiiKind kind,
                 const std::function<bool(std::size_t, std::size_t)>& accept, std::vector<PiiFinding>& out) {
    const std::string s(text);
    std::size_t pos = 0;
    std::smatch m;
    while (pos < s.size() &&
           std::regex_search(s.cbegin() + static_cast<std::ptrdiff_t>(pos), s.cend(), m, re)) {
        const std::size_t start = pos + static_cast<std::size_t>(m.position(0));
        const std::size_t end = start + static_cast<std::size_t>(m.length(0));
        if (accept(start, end)) {
            out.push_back({kind, start, end, mask_preview(text.substr(start, end - start))});
            pos = end;
        } else {
            pos = start + 1;
        }
    }
}

}  // namespace detail

/// Pattern-based detection of four identifier kinds. Findings are ordered by
/// start offset; different kinds may overlap.
inline std::vector<PiiFinding> detect_pii(std::string_view text) {
    static const std::regex email_re(R"([A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,})");
    static const std::regex phone_re(R"((?:\+?1[ .-]?)?(?:\([0-9]{3}\) ?|[0-9]{3}[-. ])[0-9]{3}[-. ][0-9]{4})");
    static const std::regex ssn_re(R"([0-9]{3}-[0-9]{2}-[0-9]{4})");
    static const std::regex card_re(R"([0-9](?:[ -]?[0-9]){12,15})");

    std::vector<PiiFinding> out;
    detail::scan(text, email_re, PiiKind::Email, [&](std::size_t b, std::size_t e) {
        return (b == 0 || !detail::is_email_char(text[b - 1])) &&
               (e == text.size() || !(std::isalnum(static_cast<unsigned char>(text[e])) || text[e] == '@'));
    }, out);
    detail::scan(text, phone_re, PiiKind::PhoneNumber, [&](std::size_t b, std::size_t e) {
        if (b > 0 && text[b - 1] == '+') return false;
        return detail::digit_boundaries_clean(text, b, e);
    }, out);
    detail::scan(text, ssn_re, PiiKind::NationalId,
                 [&](std::size_t b, std::size_t e) { return detail::digit_boundaries_clean(text, b, e); }, out);
    detail::scan(text, card_re, PiiKind::PaymentCard, [&](std::size_t b, std::size_t e) {
        if (detail::is_digit_at(text, e) || (b > 0 && detail::is_digit_at(text, b - 1))) return false;
        if (e + 1 < text.size() && (text[e] == ' ' || text[e] == '-') && detail::is_digit_at(text, e + 1)) {
            return false;
        }
        if (b > 1 && (text[b - 1] == ' ' || text[b - 1] == '-') && detail::is_digit_at(text, b - 2)) return false;
        std::string digits;
        for (std::size_t i = b; i < e; ++i) {
            if (detail::is_digit_at(text, i)) digits += text[i];
        }
        return luhn_valid(digits);
    }, out);

    std::stable_sort(out.begin(), out.end(), [](const PiiFinding& a, const PiiFinding& b) {
        return a.start != b.start ? a.start < b.start : a.end < b.end;
    });
    return out;
}

/// Human-readable warning for findings in a given source ("your edit", "the model output").
inline std::string pii_warning(const std::vector<PiiFinding>& findings, std::string_view source) {
    std::string out = "Privacy reminder: possible identifiable information detected in " + std::string(source) + ":";
    for (const auto& f : findings) out += "\n- " + std::string(to_string(f.kind)) + " " + f.preview;
    return out;
}

struct Disclosure {
    std::string model_version;
    std::string parameters;
    std::optional<double> confidence;
    std::string rendered;

    bool operator==(const Disclosure&) const = default;
};

inline std::string format_param(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

inline Disclosure build_disclosure(const ModelMetadata& metadata) {
    if (metadata.model_version.empty()) throw Error(ErrorCode::Precondition, "model_version is empty");
    if (metadata.confidence && (*metadata.confidence < 0.0 || *metadata.confidence > 1.0)) {
        throw Error(ErrorCode::Precondition, "confidence outside [0,1]");
    }
    Disclosure d;
    d.model_version = metadata.model_version;
    // std::map iterates keys in sorted order.
    for (const auto& [k, v] : metadata.parameters) {
        if (!d.parameters.empty()) d.parameters += ", ";
        d.parameters += k + "=" + format_param(v);
    }
    if (d.parameters.empty()) d.parameters = "(none)";
    d.confidence = metadata.confidence;
    d.rendered = "Model disclosure:\nversion: " + d.model_version + "\nparameters: " + d.parameters;
    if (d.confidence) d.rendered += "\nconfidence: " + json(*d.confidence).dump();
    return d;
}

/// Audit instruction for one step. A pure function of the step.
inline std::string build_bias_prompt(const ReasoningStep& step) {
    const std::string label = "Step " + std::to_string(step.ordinal);
    return "Is there any bias in " + label + "?\n\n[" + label + "] " + trim(step.text) +
           "\n\nAudit " + label +
           " for bias. Point out unstated assumptions, missing or marginalized perspectives, and loaded framing. "
           "Then either explain why the logic holds as written or propose a reframed version of the step. "
           "Do not change any other step.";
}

}  // namespace cocot
