#include "regenn/variant.hpp"

#include <algorithm>
#include <vector>

#include "regenn/errors.hpp"

namespace regenn {

namespace {

std::string strip_and_normalize(const std::string& tag) {
    std::string s;
    s.reserve(tag.size());
    for (std::size_t i = 0; i < tag.size(); ++i) {
        // "\xe2\x86\x92" is the UTF-8 arrow; treat it like "->".
        if (tag.compare(i, 3, "\xe2\x86\x92") == 0) {
            s += "->";
            i += 2;
            continue;
        }
        const char c = tag[i];
        if (c == ' ' || c == '\t' || c == '(' || c == ')') continue;
        s += c;
    }
    return s;
}

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '+') {
            if (!cur.empty()) tokens.push_back(cur);
            cur.clear();
        } else if (s[i] == '-' && i + 1 < s.size() && s[i + 1] == '>') {
            if (!cur.empty()) tokens.push_back(cur);
            cur.clear();
            ++i;
        } else {
            cur += s[i];
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

} // namespace

VariantSpec VariantSpec::parse(const std::string& tag, CellKind cell) {
    const std::string normalized = strip_and_normalize(tag);
    if (upper(normalized) == "REGENN") {
        VariantSpec v;
        v.use_gse = true;
        v.use_encoder = true;
        v.ru1 = RuSpec{cell, Direction::Uni};
        v.ru2 = RuSpec{cell, Direction::Uni};
        v.use_ar = true;
        return v;
    }
    const std::vector<std::string> tokens = tokenize(normalized);
    if (tokens.empty()) throw UsageError("empty architecture tag");

    VariantSpec v;
    std::size_t i = 0;
    if (tokens.size() == 1 && upper(tokens[0]) == "AR") {
        v.use_ar = true;
        return v;
    }
    if (upper(tokens[i]) == "E") {
        v.use_encoder = true;
        ++i;
    }
    auto parse_ru = [&](const std::string& tok) -> std::optional<RuSpec> {
        const std::string u = upper(tok);
        if (u == "URU") return RuSpec{cell, Direction::Uni};
        if (u == "BRU") return RuSpec{cell, Direction::Bi};
        return std::nullopt;
    };
    if (i >= tokens.size()) {
        throw UsageError("architecture tag '" + tag + "': expected a recurrent unit after 'E'");
    }
    v.ru1 = parse_ru(tokens[i]);
    if (!v.ru1) {
        throw UsageError("architecture tag '" + tag + "': unrecognized token '" + tokens[i] +
                         "'");
    }
    ++i;
    if (i < tokens.size()) {
        if (auto ru = parse_ru(tokens[i])) {
            v.ru2 = ru;
            ++i;
        }
    }
    if (i < tokens.size()) {
        if (upper(tokens[i]) != "AR") {
            throw UsageError("architecture tag '" + tag + "': unrecognized token '" +
                             tokens[i] + "'");
        }
        v.use_ar = true;
        ++i;
    }
    if (i < tokens.size()) {
        throw UsageError("architecture tag '" + tag + "': unexpected trailing token '" +
                         tokens[i] + "'");
    }
    return v;
}

std::string VariantSpec::tag() const {
    if (use_gse) return "regenn";
    if (!ru1) return "AR";
    auto ru_tok = [](const RuSpec& r) {
        return r.direction == Direction::Bi ? std::string("BRU") : std::string("URU");
    };
    std::string core;
    if (use_encoder) core += "E \xe2\x86\x92 ";
    core += ru_tok(*ru1);
    if (ru2) core += " + " + ru_tok(*ru2);
    if (use_ar) return "(" + core + ") + AR";
    return core;
}

} // namespace regenn
