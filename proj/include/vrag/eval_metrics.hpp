/*
 * Copyright 2026 The vrag Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "vrag/error.hpp"
#include "vrag/unicode_tables.hpp"

namespace vrag {

namespace text {

inline constexpr char32_t kReplacement = 0xFFFD;

/// Lenient UTF-8 decoding; malformed sequences become U+FFFD.
inline std::u32string decode_utf8(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto b0 = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (b0 < 0x80) {
            len = 1;
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        if (i + len > s.size()) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
            const auto b = static_cast<unsigned char>(s[i + k]);
            if ((b & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (b & 0x3F);
        }
        if (!ok) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline std::string encode_utf8(std::u32string_view s) {
    std::string out;
    for (char32_t cp : s) {
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
    return out;
}

namespace detail {

inline bool in_ranges(std::span<const tables::CodeRange> ranges, char32_t c) {
    auto it = std::upper_bound(ranges.begin(), ranges.end(), c, [](char32_t v, const tables::CodeRange& r) { return v < r.lo; });
    return it != ranges.begin() && c <= std::prev(it)->hi;
}

}  // namespace detail

/// Same set as Python's str.isspace().
inline bool is_space(char32_t c) { return detail::in_ranges(tables::kWhitespace, c); }

/// Unicode general category P (connector, dash, open/close, initial/final,
/// other punctuation). Symbols such as $ + ° are not punctuation.
inline bool is_punct(char32_t c) { return detail::in_ranges(tables::kPunctuation, c); }

/// Single code point lowercase mapping; multi-character expansions are left alone.
inline char32_t to_lower(char32_t c) {
    if (c < 0x80) return (c >= 'A' && c <= 'Z') ? c + 32 : c;
    const auto& table = tables::kLowercase;
    auto it = std::lower_bound(table.begin(), table.end(), c, [](const tables::CaseMapping& m, char32_t v) { return m.upper < v; });
    return (it != table.end() && it->upper == c) ? it->lower : c;
}

}  // namespace text

/// Lowercase, split on Unicode whitespace, strip leading/trailing punctuation,
/// drop empties.
inline std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    const std::u32string cps = text::decode_utf8(s);
    std::size_t i = 0;
    while (i < cps.size()) {
        while (i < cps.size() && text::is_space(cps[i])) ++i;
        std::size_t j = i;
        while (j < cps.size() && !text::is_space(cps[j])) ++j;
        std::size_t lo = i;
        std::size_t hi = j;
        while (lo < hi && text::is_punct(cps[lo])) ++lo;
        while (hi > lo && text::is_punct(cps[hi - 1])) --hi;
        if (lo < hi) {
            std::u32string token(cps.begin() + static_cast<std::ptrdiff_t>(lo), cps.begin() + static_cast<std::ptrdiff_t>(hi));
            for (char32_t& c : token) c = text::to_lower(c);
            tokens.push_back(text::encode_utf8(token));
        }
        i = j;
    }
    return tokens;
}

inline std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// Sentence-level ROUGE-L F1 over tokens. With R = L/|ref| and P = L/|hyp|,
/// 2PR/(P+R) reduces to 2L/(|ref|+|hyp|), which is also exactly symmetric.
inline double rouge_l(std::string_view reference, std::string_view hypothesis) {
    const auto ref = tokenize(reference);
    const auto hyp = tokenize(hypothesis);
    if (ref.empty() || hyp.empty()) return 0.0;
    const std::size_t l = lcs_length(ref, hyp);
    if (l == 0) return 0.0;
    return 2.0 * static_cast<double>(l) / static_cast<double>(ref.size() + hyp.size());
}

namespace detail {

inline std::unordered_map<std::string, std::size_t> ngram_counts(std::span<const std::string> tokens, std::size_t n) {
    std::unordered_map<std::string, std::size_t> counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (std::size_t k = 0; k < n; ++k) {
            if (k) key.push_back('\x1f');
            key += tokens[i + k];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace detail

/// Sentence BLEU-4 against one reference: geometric mean of clipped n-gram
/// precisions (n = 1..4) times min(1, exp(1 - |ref|/|hyp|)). A zero
/// numerator for n >= 2 is smoothed to 1 / (total + 1); no unigram overlap
/// gives 0.
inline double bleu_4(std::string_view reference, std::string_view hypothesis) {
    const auto ref = tokenize(reference);
    const auto hyp = tokenize(hypothesis);
    if (hyp.empty()) return 0.0;
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto hyp_counts = detail::ngram_counts(hyp, n);
        const auto ref_counts = detail::ngram_counts(ref, n);
        std::size_t matched = 0;
        for (const auto& [gram, count] : hyp_counts) {
            auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) matched += std::min(count, it->second);
        }
        const std::size_t total = hyp.size() >= n ? hyp.size() - n + 1 : 0;
        double precision = 0.0;
        if (matched == 0) {
            if (n == 1) return 0.0;
            precision = 1.0 / static_cast<double>(total + 1);
        } else {
            precision = static_cast<double>(matched) / static_cast<double>(total);
        }
        log_sum += std::log(precision);
    }
    const double ratio = static_cast<double>(ref.size()) / static_cast<double>(hyp.size());
    const double brevity = std::min(1.0, std::exp(1.0 - ratio));
    return std::min(1.0, brevity * std::exp(log_sum / 4.0));
}

struct MetricRow {
    std::string query_id;
    double rouge_l = 0.0;
    double bleu_4 = 0.0;
    std::optional<int> geval;
    std::optional<double> bertscore;  // supplied externally, never computed here
    std::optional<std::string> category;
};

struct MetricAggregates {
    std::size_t count = 0;
    double rouge_l = 0.0;
    double bleu_4 = 0.0;
    std::optional<double> geval;  // mean over rows that carry a judge score
    std::optional<double> bertscore;
};

struct MetricReport {
    std::vector<MetricRow> per_example;
    MetricAggregates aggregates;
    std::optional<std::map<std::string, MetricAggregates>> group_by;
};

inline constexpr std::string_view kUncategorized = "uncategorized";

inline MetricAggregates aggregate_rows(std::span<const MetricRow* const> rows) {
    MetricAggregates a;
    a.count = rows.size();
    double rouge = 0.0;
    double bleu = 0.0;
    double geval = 0.0;
    double bert = 0.0;
    std::size_t geval_n = 0;
    std::size_t bert_n = 0;
    for (const MetricRow* r : rows) {
        rouge += r->rouge_l;
        bleu += r->bleu_4;
        if (r->geval) {
            geval += *r->geval;
            ++geval_n;
        }
        if (r->bertscore) {
            bert += *r->bertscore;
            ++bert_n;
        }
    }
    const double n = static_cast<double>(rows.size());
    a.rouge_l = rouge / n;
    a.bleu_4 = bleu / n;
    if (geval_n) a.geval = geval / static_cast<double>(geval_n);
    if (bert_n) a.bertscore = bert / static_cast<double>(bert_n);
    return a;
}

/// Means in input order; optional per-category sub-aggregates (rows without
/// a category fall under "uncategorized").
inline MetricReport aggregate_report(std::vector<MetricRow> rows, bool group_by_category = false) {
    if (rows.empty()) fail(ErrorKind::EmptyInput, "no metric rows");
    for (const auto& r : rows) {
        if (!(r.rouge_l >= 0.0 && r.rouge_l <= 1.0) || !(r.bleu_4 >= 0.0 && r.bleu_4 <= 1.0)) {
            fail(ErrorKind::InvalidConfig, r.query_id + ": metric outside [0, 1]");
        }
        if (r.geval && (*r.geval < 1 || *r.geval > 5)) fail(ErrorKind::ScoreOutOfRange, r.query_id + ": geval");
    }
    MetricReport report;
    report.per_example = std::move(rows);
    std::vector<const MetricRow*> all;
    for (const auto& r : report.per_example) all.push_back(&r);
    report.aggregates = aggregate_rows(all);
    if (group_by_category) {
        std::map<std::string, std::vector<const MetricRow*>> groups;
        for (const auto& r : report.per_example) groups[r.category.value_or(std::string(kUncategorized))].push_back(&r);
        report.group_by.emplace();
        for (const auto& [name, members] : groups) (*report.group_by)[name] = aggregate_rows(members);
    }
    return report;
}

inline nlohmann::ordered_json to_json(const MetricAggregates& a) {
    nlohmann::ordered_json j;
    j["count"] = a.count;
    j["rouge_l"] = a.rouge_l;
    j["bleu_4"] = a.bleu_4;
    j["geval"] = a.geval ? nlohmann::ordered_json(*a.geval) : nlohmann::ordered_json(nullptr);
    if (a.bertscore) j["bertscore"] = *a.bertscore;
    return j;
}

inline nlohmann::ordered_json to_json(const MetricReport& report) {
    nlohmann::ordered_json j;
    j["per_example"] = nlohmann::ordered_json::array();
    for (const auto& r : report.per_example) {
        nlohmann::ordered_json row;
        row["query_id"] = r.query_id;
        row["rouge_l"] = r.rouge_l;
        row["bleu_4"] = r.bleu_4;
        row["geval"] = r.geval ? nlohmann::ordered_json(*r.geval) : nlohmann::ordered_json(nullptr);
        if (r.bertscore) row["bertscore"] = *r.bertscore;
        row["category"] = r.category ? nlohmann::ordered_json(*r.category) : nlohmann::ordered_json(nullptr);
        j["per_example"].push_back(std::move(row));
    }
    j["aggregates"] = to_json(report.aggregates);
    if (report.group_by) {
        j["group_by"] = nlohmann::ordered_json::object();
        for (const auto& [name, agg] : *report.group_by) j["group_by"][name] = to_json(agg);
    }
    return j;
}

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string format_fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

/// Columns: query_id, rouge_l, bleu_4, geval, category.
inline std::string to_csv(const MetricReport& report) {
    std::string out = "query_id,rouge_l,bleu_4,geval,category\n";
    for (const auto& r : report.per_example) {
        out += csv_field(r.query_id) + "," + format_fixed(r.rouge_l) + "," + format_fixed(r.bleu_4) + "," +
               (r.geval ? std::to_string(*r.geval) : std::string()) + "," + csv_field(r.category.value_or("")) + "\n";
    }
    return out;
}

}  // namespace vrag
