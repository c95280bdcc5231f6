// Copyright the c2ec authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
#pragma once

#include <cstddef>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "c2ec/distance.hpp"
#include "c2ec/edit_weights.hpp"
#include "c2ec/errors.hpp"
#include "c2ec/unicode.hpp"

namespace c2ec {

struct CorpusPair {
    std::u32string source;
    std::u32string reference;
    std::size_t id = 0;
};

enum class CorpusFormat { Tsv, Jsonl };

// Removes all Unicode whitespace and folds full-width punctuation to its
// half-width equivalent. Idempotent.
inline std::u32string normalize(std::u32string_view text) {
    std::u32string out;
    out.reserve(text.size());
    for (char32_t c : text) {
        if (is_unicode_space(c)) continue;
        if (c >= 0xFF01 && c <= 0xFF5E) {
            out.push_back(c - 0xFEE0);
            continue;
        }
        switch (c) {
            case 0x3001: out.push_back(U','); break;   // 、
            case 0x3002: out.push_back(U'.'); break;   // 。
            case 0x3008: out.push_back(U'<'); break;   // 〈
            case 0x3009: out.push_back(U'>'); break;   // 〉
            case 0x300A: out.push_back(U'<'); break;   // 《
            case 0x300B: out.push_back(U'>'); break;   // 》
            case 0x300C: out.push_back(U'"'); break;   // 「
            case 0x300D: out.push_back(U'"'); break;   // 」
            case 0x300E: out.push_back(U'"'); break;   // 『
            case 0x300F: out.push_back(U'"'); break;   // 』
            case 0x3010: out.push_back(U'['); break;   // 【
            case 0x3011: out.push_back(U']'); break;   // 】
            case 0x3014: out.push_back(U'['); break;   // 〔
            case 0x3015: out.push_back(U']'); break;   // 〕
            default: out.push_back(c);
        }
    }
    return out;
}

// Unit-cost configuration for edit extraction: keep 0, everything else 1.
inline const EditWeightConfig& unit_edit_weights() {
    static const EditWeightConfig cfg = [] {
        EditWeightConfig c;
        for (std::size_t k = 0; k < kEditTypeCount; ++k)
            c.set_weight(static_cast<EditType>(k), 1.0);
        c.set_weight(EditType::Keep, 0.0);
        return c;
    }();
    return cfg;
}

// Unit-weight Levenshtein alignment between normalized texts; returns the
// non-keep operations of one optimal alignment (substitution preferred over
// delete over insert on the backward scan).
inline std::vector<EditOp> extract_edits(std::u32string_view src, std::u32string_view tgt) {
    std::vector<EditOp> ops = edit_script(src, tgt, unit_edit_weights());
    std::vector<EditOp> out;
    for (const EditOp& op : ops)
        if (op.kind != EditType::Keep) out.push_back(op);
    return out;
}

struct MetricReport {
    double char_precision = 0, char_recall = 0, char_f1 = 0;
    double sent_precision = 0, sent_recall = 0, sent_f1 = 0;
    long true_positives = 0, system_edits = 0, gold_edits = 0;
    long sent_tp = 0, sent_system = 0, sent_gold = 0;
    long gold_sub = 0, gold_red = 0, gold_mis = 0;
    long sentences = 0;

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"char", {{"precision", char_precision},
                      {"recall", char_recall},
                      {"f1", char_f1},
                      {"true_positives", true_positives},
                      {"system_edits", system_edits},
                      {"gold_edits", gold_edits}}},
            {"sentence", {{"precision", sent_precision},
                          {"recall", sent_recall},
                          {"f1", sent_f1},
                          {"true_positives", sent_tp},
                          {"system_positives", sent_system},
                          {"gold_positives", sent_gold}}},
            {"gold_edit_types", {{"sub", gold_sub}, {"red", gold_red}, {"mis", gold_mis}}},
            {"sentences", sentences},
        };
    }

    std::string to_table() const {
        char buf[512];
        std::string out;
        std::snprintf(buf, sizeof(buf), "%-10s  P %7.4f  R %7.4f  F1 %7.4f   (tp %ld / sys %ld / gold %ld)\n",
                      "characters", char_precision, char_recall, char_f1, true_positives,
                      system_edits, gold_edits);
        out += buf;
        std::snprintf(buf, sizeof(buf), "%-10s  P %7.4f  R %7.4f  F1 %7.4f   (tp %ld / sys %ld / gold %ld)\n",
                      "sentences", sent_precision, sent_recall, sent_f1, sent_tp, sent_system,
                      sent_gold);
        out += buf;
        std::snprintf(buf, sizeof(buf), "%-10s  SUB %ld  RED %ld  MIS %ld\n", "gold edits",
                      gold_sub, gold_red, gold_mis);
        out += buf;
        return out;
    }
};

inline double f1_of(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

struct EvalTriple {
    std::u32string source;
    std::u32string reference;
    std::u32string prediction;
};

namespace detail {

inline void tally_gold_types(const std::vector<EditOp>& gold, MetricReport& rep) {
    for (const EditOp& op : gold) {
        switch (op.kind) {
            case EditType::Insert: rep.gold_mis++; break;   // source missed a char
            case EditType::Delete: rep.gold_red++; break;   // source had a redundant char
            default: rep.gold_sub++; break;
        }
    }
}

}  // namespace detail

// Character-level correction metrics, micro-averaged over the corpus. A
// system edit counts as a true positive only when an identical
// (kind, src_index, src_char, tgt_char) gold edit exists, each gold edit
// matched at most once. Texts must already be normalized.
inline MetricReport char_metrics(const std::vector<EvalTriple>& triples) {
    MetricReport rep;
    rep.sentences = static_cast<long>(triples.size());
    for (const EvalTriple& t : triples) {
        std::vector<EditOp> gold = extract_edits(t.source, t.reference);
        std::vector<EditOp> sys = extract_edits(t.source, t.prediction);
        rep.gold_edits += static_cast<long>(gold.size());
        rep.system_edits += static_cast<long>(sys.size());
        detail::tally_gold_types(gold, rep);
        std::vector<bool> used(gold.size(), false);
        for (const EditOp& op : sys) {
            for (std::size_t g = 0; g < gold.size(); ++g) {
                if (!used[g] && gold[g] == op) {
                    used[g] = true;
                    rep.true_positives++;
                    break;
                }
            }
        }
    }
    rep.char_precision = rep.system_edits > 0
                             ? static_cast<double>(rep.true_positives) / rep.system_edits
                             : 0.0;
    rep.char_recall = rep.gold_edits > 0
                          ? static_cast<double>(rep.true_positives) / rep.gold_edits
                          : 0.0;
    rep.char_f1 = f1_of(rep.char_precision, rep.char_recall);
    return rep;
}

// Sentence-level correction metrics: a true positive is an erroneous
// sentence whose prediction matches the reference exactly.
inline void sentence_metrics(const std::vector<EvalTriple>& triples, MetricReport& rep) {
    for (const EvalTriple& t : triples) {
        const bool gold_positive = t.reference != t.source;
        const bool sys_positive = t.prediction != t.source;
        if (gold_positive) rep.sent_gold++;
        if (sys_positive) rep.sent_system++;
        if (gold_positive && sys_positive && t.prediction == t.reference) rep.sent_tp++;
    }
    rep.sent_precision =
        rep.sent_system > 0 ? static_cast<double>(rep.sent_tp) / rep.sent_system : 0.0;
    rep.sent_recall = rep.sent_gold > 0 ? static_cast<double>(rep.sent_tp) / rep.sent_gold : 0.0;
    rep.sent_f1 = f1_of(rep.sent_precision, rep.sent_recall);
}

struct EvalOptions {
    bool exclude_length_changed = false;  // the conventional same-length-only protocol
};

// Normalizes lazily and computes the full report.
inline MetricReport evaluate_corpus(const std::vector<CorpusPair>& pairs,
                                    const std::vector<std::u32string>& predictions,
                                    const EvalOptions& opts = {}) {
    if (pairs.size() != predictions.size())
        throw LineCountMismatchError("evaluate: corpus has " + std::to_string(pairs.size()) +
                                     " sentences but predictions file has " +
                                     std::to_string(predictions.size()));
    std::vector<EvalTriple> triples;
    triples.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        EvalTriple t{normalize(pairs[i].source), normalize(pairs[i].reference),
                     normalize(predictions[i])};
        if (opts.exclude_length_changed && t.source.size() != t.reference.size()) continue;
        triples.push_back(std::move(t));
    }
    MetricReport rep = char_metrics(triples);
    sentence_metrics(triples, rep);
    return rep;
}

struct CorpusStats {
    long sentences = 0;
    long erroneous = 0;
    long sub = 0, red = 0, mis = 0;
    double avg_source_len = 0;

    long total_edits() const { return sub + red + mis; }
    double erroneous_ratio() const {
        return sentences > 0 ? static_cast<double>(erroneous) / sentences : 0.0;
    }

    nlohmann::json to_json() const {
        const long total = total_edits();
        auto pct = [total](long n) { return total > 0 ? 100.0 * n / total : 0.0; };
        return nlohmann::json{
            {"sentences", sentences},
            {"erroneous_sentence_pct", 100.0 * erroneous_ratio()},
            {"avg_source_len", avg_source_len},
            {"edits", {{"sub", sub}, {"red", red}, {"mis", mis}, {"total", total}}},
            {"edit_pct", {{"sub", pct(sub)}, {"red", pct(red)}, {"mis", pct(mis)}}},
        };
    }
};

// Error-type statistics over gold edits of the normalized corpus.
inline CorpusStats corpus_stats(const std::vector<CorpusPair>& pairs) {
    CorpusStats st;
    st.sentences = static_cast<long>(pairs.size());
    double len_sum = 0;
    for (const CorpusPair& p : pairs) {
        const std::u32string src = normalize(p.source);
        const std::u32string ref = normalize(p.reference);
        len_sum += static_cast<double>(src.size());
        if (src != ref) st.erroneous++;
        for (const EditOp& op : extract_edits(src, ref)) {
            switch (op.kind) {
                case EditType::Insert: st.mis++; break;
                case EditType::Delete: st.red++; break;
                default: st.sub++; break;
            }
        }
    }
    st.avg_source_len = st.sentences > 0 ? len_sum / st.sentences : 0.0;
    return st;
}

// tsv: one "source<TAB>reference" per line. jsonl: {"source": ..,
// "target": ..} per line. Blank lines are skipped; source == reference is a
// legal error-free pair.
inline std::vector<CorpusPair> load_corpus(const std::string& path, CorpusFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open corpus: " + path);
    std::vector<CorpusPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        CorpusPair pair;
        pair.id = pairs.size();
        if (format == CorpusFormat::Tsv) {
            const std::size_t tab = line.find('\t');
            if (tab == std::string::npos)
                throw ParseError("tsv row without a tab separator", line_no);
            if (line.find('\t', tab + 1) != std::string::npos)
                throw ParseError("tsv row with more than two fields", line_no);
            pair.source = utf8_to_u32(std::string_view(line).substr(0, tab));
            pair.reference = utf8_to_u32(std::string_view(line).substr(tab + 1));
        } else {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(std::string("jsonl: ") + e.what(), line_no);
            }
            if (!j.is_object() || !j.contains("source") || !j.contains("target"))
                throw ParseError("jsonl row must be {\"source\": .., \"target\": ..}", line_no);
            pair.source = utf8_to_u32(j["source"].get<std::string>());
            pair.reference = utf8_to_u32(j["target"].get<std::string>());
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

inline std::vector<std::u32string> load_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::vector<std::u32string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(utf8_to_u32(line));
    }
    return lines;
}

}  // namespace c2ec
