// Copyright the c2ec authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "c2ec/errors.hpp"
#include "c2ec/unicode.hpp"

namespace c2ec {

enum class EditType {
    Keep = 0,
    SubSamePinyin,
    SubSimilarPinyin,
    SubSimilarShape,
    SubOther,
    Insert,
    Delete,
};

inline constexpr std::size_t kEditTypeCount = 7;

inline const char* edit_type_name(EditType t) {
    switch (t) {
        case EditType::Keep: return "keep";
        case EditType::SubSamePinyin: return "sub_same_pinyin";
        case EditType::SubSimilarPinyin: return "sub_similar_pinyin";
        case EditType::SubSimilarShape: return "sub_similar_shape";
        case EditType::SubOther: return "sub_other";
        case EditType::Insert: return "insert";
        case EditType::Delete: return "delete";
    }
    return "?";
}

// Per-edit-type costs plus the confusion tables that decide which
// substitution class a character pair falls into.
class EditWeightConfig {
  public:
    EditWeightConfig() { weights_ = default_weights(); }

    static std::array<double, kEditTypeCount> default_weights() {
        std::array<double, kEditTypeCount> w{};
        w[static_cast<std::size_t>(EditType::Keep)] = 0.04;
        w[static_cast<std::size_t>(EditType::SubSamePinyin)] = 3.75;
        w[static_cast<std::size_t>(EditType::SubSimilarPinyin)] = 4.85;
        w[static_cast<std::size_t>(EditType::SubSimilarShape)] = 5.40;
        w[static_cast<std::size_t>(EditType::SubOther)] = 8.91;
        w[static_cast<std::size_t>(EditType::Insert)] = 8.50;
        w[static_cast<std::size_t>(EditType::Delete)] = 9.00;
        return w;
    }

    double weight(EditType t) const { return weights_[static_cast<std::size_t>(t)]; }

    void set_weight(EditType t, double w) {
        if (w < 0) throw ConfigError(std::string("negative weight for ") + edit_type_name(t));
        weights_[static_cast<std::size_t>(t)] = w;
    }

    // Most specific class first; a pair matching several relations takes the
    // cheapest one. Characters absent from every table fall through to
    // SubOther.
    EditType classify(std::optional<char32_t> src, std::optional<char32_t> tgt) const {
        if (!src && !tgt) throw IndexOutOfRangeError("classify_edit: both characters absent");
        if (!src) return EditType::Insert;
        if (!tgt) return EditType::Delete;
        if (*src == *tgt) return EditType::Keep;
        if (same_pinyin(*src, *tgt)) return EditType::SubSamePinyin;
        if (similar_pinyin(*src, *tgt)) return EditType::SubSimilarPinyin;
        if (similar_shape(*src, *tgt)) return EditType::SubSimilarShape;
        return EditType::SubOther;
    }

    double substitution_cost(char32_t src, char32_t tgt) const {
        return weight(classify(src, tgt));
    }

    bool same_pinyin(char32_t a, char32_t b) const {
        auto ia = pinyin_.find(a);
        auto ib = pinyin_.find(b);
        if (ia == pinyin_.end() || ib == pinyin_.end()) return false;
        // Any pronunciation of one matching any of the other counts.
        for (const auto& p : ia->second)
            if (std::find(ib->second.begin(), ib->second.end(), p) != ib->second.end()) return true;
        return false;
    }

    bool similar_pinyin(char32_t a, char32_t b) const {
        auto ia = pinyin_.find(a);
        auto ib = pinyin_.find(b);
        if (ia == pinyin_.end() || ib == pinyin_.end()) return false;
        for (const auto& p : ia->second)
            for (const auto& q : ib->second)
                if (pinyin_similar_.count(p + "\x1f" + q)) return true;
        return false;
    }

    bool similar_shape(char32_t a, char32_t b) const {
        auto it = shape_similar_.find(a);
        return it != shape_similar_.end() && it->second.count(b) > 0;
    }

    // Characters reachable from `c` through any confusion relation. Used by
    // the decoder to propose substitution candidates.
    const std::vector<char32_t>& substitution_candidates(char32_t c) const {
        static const std::vector<char32_t> kEmpty;
        auto it = neighbors_.find(c);
        return it == neighbors_.end() ? kEmpty : it->second;
    }

    void add_pinyin(char32_t c, std::vector<std::string> prons) { pinyin_[c] = std::move(prons); }

    void add_pinyin_similar(const std::string& p, const std::string& q) {
        pinyin_similar_.insert(p + "\x1f" + q);
        pinyin_similar_.insert(q + "\x1f" + p);
    }

    void add_shape_similar(char32_t a, char32_t b) {
        shape_similar_[a].insert(b);
        shape_similar_[b].insert(a);
    }

    // Builds the char -> substitution-candidate index. Call after the tables
    // are fully populated.
    void rebuild_index() {
        neighbors_.clear();
        std::unordered_map<std::string, std::vector<char32_t>> by_pron;
        for (const auto& [c, prons] : pinyin_)
            for (const auto& p : prons) by_pron[p].push_back(c);
        auto link = [this](char32_t a, char32_t b) {
            if (a == b) return;
            auto& v = neighbors_[a];
            if (std::find(v.begin(), v.end(), b) == v.end()) v.push_back(b);
        };
        for (const auto& [c, prons] : pinyin_) {
            for (const auto& p : prons) {
                for (char32_t other : by_pron[p]) link(c, other);
                // Similar-pinyin neighbours: chars whose pronunciation is
                // related to p.
                for (const auto& [q, chars] : by_pron) {
                    if (q != p && pinyin_similar_.count(p + "\x1f" + q))
                        for (char32_t other : chars) link(c, other);
                }
            }
        }
        for (const auto& [a, set] : shape_similar_)
            for (char32_t b : set) link(a, b);
        for (auto& [c, v] : neighbors_) std::sort(v.begin(), v.end());
    }

    // Weight file: JSON object keyed by edit-type name; missing keys keep the
    // built-in defaults.
    void load_weights_json(const nlohmann::json& j) {
        if (!j.is_object()) throw ConfigError("weight file: expected a JSON object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            bool known = false;
            for (std::size_t k = 0; k < kEditTypeCount; ++k) {
                if (it.key() == edit_type_name(static_cast<EditType>(k))) {
                    if (!it.value().is_number())
                        throw ConfigError("weight file: non-numeric value for " + it.key());
                    set_weight(static_cast<EditType>(k), it.value().get<double>());
                    known = true;
                    break;
                }
            }
            if (!known) throw ConfigError("weight file: unknown edit type \"" + it.key() + "\"");
        }
        validate();
    }

    // Confusion-table file: {"pinyin": {char: [pron]}, "pinyin_similar":
    // [[pron, pron]], "shape_similar": [[char, char]]}.
    void load_tables_json(const nlohmann::json& j) {
        if (!j.is_object()) throw ConfigError("table file: expected a JSON object");
        if (j.contains("pinyin")) {
            for (auto it = j["pinyin"].begin(); it != j["pinyin"].end(); ++it) {
                std::u32string key = utf8_to_u32(it.key());
                if (key.size() != 1)
                    throw ConfigError("table file: pinyin key must be a single character: " + it.key());
                std::vector<std::string> prons;
                for (const auto& p : it.value()) prons.push_back(p.get<std::string>());
                add_pinyin(key[0], std::move(prons));
            }
        }
        if (j.contains("pinyin_similar")) {
            for (const auto& pair : j["pinyin_similar"]) {
                if (!pair.is_array() || pair.size() != 2)
                    throw ConfigError("table file: pinyin_similar entries must be pairs");
                add_pinyin_similar(pair[0].get<std::string>(), pair[1].get<std::string>());
            }
        }
        if (j.contains("shape_similar")) {
            for (const auto& pair : j["shape_similar"]) {
                if (!pair.is_array() || pair.size() != 2)
                    throw ConfigError("table file: shape_similar entries must be pairs");
                std::u32string a = utf8_to_u32(pair[0].get<std::string>());
                std::u32string b = utf8_to_u32(pair[1].get<std::string>());
                if (a.size() != 1 || b.size() != 1)
                    throw ConfigError("table file: shape_similar entries must be single characters");
                add_shape_similar(a[0], b[0]);
            }
        }
        rebuild_index();
    }

    void load_weights_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open weight file: " + path);
        nlohmann::json j;
        in >> j;
        load_weights_json(j);
    }

    void load_tables_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open table file: " + path);
        nlohmann::json j;
        in >> j;
        load_tables_json(j);
    }

    void validate() const {
        for (std::size_t k = 0; k < kEditTypeCount; ++k)
            if (weights_[k] < 0)
                throw ConfigError(std::string("negative weight for ") +
                                  edit_type_name(static_cast<EditType>(k)));
        const double keep = weight(EditType::Keep);
        for (EditType t : {EditType::SubSamePinyin, EditType::SubSimilarPinyin,
                           EditType::SubSimilarShape, EditType::SubOther})
            if (keep >= weight(t))
                throw ConfigError("keep weight must be below every substitution weight");
    }

  private:
    std::array<double, kEditTypeCount> weights_{};
    std::unordered_map<char32_t, std::vector<std::string>> pinyin_;
    std::unordered_set<std::string> pinyin_similar_;  // "p\x1fq", both directions
    std::unordered_map<char32_t, std::unordered_set<char32_t>> shape_similar_;
    std::unordered_map<char32_t, std::vector<char32_t>> neighbors_;
};

}  // namespace c2ec
