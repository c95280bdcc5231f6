// Copyright the c2ec authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "c2ec/edit_weights.hpp"
#include "c2ec/errors.hpp"

namespace c2ec {

// (m+1) x (n+1) grid of accumulated costs: rows index source prefix length,
// columns target prefix length. Row 0 is a prefix sum of Insert weights,
// column 0 of Delete weights.
class DistanceMatrix {
  public:
    DistanceMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), cells_(rows * cols, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return cells_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return cells_[i * cols_ + j]; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

  private:
    std::size_t rows_, cols_;
    std::vector<double> cells_;
};

// A typed edit with its source-side position. Insert carries no src_char,
// Delete no tgt_char. For Insert, src_index is the source position BEFORE
// which the character is inserted.
struct EditOp {
    EditType kind = EditType::Keep;
    std::size_t src_index = 0;
    std::optional<char32_t> src_char;
    std::optional<char32_t> tgt_char;

    bool operator==(const EditOp&) const = default;
};

struct LevenshteinResult {
    double cost = 0.0;
    DistanceMatrix matrix;
};

// Position-wise weighted distance; only defined for equal-length strings
// (the conventional same-length correction mode).
inline double weighted_hamming(std::u32string_view x, std::u32string_view y,
                               const EditWeightConfig& cfg) {
    if (x.size() != y.size())
        throw LengthMismatchError("weighted_hamming: lengths differ (" +
                                  std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
    double cost = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) cost += cfg.substitution_cost(x[i], y[i]);
    return cost;
}

inline DistanceMatrix levenshtein_matrix(std::u32string_view x, std::u32string_view y,
                                         const EditWeightConfig& cfg) {
    const std::size_t m = x.size(), n = y.size();
    const double ins = cfg.weight(EditType::Insert);
    const double del = cfg.weight(EditType::Delete);
    DistanceMatrix d(m + 1, n + 1);
    for (std::size_t j = 1; j <= n; ++j) d.at(0, j) = d.at(0, j - 1) + ins;
    for (std::size_t i = 1; i <= m; ++i) d.at(i, 0) = d.at(i - 1, 0) + del;
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            const double sub = d.at(i - 1, j - 1) + cfg.substitution_cost(x[i - 1], y[j - 1]);
            const double dele = d.at(i - 1, j) + del;
            const double inse = d.at(i, j - 1) + ins;
            d.at(i, j) = std::min({sub, dele, inse});
        }
    }
    return d;
}

inline LevenshteinResult weighted_levenshtein(std::u32string_view x, std::u32string_view y,
                                              const EditWeightConfig& cfg) {
    DistanceMatrix d = levenshtein_matrix(x, y, cfg);
    const double cost = d.at(x.size(), y.size());
    return LevenshteinResult{cost, std::move(d)};
}

// Cost-only two-row variant; identical arithmetic to the full matrix.
inline double weighted_levenshtein_cost(std::u32string_view x, std::u32string_view y,
                                        const EditWeightConfig& cfg) {
    const std::size_t m = x.size(), n = y.size();
    const double ins = cfg.weight(EditType::Insert);
    const double del = cfg.weight(EditType::Delete);
    std::vector<double> prev(n + 1, 0.0), cur(n + 1, 0.0);
    for (std::size_t j = 1; j <= n; ++j) prev[j] = prev[j - 1] + ins;
    for (std::size_t i = 1; i <= m; ++i) {
        cur[0] = prev[0] + del;
        for (std::size_t j = 1; j <= n; ++j) {
            const double sub = prev[j - 1] + cfg.substitution_cost(x[i - 1], y[j - 1]);
            const double dele = prev[j] + del;
            const double inse = cur[j - 1] + ins;
            cur[j] = std::min({sub, dele, inse});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

// Per-step distance delta: the full weighted distance between the newly
// consumed input substring x[a..b) and the token characters t.
inline double incremental_distance(std::u32string_view x, std::size_t a, std::size_t b,
                                   std::u32string_view t, const EditWeightConfig& cfg) {
    if (b > x.size() || a > b)
        throw IndexOutOfRangeError("incremental_distance: bad substring [" + std::to_string(a) +
                                   ", " + std::to_string(b) + ") of length-" +
                                   std::to_string(x.size()) + " input");
    return weighted_levenshtein_cost(x.substr(a, b - a), t, cfg);
}

struct EndIndexResult {
    std::size_t end = 0;
    double cost = 0.0;
};

// Scans end indices b in [a, min(len(x), a + len(t) + max_extra_deletes)]
// and returns the cheapest one; ties go to the smallest b so later tokens
// keep as much input as possible. One DP over the widest substring yields
// every candidate cost: row i of the matrix is Dist(x[a..a+i), t).
inline EndIndexResult best_end_index(std::u32string_view x, std::size_t a, std::u32string_view t,
                                     std::size_t max_extra_deletes, const EditWeightConfig& cfg) {
    if (a > x.size())
        throw IndexOutOfRangeError("best_end_index: a=" + std::to_string(a) + " past end");
    const std::size_t bmax = std::min(x.size(), a + t.size() + max_extra_deletes);
    DistanceMatrix d = levenshtein_matrix(x.substr(a, bmax - a), t, cfg);
    EndIndexResult best{a, d.at(0, t.size())};
    for (std::size_t i = 1; i <= bmax - a; ++i) {
        const double c = d.at(i, t.size());
        if (c < best.cost) best = {a + i, c};
    }
    return best;
}

// Backtraces one optimal alignment from a cost matrix. Tie order on the
// backward scan: substitution, then delete, then insert, which biases
// substitutions toward the left of the string.
inline std::vector<EditOp> edit_script(std::u32string_view x, std::u32string_view y,
                                       const DistanceMatrix& d, const EditWeightConfig& cfg) {
    const double ins = cfg.weight(EditType::Insert);
    const double del = cfg.weight(EditType::Delete);
    std::vector<EditOp> ops;
    std::size_t i = x.size(), j = y.size();
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 &&
            d.at(i, j) == d.at(i - 1, j - 1) + cfg.substitution_cost(x[i - 1], y[j - 1])) {
            ops.push_back({cfg.classify(x[i - 1], y[j - 1]), i - 1, x[i - 1], y[j - 1]});
            --i;
            --j;
        } else if (i > 0 && d.at(i, j) == d.at(i - 1, j) + del) {
            ops.push_back({EditType::Delete, i - 1, x[i - 1], std::nullopt});
            --i;
        } else {
            ops.push_back({EditType::Insert, i, std::nullopt, y[j - 1]});
            --j;
        }
    }
    std::reverse(ops.begin(), ops.end());
    return ops;
}

inline std::vector<EditOp> edit_script(std::u32string_view x, std::u32string_view y,
                                       const EditWeightConfig& cfg) {
    return edit_script(x, y, levenshtein_matrix(x, y, cfg), cfg);
}

}  // namespace c2ec
