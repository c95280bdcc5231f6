// Copyright the c2ec authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
//
// Independent oracles used by the unit and acceptance suites. These stay
// deliberately naive: exhaustive enumeration instead of dynamic programming
// or beam pruning.
#pragma once

#include <algorithm>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "c2ec/c2ec.hpp"

namespace oracle {

// Minimum cost over every monotone edit script, by brute-force recursion.
// Costs accumulate left to right, matching the DP's evaluation order, so
// equal scripts round identically.
inline double brute_force_distance(std::u32string_view x, std::u32string_view y,
                                   const c2ec::EditWeightConfig& cfg) {
    double best = std::numeric_limits<double>::infinity();
    const double ins = cfg.weight(c2ec::EditType::Insert);
    const double del = cfg.weight(c2ec::EditType::Delete);
    auto rec = [&](auto&& self, std::size_t i, std::size_t j, double acc) -> void {
        if (i == x.size() && j == y.size()) {
            best = std::min(best, acc);
            return;
        }
        if (i < x.size()) self(self, i + 1, j, acc + del);
        if (j < y.size()) self(self, i, j + 1, acc + ins);
        if (i < x.size() && j < y.size())
            self(self, i + 1, j + 1, acc + cfg.substitution_cost(x[i], y[j]));
    };
    rec(rec, 0, 0, 0.0);
    return best;
}

// Plain integer unit-cost Levenshtein distance, written independently of the
// library's weighted machinery.
inline int unit_levenshtein(std::u32string_view a, std::u32string_view b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// Replays an extracted edit script against the source string.
inline std::u32string apply_edits(std::u32string_view src,
                                  const std::vector<c2ec::EditOp>& ops) {
    std::u32string out;
    std::size_t i = 0;
    for (const c2ec::EditOp& op : ops) {
        while (i < op.src_index) out.push_back(src[i++]);
        switch (op.kind) {
            case c2ec::EditType::Insert:
                out.push_back(*op.tgt_char);
                break;
            case c2ec::EditType::Delete:
                ++i;
                break;
            default:  // keep or any substitution
                out.push_back(*op.tgt_char);
                ++i;
                break;
        }
    }
    while (i < src.size()) out.push_back(src[i++]);
    return out;
}

// Exhaustive decode: enumerates every token sequence the expansion rules can
// reach (full vocabulary as candidates, output length capped like the
// decoder) and scores each with the same per-step primitives, replacing the
// beam with complete enumeration.
struct ExhaustiveResult {
    bool found = false;
    c2ec::Hypothesis best;
};

inline void exhaustive_rec(std::u32string_view x, const c2ec::DecodeSession& s,
                           const c2ec::DecoderConfig& cfg, const c2ec::Hypothesis& hyp,
                           const std::vector<c2ec::Token>& vocab, ExhaustiveResult& result) {
    using namespace c2ec;
    const ScoreContext sctx{x, *s.weights, cfg};
    const LmContext pure_ctx = detail::hypothesis_context(s, hyp, false);
    const TokenDistribution pure_dist =
        s.pure_lm->next_token_logprobs(pure_ctx, cfg.lm_topk, cfg.pure_temperature());
    TokenDistribution prompt_dist;
    if (cfg.mode == DecodeMode::C2ec)
        prompt_dist = s.prompt_lm->next_token_logprobs(detail::hypothesis_context(s, hyp, true),
                                                       cfg.lm_topk, cfg.prompt_temperature);
    const double lambda = faithfulness_lambda(sctx, prompt_dist, pure_dist);

    const std::size_t remaining = x.size() - hyp.consumed;
    const std::size_t window =
        cfg.mode == DecodeMode::C2ec ? static_cast<std::size_t>(cfg.max_extra_deletes) : 0;
    if (remaining <= window) {
        Hypothesis eos = hyp;
        if (cfg.mode == DecodeMode::C2ec)
            eos.score.prompt_lp += prompt_dist.logprob_or_floor(s.prompt_lm->eos_id());
        eos.score.pure_lp += pure_dist.logprob_or_floor(s.pure_lm->eos_id());
        if (auto fin = finalize_hypothesis(sctx, std::move(eos), lambda)) {
            if (!result.found || detail::hypothesis_better(*fin, result.best)) {
                result.best = std::move(*fin);
                result.found = true;
            }
        }
    }

    const std::size_t max_out = x.size() + static_cast<std::size_t>(cfg.max_extra_deletes);
    for (const Token& t : vocab) {
        if (hyp.surface.size() + t.chars.size() > max_out) continue;
        std::size_t b;
        if (cfg.mode == DecodeMode::C2ec) {
            b = best_end_index(x, hyp.consumed, t.chars,
                               static_cast<std::size_t>(cfg.max_extra_deletes), *s.weights)
                    .end;
        } else {
            b = hyp.consumed + t.chars.size();
            if (b > x.size()) continue;
        }
        Hypothesis next = hyp;
        next.score = step_score(sctx, hyp, t, b, prompt_dist, pure_dist);
        next.tokens.push_back(t);
        next.consumed = b;
        next.surface += t.chars;
        next.end_indices.push_back(b);
        exhaustive_rec(x, s, cfg, next, vocab, result);
    }
}

inline ExhaustiveResult exhaustive_decode(std::u32string_view x, const c2ec::DecodeSession& s,
                                          const c2ec::DecoderConfig& cfg,
                                          const std::vector<c2ec::Token>& vocab) {
    ExhaustiveResult result;
    exhaustive_rec(x, s, cfg, c2ec::Hypothesis{}, vocab, result);
    return result;
}

// Emittable single-character vocabulary of an n-gram backend (everything but
// UNK and EOS).
inline std::vector<c2ec::Token> emittable_vocab(const c2ec::NgramLm& lm) {
    std::vector<c2ec::Token> out;
    for (int id = 0; id < static_cast<int>(lm.vocab_size()); ++id) {
        if (id == lm.eos_id() || id == lm.unk_id()) continue;
        std::u32string surface = lm.detokenize(std::vector<int>{id});
        out.push_back(c2ec::Token{id, std::move(surface)});
    }
    return out;
}

inline std::u32string random_string(std::mt19937& rng, std::u32string_view alphabet,
                                    std::size_t max_len, std::size_t min_len = 0) {
    std::uniform_int_distribution<std::size_t> len_dist(min_len, max_len);
    const std::size_t len = len_dist(rng);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::u32string s;
    for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[pick(rng)]);
    return s;
}

}  // namespace oracle
