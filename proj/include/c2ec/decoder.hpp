// Copyright the c2ec authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "c2ec/distance.hpp"
#include "c2ec/edit_weights.hpp"
#include "c2ec/errors.hpp"
#include "c2ec/lm.hpp"

namespace c2ec {

enum class DecodeMode { Tfpf, C2ec };

inline const char* decode_mode_name(DecodeMode m) {
    return m == DecodeMode::Tfpf ? "tfpf" : "c2ec";
}

inline DecodeMode decode_mode_from_name(const std::string& s) {
    if (s == "tfpf") return DecodeMode::Tfpf;
    if (s == "c2ec") return DecodeMode::C2ec;
    throw ConfigError("unknown mode \"" + s + "\" (expected tfpf or c2ec)");
}

struct DecoderConfig {
    int beam_size = 8;
    double alpha = 2.5;               // length reward per extra character
    double gamma = 1.0;               // distance coefficient
    double prompt_temperature = 1.5;  // scoring temperature of the prompt channel
    int max_extra_deletes = 2;
    DecodeMode mode = DecodeMode::C2ec;
    bool enable_faithfulness = true;  // lambda = 1 + H; off means lambda = 1
    bool enable_length_reward = true;
    int lm_topk = 20;
    bool temperature_on_pure = false;  // apply prompt_temperature to the pure channel too
    bool entropy_from_prompt = false;  // take H from the prompt channel instead of the pure one
    bool normalize_entropy = false;    // divide H by ln(vocab size) when the backend knows it

    double pure_temperature() const { return temperature_on_pure ? prompt_temperature : 1.0; }

    void validate() const {
        if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
        if (gamma < 0) throw ConfigError("gamma must be >= 0");
        if (prompt_temperature <= 0) throw ConfigError("prompt_temperature must be positive");
        if (max_extra_deletes < 0) throw ConfigError("max_extra_deletes must be >= 0");
        if (lm_topk < 1) throw ConfigError("lm_topk must be >= 1");
    }

    // All fields optional; absent fields keep their defaults.
    static DecoderConfig from_json(const nlohmann::json& j) {
        if (!j.is_object()) throw ConfigError("decoder config: expected a JSON object");
        DecoderConfig c;
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& k = it.key();
            const auto& v = it.value();
            if (k == "beam_size") c.beam_size = v.get<int>();
            else if (k == "alpha") c.alpha = v.get<double>();
            else if (k == "gamma") c.gamma = v.get<double>();
            else if (k == "prompt_temperature") c.prompt_temperature = v.get<double>();
            else if (k == "max_extra_deletes") c.max_extra_deletes = v.get<int>();
            else if (k == "mode") c.mode = decode_mode_from_name(v.get<std::string>());
            else if (k == "enable_faithfulness") c.enable_faithfulness = v.get<bool>();
            else if (k == "enable_length_reward") c.enable_length_reward = v.get<bool>();
            else if (k == "lm_topk") c.lm_topk = v.get<int>();
            else if (k == "temperature_on_pure") c.temperature_on_pure = v.get<bool>();
            else if (k == "entropy_from_prompt") c.entropy_from_prompt = v.get<bool>();
            else if (k == "normalize_entropy") c.normalize_entropy = v.get<bool>();
            else throw ConfigError("decoder config: unknown field \"" + k + "\"");
        }
        c.validate();
        return c;
    }

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"beam_size", beam_size},
            {"alpha", alpha},
            {"gamma", gamma},
            {"prompt_temperature", prompt_temperature},
            {"max_extra_deletes", max_extra_deletes},
            {"mode", decode_mode_name(mode)},
            {"enable_faithfulness", enable_faithfulness},
            {"enable_length_reward", enable_length_reward},
            {"lm_topk", lm_topk},
            {"temperature_on_pure", temperature_on_pure},
            {"entropy_from_prompt", entropy_from_prompt},
            {"normalize_entropy", normalize_entropy},
        };
    }

    static DecoderConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open decoder config: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("decoder config: ") + e.what());
        }
        return from_json(j);
    }
};

// Accumulated score components. distortion and length_bonus hold the
// lambda-scaled magnitudes, so the combined score is always
// prompt_lp + pure_lp - distortion + length_bonus.
struct ScoreBreakdown {
    double prompt_lp = 0.0;
    double pure_lp = 0.0;
    double distortion = 0.0;     // >= 0
    double length_bonus = 0.0;   // >= 0

    double total() const { return prompt_lp + pure_lp - distortion + length_bonus; }

    nlohmann::json to_json() const {
        return nlohmann::json{{"prompt_lp", prompt_lp},
                              {"pure_lp", pure_lp},
                              {"distortion", distortion},
                              {"length_bonus", length_bonus},
                              {"total", total()}};
    }
};

// A partial output plus how much of the input it has consumed. end_indices
// records the consumed index after each token so a finished hypothesis can
// be re-scored from scratch.
struct Hypothesis {
    std::vector<Token> tokens;
    std::size_t consumed = 0;
    ScoreBreakdown score;
    bool finished = false;
    std::u32string surface;
    std::vector<std::size_t> end_indices;
};

struct ScoreContext {
    std::u32string_view input;
    const EditWeightConfig& weights;
    const DecoderConfig& cfg;
};

// lambda = 1 + H with H taken from the configured channel's full-distribution
// entropy. The reward amplifies the distance penalty when the model is
// uncertain.
inline double faithfulness_lambda(const ScoreContext& ctx, const TokenDistribution& prompt_dist,
                                  const TokenDistribution& pure_dist) {
    if (!ctx.cfg.enable_faithfulness) return 1.0;
    const TokenDistribution& src = ctx.cfg.entropy_from_prompt ? prompt_dist : pure_dist;
    double h = src.entropy;
    if (ctx.cfg.normalize_entropy && src.vocab_size > 1)
        h /= std::log(static_cast<double>(src.vocab_size));
    return 1.0 + h;
}

// One generation step: both LM terms for the token plus the lambda-scaled
// distance delta and length reward. In tfpf mode the prompt term is dropped
// and the delta is position-wise Hamming cost over the aligned input slice,
// with b forced to prev.consumed + len(t).
inline ScoreBreakdown step_score(const ScoreContext& ctx, const Hypothesis& prev, const Token& t,
                                 std::size_t b, const TokenDistribution& prompt_dist,
                                 const TokenDistribution& pure_dist) {
    const DecoderConfig& cfg = ctx.cfg;
    const double lambda = faithfulness_lambda(ctx, prompt_dist, pure_dist);
    double delta;
    if (cfg.mode == DecodeMode::Tfpf) {
        if (b != prev.consumed + t.chars.size() || b > ctx.input.size())
            throw IndexOutOfRangeError("step_score: tfpf mode requires an aligned end index");
        delta = weighted_hamming(ctx.input.substr(prev.consumed, t.chars.size()), t.chars,
                                 ctx.weights);
    } else {
        delta = incremental_distance(ctx.input, prev.consumed, b, t.chars, ctx.weights);
    }
    ScoreBreakdown s = prev.score;
    if (cfg.mode == DecodeMode::C2ec) s.prompt_lp += prompt_dist.logprob_or_floor(t.id);
    s.pure_lp += pure_dist.logprob_or_floor(t.id);
    s.distortion += lambda * cfg.gamma * delta;
    if (cfg.enable_length_reward && !t.chars.empty())
        s.length_bonus += lambda * cfg.alpha * static_cast<double>(t.chars.size() - 1);
    return s;
}

// End-of-sequence handling: unconsumed input within the deletion window is
// charged as trailing deletions; hypotheses with more leftover input are
// discarded. In tfpf mode nothing may be left over.
inline std::optional<Hypothesis> finalize_hypothesis(const ScoreContext& ctx, Hypothesis hyp,
                                                     double lambda) {
    const std::size_t remaining = ctx.input.size() - hyp.consumed;
    const std::size_t window =
        ctx.cfg.mode == DecodeMode::Tfpf ? 0 : static_cast<std::size_t>(ctx.cfg.max_extra_deletes);
    if (remaining > window) return std::nullopt;
    if (remaining > 0)
        hyp.score.distortion += lambda * ctx.cfg.gamma * ctx.weights.weight(EditType::Delete) *
                                static_cast<double>(remaining);
    hyp.consumed = ctx.input.size();
    hyp.finished = true;
    return hyp;
}

struct DecodeSession {
    const LmBackend* prompt_lm = nullptr;  // unused in tfpf mode
    const LmBackend* pure_lm = nullptr;
    const EditWeightConfig* weights = nullptr;
    std::vector<int> prompt_ids;
};

namespace detail {

// Longest input span tried for vocabulary-aligned keep tokens.
inline constexpr std::size_t kMaxKeepSpan = 4;

inline LmContext hypothesis_context(const DecodeSession& s, const Hypothesis& hyp, bool prompted) {
    LmContext ctx;
    if (prompted) ctx.ids = s.prompt_ids;
    ctx.ids.reserve(ctx.ids.size() + hyp.tokens.size());
    for (const Token& t : hyp.tokens) ctx.ids.push_back(t.id);
    return ctx;
}

inline std::string hypothesis_key(const Hypothesis& h) {
    std::string key;
    for (const Token& t : h.tokens) {
        key += std::to_string(t.id);
        key += ':';
    }
    key += '|';
    key += u32_to_utf8(h.surface);
    return key;
}

inline bool hypothesis_better(const Hypothesis& a, const Hypothesis& b) {
    const double ta = a.score.total(), tb = b.score.total();
    if (ta != tb) return ta > tb;
    if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size();
    if (a.surface != b.surface) return a.surface < b.surface;
    return a.consumed < b.consumed;
}

}  // namespace detail

// Expands one live hypothesis: keep-path tokens aligned with the remaining
// input, confusion-set substitutions of the next input character, the top-k
// of the guiding distribution, and end-of-sequence when the leftover input
// fits the deletion window. Every candidate is paired with its best end
// index.
inline std::vector<Hypothesis> expand(const Hypothesis& hyp, std::u32string_view x,
                                      const DecodeSession& s, const DecoderConfig& cfg) {
    if (hyp.finished) throw Error("expand: hypothesis already finished");
    const bool c2ec = cfg.mode == DecodeMode::C2ec;
    const ScoreContext sctx{x, *s.weights, cfg};
    const LmBackend& pure = *s.pure_lm;

    const LmContext pure_ctx = detail::hypothesis_context(s, hyp, false);
    TokenDistribution pure_dist = pure.next_token_logprobs(pure_ctx, cfg.lm_topk,
                                                           cfg.pure_temperature());
    TokenDistribution prompt_dist;
    if (c2ec) {
        const LmContext prompt_ctx = detail::hypothesis_context(s, hyp, true);
        prompt_dist = s.prompt_lm->next_token_logprobs(prompt_ctx, cfg.lm_topk,
                                                       cfg.prompt_temperature);
    }
    const TokenDistribution& guide = c2ec ? prompt_dist : pure_dist;
    const double lambda = faithfulness_lambda(sctx, prompt_dist, pure_dist);

    // Candidate tokens, deduplicated by (id, surface): UNK-mapped characters
    // share an id but differ in surface.
    std::vector<Token> cands;
    auto add = [&cands](const Token& t) {
        if (t.chars.empty()) return;
        for (const Token& c : cands)
            if (c.id == t.id && c.chars == t.chars) return;
        cands.push_back(t);
    };
    for (std::size_t len = 1;
         len <= detail::kMaxKeepSpan && hyp.consumed + len <= x.size(); ++len) {
        if (auto t = pure.find_token(x.substr(hyp.consumed, len))) add(*t);
    }
    if (hyp.consumed < x.size()) {
        for (char32_t c : s.weights->substitution_candidates(x[hyp.consumed]))
            if (auto t = pure.find_token(std::u32string_view(&c, 1))) add(*t);
    }
    for (const TokenEntry& e : guide.entries) {
        if (e.token.id == pure.eos_id() || e.token.id == pure.unk_id()) continue;
        add(e.token);
    }

    const std::size_t max_out_len = x.size() + static_cast<std::size_t>(cfg.max_extra_deletes);
    std::vector<Hypothesis> out;
    for (const Token& t : cands) {
        if (hyp.surface.size() + t.chars.size() > max_out_len) continue;
        std::size_t b;
        if (c2ec) {
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
        out.push_back(std::move(next));
    }

    const std::size_t remaining = x.size() - hyp.consumed;
    const std::size_t window =
        c2ec ? static_cast<std::size_t>(cfg.max_extra_deletes) : std::size_t{0};
    if (remaining <= window) {
        Hypothesis eos = hyp;
        if (c2ec) eos.score.prompt_lp += prompt_dist.logprob_or_floor(s.prompt_lm->eos_id());
        eos.score.pure_lp += pure_dist.logprob_or_floor(pure.eos_id());
        if (auto fin = finalize_hypothesis(sctx, std::move(eos), lambda))
            out.push_back(std::move(*fin));
    }
    return out;
}

struct DecodeResult {
    std::u32string output;
    ScoreBreakdown score;
    Hypothesis hypothesis;
};

// Beam search over (partial output, consumed index) states. Deterministic:
// ties break toward fewer tokens, then the lexicographically smaller
// surface. Finished hypotheses are kept aside, so the answer is the best
// sequence that ever finished.
inline DecodeResult beam_search(std::u32string_view x, const DecodeSession& s,
                                const DecoderConfig& cfg) {
    cfg.validate();
    if (x.empty()) return {};

    Hypothesis root;
    std::vector<Hypothesis> live{root};
    std::unordered_map<std::string, Hypothesis> completed;

    auto merge = [](std::unordered_map<std::string, Hypothesis>& pool, Hypothesis&& h) {
        std::string key = detail::hypothesis_key(h);
        auto it = pool.find(key);
        if (it == pool.end()) {
            pool.emplace(std::move(key), std::move(h));
        } else if (h.score.total() > it->second.score.total() ||
                   (h.score.total() == it->second.score.total() &&
                    h.consumed < it->second.consumed)) {
            it->second = std::move(h);
        }
    };

    // Every non-EOS token adds at least one output character and output
    // length is capped, so the loop is bounded.
    const std::size_t max_steps = x.size() + static_cast<std::size_t>(cfg.max_extra_deletes) + 1;
    for (std::size_t step = 0; step <= max_steps && !live.empty(); ++step) {
        std::unordered_map<std::string, Hypothesis> pool;
        for (const Hypothesis& h : live)
            for (Hypothesis& cand : expand(h, x, s, cfg)) merge(pool, std::move(cand));

        std::vector<Hypothesis> ranked;
        ranked.reserve(pool.size());
        for (auto& [key, h] : pool) ranked.push_back(std::move(h));
        std::sort(ranked.begin(), ranked.end(), detail::hypothesis_better);
        if (ranked.size() > static_cast<std::size_t>(cfg.beam_size))
            ranked.resize(static_cast<std::size_t>(cfg.beam_size));

        live.clear();
        for (Hypothesis& h : ranked) {
            if (h.finished)
                merge(completed, std::move(h));
            else
                live.push_back(std::move(h));
        }
    }

    if (completed.empty())
        throw NoHypothesisError("beam search discarded every hypothesis; "
                                "max_extra_deletes may be too small for this input");
    const Hypothesis* best = nullptr;
    for (const auto& [key, h] : completed)
        if (!best || detail::hypothesis_better(h, *best)) best = &h;
    return DecodeResult{best->surface, best->score, *best};
}

// Re-scores a finished (tokens, end index) path from scratch. Used to check
// that accumulated scores match a cold re-evaluation.
inline ScoreBreakdown rescore_path(std::u32string_view x, const DecodeSession& s,
                                   const DecoderConfig& cfg, const std::vector<Token>& tokens,
                                   const std::vector<std::size_t>& end_indices) {
    if (tokens.size() != end_indices.size())
        throw IndexOutOfRangeError("rescore_path: tokens and end indices disagree");
    const bool c2ec = cfg.mode == DecodeMode::C2ec;
    const ScoreContext sctx{x, *s.weights, cfg};
    Hypothesis hyp;
    double lambda = 1.0;
    TokenDistribution prompt_dist, pure_dist;
    auto query = [&](const Hypothesis& h) {
        pure_dist = s.pure_lm->next_token_logprobs(detail::hypothesis_context(s, h, false),
                                                   cfg.lm_topk, cfg.pure_temperature());
        if (c2ec)
            prompt_dist = s.prompt_lm->next_token_logprobs(detail::hypothesis_context(s, h, true),
                                                           cfg.lm_topk, cfg.prompt_temperature);
        lambda = faithfulness_lambda(sctx, prompt_dist, pure_dist);
    };
    for (std::size_t k = 0; k < tokens.size(); ++k) {
        query(hyp);
        hyp.score = step_score(sctx, hyp, tokens[k], end_indices[k], prompt_dist, pure_dist);
        hyp.tokens.push_back(tokens[k]);
        hyp.consumed = end_indices[k];
        hyp.surface += tokens[k].chars;
        hyp.end_indices.push_back(end_indices[k]);
    }
    query(hyp);
    if (c2ec) hyp.score.prompt_lp += prompt_dist.logprob_or_floor(s.prompt_lm->eos_id());
    hyp.score.pure_lp += pure_dist.logprob_or_floor(s.pure_lm->eos_id());
    auto fin = finalize_hypothesis(sctx, std::move(hyp), lambda);
    if (!fin) throw NoHypothesisError("rescore_path: path cannot finish within the window");
    return fin->score;
}

// Full correction pipeline for one sentence: build the prompt context (c2ec
// mode), run beam search, return the output characters. Empty input returns
// empty output without touching the backends.
inline DecodeResult correct_with_score(std::u32string_view x, const LmBackend& prompt_lm,
                                       const LmBackend& pure_lm, const EditWeightConfig& weights,
                                       const DecoderConfig& cfg,
                                       std::u32string_view prompt_template) {
    if (x.empty()) return {};
    DecodeSession session{&prompt_lm, &pure_lm, &weights, {}};
    if (cfg.mode == DecodeMode::C2ec)
        session.prompt_ids = build_prompt(prompt_template, x, prompt_lm).ids;
    return beam_search(x, session, cfg);
}

inline std::u32string correct(std::u32string_view x, const LmBackend& prompt_lm,
                              const LmBackend& pure_lm, const EditWeightConfig& weights,
                              const DecoderConfig& cfg, std::u32string_view prompt_template) {
    return correct_with_score(x, prompt_lm, pure_lm, weights, cfg, prompt_template).output;
}

}  // namespace c2ec
