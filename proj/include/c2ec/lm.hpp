// Copyright the c2ec authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "c2ec/errors.hpp"
#include "c2ec/unicode.hpp"

namespace c2ec {

struct Token {
    int id = -1;
    std::u32string chars;  // surface form; empty when the backend cannot resolve it

    bool operator==(const Token&) const = default;
};

struct TokenEntry {
    Token token;
    double logprob = 0.0;  // nats, <= 0
};

// Top-k slice of a next-token distribution. `entropy` is the entropy of the
// FULL temperature-adjusted distribution, not of the returned slice, so
// truncation cannot bias it. `vocab_size` is 0 when the backend does not
// know it (remote backends).
struct TokenDistribution {
    std::vector<TokenEntry> entries;  // sorted by logprob descending
    double entropy = 0.0;             // nats, >= 0
    std::size_t vocab_size = 0;

    const TokenEntry* find(int id) const {
        for (const auto& e : entries)
            if (e.token.id == id) return &e;
        return nullptr;
    }

    // Scores for tokens missing from the slice fall back to a floor below
    // the worst returned logprob, keeping off-list candidates alive.
    double floor_logprob() const {
        return entries.empty() ? -5.0 : entries.back().logprob - 5.0;
    }

    double logprob_or_floor(int id) const {
        const TokenEntry* e = find(id);
        return e ? e->logprob : floor_logprob();
    }
};

// Token-id sequence: prompt tokens (if any) followed by generated output
// tokens.
struct LmContext {
    std::vector<int> ids;

    LmContext() = default;
    explicit LmContext(std::vector<int> v) : ids(std::move(v)) {}

    LmContext extended(int id) const {
        LmContext c(*this);
        c.ids.push_back(id);
        return c;
    }
};

class LmBackend {
  public:
    virtual ~LmBackend() = default;

    // Top-k next tokens after dividing log-scores by `temperature` and
    // renormalizing. Temperature affects scoring only; decoding is
    // deterministic beam search.
    virtual TokenDistribution next_token_logprobs(const LmContext& ctx, int top_k,
                                                  double temperature) const = 0;

    virtual std::vector<Token> tokenize(std::u32string_view text) const = 0;

    virtual std::u32string detokenize(std::span<const int> ids) const = 0;

    virtual int eos_id() const = 0;
    virtual int unk_id() const { return -1; }

    // 0 when unknown.
    virtual std::size_t vocab_size() const { return 0; }

    virtual std::string descriptor() const = 0;

    // Sum of stepwise next-token logprobs under the growing context.
    // Backends with full-distribution access override this with an exact
    // computation; the default scores through top-k slices with the floor
    // fallback for tokens the slice misses.
    virtual double sequence_logprob(const LmContext& ctx, std::span<const int> continuation,
                                    double temperature) const {
        LmContext cur = ctx;
        double total = 0.0;
        for (int id : continuation) {
            TokenDistribution dist = next_token_logprobs(cur, scoring_top_k(), temperature);
            total += dist.logprob_or_floor(id);
            cur.ids.push_back(id);
        }
        return total;
    }

    // Exact single-token lookup used by the decoder's candidate generator:
    // a surface is a token iff it tokenizes to exactly one piece that
    // round-trips.
    virtual std::optional<Token> find_token(std::u32string_view surface) const {
        std::vector<Token> toks = tokenize(surface);
        if (toks.size() == 1 && toks[0].chars == surface) return toks[0];
        return std::nullopt;
    }

  protected:
    virtual int scoring_top_k() const { return 64; }
};

inline std::string load_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Reads a prompt template, stripping one trailing newline so the context
// ends exactly where the file's visible text does.
inline std::u32string load_template_file(const std::string& path) {
    std::string raw = load_text_file(path);
    if (!raw.empty() && raw.back() == '\n') raw.pop_back();
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    return utf8_to_u32(raw);
}

inline constexpr std::u32string_view kInputSlot = U"{INPUT}";

// Substitutes the sentence into the template's single {INPUT} slot and
// tokenizes the result. Substitution is single-pass: braces inside x are
// literals.
inline LmContext build_prompt(std::u32string_view tmpl, std::u32string_view x,
                              const LmBackend& backend) {
    const std::size_t first = tmpl.find(kInputSlot);
    if (first == std::u32string_view::npos)
        throw TemplateError("prompt template has no {INPUT} placeholder");
    if (tmpl.find(kInputSlot, first + kInputSlot.size()) != std::u32string_view::npos)
        throw TemplateError("prompt template has multiple {INPUT} placeholders");
    std::u32string text;
    text.reserve(tmpl.size() + x.size());
    text.append(tmpl.substr(0, first));
    text.append(x);
    text.append(tmpl.substr(first + kInputSlot.size()));
    std::vector<Token> toks = backend.tokenize(text);
    LmContext ctx;
    ctx.ids.reserve(toks.size());
    for (const Token& t : toks) ctx.ids.push_back(t.id);
    return ctx;
}

}  // namespace c2ec
