// Copyright the c2ec authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <mutex>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "c2ec/errors.hpp"
#include "c2ec/lm.hpp"
#include "c2ec/unicode.hpp"

namespace c2ec {

// Client for the JSON-over-HTTP log-prob protocol:
//   POST /v1/tokenize {"text": str} -> {"ids": [int], "pieces": [str]}
//   POST /v1/logprobs {"context": [int], "top_k": int, "temperature": float}
//        -> {"tokens": [int], "logprobs": [float], "entropy": float}
// Any non-200 response or transport failure maps to BackendUnavailableError.
//
// The logprobs response carries token ids only, so surfaces are resolved
// from a piece cache fed by every tokenize response; ids the cache has not
// seen yet come back with an empty surface and are usable for scoring but
// not as decoder candidates.
class RemoteLm : public LmBackend {
  public:
    explicit RemoteLm(std::string base_url, int eos_id = 2, int max_inflight = 4,
                      int timeout_sec = 60)
        : base_url_(std::move(base_url)),
          eos_id_(eos_id),
          timeout_sec_(timeout_sec),
          inflight_(max_inflight > 0 ? max_inflight : 1) {}

    TokenDistribution next_token_logprobs(const LmContext& ctx, int top_k,
                                          double temperature) const override {
        if (top_k < 1) throw ConfigError("top_k must be >= 1");
        if (temperature <= 0) throw ConfigError("temperature must be positive");
        nlohmann::json req{{"context", ctx.ids}, {"top_k", top_k}, {"temperature", temperature}};
        nlohmann::json res = post("/v1/logprobs", req);
        if (!res.contains("tokens") || !res.contains("logprobs") || !res.contains("entropy"))
            throw BackendUnavailableError("logprobs response missing fields");
        const auto& ids = res["tokens"];
        const auto& lps = res["logprobs"];
        if (ids.size() != lps.size())
            throw BackendUnavailableError("logprobs response: tokens/logprobs length mismatch");
        TokenDistribution dist;
        dist.entropy = res["entropy"].get<double>();
        if (!std::isfinite(dist.entropy) || dist.entropy < 0)
            throw BackendUnavailableError("logprobs response: bad entropy value");
        dist.entries.reserve(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const int id = ids[i].get<int>();
            const double lp = lps[i].get<double>();
            if (!std::isfinite(lp))
                throw BackendUnavailableError("logprobs response: non-finite logprob");
            dist.entries.push_back({Token{id, piece_of(id)}, lp});
        }
        std::sort(dist.entries.begin(), dist.entries.end(), [](const auto& a, const auto& b) {
            if (a.logprob != b.logprob) return a.logprob > b.logprob;
            return a.token.id < b.token.id;
        });
        return dist;
    }

    std::vector<Token> tokenize(std::u32string_view text) const override {
        nlohmann::json req{{"text", u32_to_utf8(text)}};
        nlohmann::json res = post("/v1/tokenize", req);
        if (!res.contains("ids") || !res.contains("pieces"))
            throw BackendUnavailableError("tokenize response missing fields");
        const auto& ids = res["ids"];
        const auto& pieces = res["pieces"];
        if (ids.size() != pieces.size())
            throw BackendUnavailableError("tokenize response: ids/pieces length mismatch");
        std::vector<Token> out;
        out.reserve(ids.size());
        std::lock_guard lock(cache_mutex_);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const int id = ids[i].get<int>();
            std::u32string piece = utf8_to_u32(pieces[i].get<std::string>());
            piece_cache_[id] = piece;
            out.push_back(Token{id, std::move(piece)});
        }
        return out;
    }

    std::u32string detokenize(std::span<const int> ids) const override {
        std::u32string out;
        std::lock_guard lock(cache_mutex_);
        for (int id : ids) {
            if (id == eos_id_) continue;
            auto it = piece_cache_.find(id);
            if (it == piece_cache_.end())
                throw UnknownTokenError("no cached surface for token id " + std::to_string(id));
            out += it->second;
        }
        return out;
    }

    int eos_id() const override { return eos_id_; }
    std::string descriptor() const override { return "http(" + base_url_ + ")"; }

  private:
    std::u32string piece_of(int id) const {
        std::lock_guard lock(cache_mutex_);
        auto it = piece_cache_.find(id);
        return it == piece_cache_.end() ? std::u32string{} : it->second;
    }

    nlohmann::json post(const std::string& path, const nlohmann::json& body) const {
        inflight_.acquire();
        struct Release {
            std::counting_semaphore<>& sem;
            ~Release() { sem.release(); }
        } release{inflight_};

        httplib::Client client(base_url_);
        client.set_connection_timeout(timeout_sec_, 0);
        client.set_read_timeout(timeout_sec_, 0);
        client.set_write_timeout(timeout_sec_, 0);
        auto res = client.Post(path, body.dump(), "application/json");
        if (!res)
            throw BackendUnavailableError("cannot reach " + base_url_ + path + ": " +
                                          httplib::to_string(res.error()));
        if (res->status != 200)
            throw BackendUnavailableError(base_url_ + path + " returned HTTP " +
                                          std::to_string(res->status));
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw BackendUnavailableError(std::string("bad JSON from server: ") + e.what());
        }
    }

    std::string base_url_;
    int eos_id_;
    int timeout_sec_;
    mutable std::counting_semaphore<> inflight_;
    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<int, std::u32string> piece_cache_;
};

}  // namespace c2ec
