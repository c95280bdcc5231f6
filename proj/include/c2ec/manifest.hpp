// Copyright the c2ec authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "c2ec/errors.hpp"

namespace c2ec {

// FNV-1a 64-bit over the file contents; stable across runs and platforms.
inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file for digest: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv1a64:") + hex;
}

// Snapshot of one correction run: the exact configuration and data files
// used, the backend, and coarse timing.
struct RunManifest {
    nlohmann::json config;
    std::string weights_digest = "-";
    std::string tables_digest = "-";
    std::string template_digest = "-";
    std::string model_digest = "-";
    std::string backend;
    long sentences = 0;
    long chars = 0;
    double total_ms = 0;

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"config", config},
            {"digests", {{"weights", weights_digest},
                         {"tables", tables_digest},
                         {"template", template_digest},
                         {"model", model_digest}}},
            {"backend", backend},
            {"timing", {{"total_ms", total_ms},
                        {"sentences", sentences},
                        {"chars", chars},
                        {"ms_per_sentence", sentences > 0 ? total_ms / sentences : 0.0},
                        {"ms_per_char", chars > 0 ? total_ms / chars : 0.0}}},
        };
    }
};

}  // namespace c2ec
