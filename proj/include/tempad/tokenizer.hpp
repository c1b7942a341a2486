// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tempad/corpus.hpp"

namespace tempad {

using TokenId = std::int32_t;

/// Byte-level vocabulary: ids 0..255 are raw bytes, followed by four reserved
/// control tokens.
namespace vocab {
inline constexpr TokenId pad = 256;
inline constexpr TokenId bos = 257;
inline constexpr TokenId eos = 258;
inline constexpr TokenId sep = 259;
inline constexpr int size = 260;
}  // namespace vocab

std::vector<TokenId> encode(std::string_view text);

/// Control tokens have no textual form and are rejected like out-of-range ids.
std::string decode(std::span<const TokenId> tokens);

struct Chunk {
    std::vector<TokenId> tokens;
    int slice_id = 0;
};

enum class TailPolicy { drop, pad };

struct PackResult {
    std::vector<Chunk> chunks;
    std::size_t framed_tokens = 0;  // total tokens after BOS/SEP framing
    std::size_t dropped = 0;        // tokens lost to the trailing partial chunk
    std::size_t padding = 0;        // PAD tokens appended in pad mode
};

/// Shuffles documents by seed, frames each as BOS + bytes + SEP, concatenates
/// and cuts every chunk_len tokens.
PackResult pack_chunks(std::span<const Document> docs, std::size_t chunk_len, std::uint64_t shuffle_seed,
                       TailPolicy tail = TailPolicy::drop, int slice_id = 0);

/// Debug dump: 4-byte magic, uint32 chunk_len, then uint32 ids (little-endian).
void write_chunk_dump(const std::filesystem::path& path, std::span<const Chunk> chunks, std::size_t chunk_len);
std::vector<Chunk> read_chunk_dump(const std::filesystem::path& path);

}  // namespace tempad
