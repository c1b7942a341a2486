// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include "tempad/tokenizer.hpp"

#include <array>
#include <fstream>
#include <numeric>

#include "tempad/error.hpp"
#include "tempad/rng.hpp"

namespace tempad {

namespace {

constexpr std::array<char, 4> chunk_magic{'T', 'A', 'C', 'K'};

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b.data(), 4);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
        return false;
    }
    v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

}  // namespace

std::vector<TokenId> encode(std::string_view text) {
    std::vector<TokenId> out;
    out.reserve(text.size());
    for (const char c : text) {
        out.push_back(static_cast<TokenId>(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string decode(std::span<const TokenId> tokens) {
    std::string out;
    out.reserve(tokens.size());
    for (const TokenId t : tokens) {
        require(t >= 0 && t < 256, ErrorCategory::invalid_argument,
                "token id " + std::to_string(t) + " has no byte value");
        out.push_back(static_cast<char>(static_cast<unsigned char>(t)));
    }
    return out;
}

PackResult pack_chunks(std::span<const Document> docs, std::size_t chunk_len, std::uint64_t shuffle_seed,
                       TailPolicy tail, int slice_id) {
    require(chunk_len >= 2, ErrorCategory::invalid_argument, "chunk_len must be >= 2");
    require(!docs.empty(), ErrorCategory::empty_input, "cannot pack an empty document list");

    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(shuffle_seed);
    rng.shuffle(std::span(order));

    std::vector<TokenId> stream;
    for (const auto i : order) {
        stream.push_back(vocab::bos);
        for (const char c : docs[i].text) {
            stream.push_back(static_cast<TokenId>(static_cast<unsigned char>(c)));
        }
        stream.push_back(vocab::sep);
    }

    PackResult result;
    result.framed_tokens = stream.size();
    const std::size_t full = stream.size() / chunk_len;
    const std::size_t rest = stream.size() % chunk_len;
    for (std::size_t c = 0; c < full; ++c) {
        const auto first = stream.begin() + static_cast<std::ptrdiff_t>(c * chunk_len);
        result.chunks.push_back(Chunk{std::vector<TokenId>(first, first + static_cast<std::ptrdiff_t>(chunk_len)),
                                      slice_id});
    }
    if (rest > 0) {
        if (tail == TailPolicy::pad) {
            std::vector<TokenId> last(stream.end() - static_cast<std::ptrdiff_t>(rest), stream.end());
            result.padding = chunk_len - rest;
            last.resize(chunk_len, vocab::pad);
            result.chunks.push_back(Chunk{std::move(last), slice_id});
        } else {
            result.dropped = rest;
        }
    }
    return result;
}

void write_chunk_dump(const std::filesystem::path& path, std::span<const Chunk> chunks, std::size_t chunk_len) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.is_open(), ErrorCategory::io, "cannot write chunk dump " + path.string());
    out.write(chunk_magic.data(), chunk_magic.size());
    put_u32(out, static_cast<std::uint32_t>(chunk_len));
    for (const auto& chunk : chunks) {
        require(chunk.tokens.size() == chunk_len, ErrorCategory::invalid_argument, "chunk length mismatch");
        for (const TokenId t : chunk.tokens) {
            put_u32(out, static_cast<std::uint32_t>(t));
        }
    }
    require(out.good(), ErrorCategory::io, "write failed for " + path.string());
}

std::vector<Chunk> read_chunk_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.is_open(), ErrorCategory::io, "cannot open chunk dump " + path.string());
    std::array<char, 4> magic{};
    std::uint32_t chunk_len = 0;
    require(in.read(magic.data(), 4) && magic == chunk_magic && get_u32(in, chunk_len) && chunk_len >= 2,
            ErrorCategory::corrupt_file, "bad chunk dump header in " + path.string());
    std::vector<Chunk> chunks;
    while (in.peek() != std::char_traits<char>::eof()) {
        Chunk chunk;
        chunk.tokens.resize(chunk_len);
        for (auto& t : chunk.tokens) {
            std::uint32_t v = 0;
            require(get_u32(in, v) && v < static_cast<std::uint32_t>(vocab::size), ErrorCategory::corrupt_file,
                    "truncated or invalid chunk dump " + path.string());
            t = static_cast<TokenId>(v);
        }
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

}  // namespace tempad
