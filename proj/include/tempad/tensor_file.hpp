// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tempad/matrix.hpp"

namespace tempad::inline TEMPAD_PRECISION_NS {

/// Binary container shared by model checkpoints and adapters:
///
///   magic[4] | u32 version | u32 meta_len | meta (UTF-8 "key=value\n" lines)
///   u32 tensor_count | tensors... | u64 FNV-1a of all preceding bytes
///
/// Each tensor is u32 name_len | name | u32 ndims | u32 dims[ndims] | f32 data,
/// all little-endian, data row-major.
struct TensorFile {
    static constexpr std::uint32_t current_version = 1;

    std::array<char, 4> magic{};
    std::uint32_t version = current_version;
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::pair<std::string, Matrix>> tensors;

    const std::string* find_meta(const std::string& key) const;
    const std::string& meta(const std::string& key) const;  // throws schema error when missing
    const Matrix& tensor(const std::string& name) const;     // throws corrupt_file when missing
};

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);

/// Validates magic, version and checksum; nothing is returned on failure.
TensorFile read_tensor_file(const std::filesystem::path& path, std::array<char, 4> expected_magic);

/// Writes to a sibling temp file and renames it into place.
void write_tensor_file_atomic(const std::filesystem::path& path, const TensorFile& file);

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept;

}  // namespace tempad
