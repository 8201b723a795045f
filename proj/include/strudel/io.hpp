#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace strudel {

// Writes through a sibling temp file and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// 64-bit FNV-1a, used for config hashes, file digests and the toy tokenizer.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace strudel
