#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace pqpan::hash {

using Chunk = std::span<const std::uint8_t>;

/// SHAKE256 over the concatenation of `parts`, squeezed to `out_len` bytes.
std::vector<std::uint8_t> shake256(std::initializer_list<Chunk> parts,
                                   std::size_t out_len);

std::array<std::uint8_t, 32> hmac_sha256(Chunk key, Chunk message);

inline Chunk as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace pqpan::hash
