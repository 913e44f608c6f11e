#pragma once

#include <cstdint>
#include <string_view>

namespace symcluster {

/// splitmix64 finalizer; good avalanche for stream derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Derive an independent RNG stream seed from a root seed, a textual label,
/// and an index. Identical (root, label, index) always yields the same
/// stream, regardless of scheduling or worker count.
inline std::uint64_t derive_stream(std::uint64_t root, std::string_view label,
                                   std::uint64_t index = 0) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a offset basis
  for (const char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return splitmix64(splitmix64(root ^ splitmix64(h)) ^
                    splitmix64(index * 0x9e3779b97f4a7c15ull + 1));
}

}  // namespace symcluster
