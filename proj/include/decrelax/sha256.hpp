#pragma once

#include <cstdint>
#include <string>

namespace decrelax {

// Hex-encoded SHA-256 digest of a byte string (used to fingerprint problem
// files in reports).
std::string sha256_hex(const std::string& data);

}  // namespace decrelax
