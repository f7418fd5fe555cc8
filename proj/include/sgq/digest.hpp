#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace sgq {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(const std::string& s);

}  // namespace sgq
