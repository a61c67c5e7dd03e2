#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "stmi/tensor.hpp"

// Binary tensor container, bit-exact and endian-stable:
//   bytes 0..3   magic "STT1" (53 54 54 31)
//   byte  4      dtype code: 0 = f32, 1 = f64, 2 = u8
//   byte  5      rank r
//   then         r x u64 little-endian dims
//   then         row-major payload, little-endian
// Malformed files raise FormatError naming the byte offset of the problem.
namespace stmi::stt {

enum class Dtype : std::uint8_t { f32 = 0, f64 = 1, u8 = 2 };

// Writes to a temporary file in the same directory, then renames into place,
// so a crash never leaves a half-written tensor at `path`. Values must be
// exactly representable in the requested dtype (u8: integers in [0, 255];
// f32: float-representable, which reduced-precision mode guarantees).
void save_tensor(const Tensor& t, const std::string& path, Dtype dtype);

// Loads any STT tensor into a double-backed Tensor (all three dtypes embed
// exactly). Pass expectations to turn a surprising dtype or rank into a
// FormatError instead of a silent widening.
Tensor load_tensor(const std::string& path, std::optional<Dtype> expect_dtype = {},
                   std::optional<std::size_t> expect_rank = {});

// Dtype stored at `path` without reading the payload.
Dtype probe_dtype(const std::string& path);

} // namespace stmi::stt
