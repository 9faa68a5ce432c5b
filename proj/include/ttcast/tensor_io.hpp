#pragma once

#include <filesystem>
#include <istream>
#include <ostream>

#include "ttcast/tensor.hpp"

namespace ttcast {

/// Binary tensor format, version 1 (all integers and floats little-endian):
///
///   "TTCT"            4 magic bytes ("TTCZ" for complex tensors)
///   version           u8, currently 1
///   order d           u32
///   extents n1..nd    u64 each
///   values            f64 each in first-index-fastest order;
///                     complex tensors store (re, im) pairs
inline constexpr std::uint8_t kTensorFormatVersion = 1;

void write_tensor(std::ostream& os, const DenseTensor& t);
DenseTensor read_tensor(std::istream& is);

void write_complex_tensor(std::ostream& os, const ComplexTensor& t);
ComplexTensor read_complex_tensor(std::istream& is);

void save_tensor(const std::filesystem::path& path, const DenseTensor& t);
DenseTensor load_tensor(const std::filesystem::path& path);

}  // namespace ttcast
