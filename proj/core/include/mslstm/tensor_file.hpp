#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mslstm/tensor.hpp"

namespace mslstm {

/// Array of rank <= 5 as stored in MSLT files.
struct NdArray {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;

  std::uint64_t element_count() const;
  bool operator==(const NdArray&) const = default;
};

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

/// MSLT layout, all little-endian:
///   "MSLT" | u32 version (1) | u8 dtype | u8 rank | rank x u64 dims | payload
std::vector<std::uint8_t> encode_tensor(const NdArray& array, DType dtype = DType::kF64);
NdArray decode_tensor(const std::vector<std::uint8_t>& bytes, DType* dtype = nullptr);

void write_tensor(const std::filesystem::path& path, const NdArray& array,
                  DType dtype = DType::kF64);
NdArray read_tensor(const std::filesystem::path& path, DType* dtype = nullptr);

NdArray to_ndarray(const Tensor& t);
// Accepts rank 1..4; missing leading dims become 1.
Tensor to_tensor(const NdArray& a);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace mslstm
