#include "mslstm/tensor_file.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mslstm/error.hpp"

namespace mslstm {
namespace {

constexpr char kMagic[4] = {'M', 'S', 'L', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kMaxRank = 5;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <typename U>
U get_le(const std::uint8_t* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  const std::uint8_t* take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      fail(ErrorCode::kIo, std::string("truncated MSLT data reading ") + what + ": expected " +
                               std::to_string(pos_ + n) + " bytes, got " +
                               std::to_string(bytes_.size()));
    }
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t NdArray::element_count() const {
  std::uint64_t n = 1;
  for (std::uint64_t d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_tensor(const NdArray& array, DType dtype) {
  if (array.dims.size() > kMaxRank) {
    fail(ErrorCode::kUsage, "MSLT supports rank <= 5, got " + std::to_string(array.dims.size()));
  }
  if (array.element_count() != array.data.size()) {
    fail(ErrorCode::kShape, "NdArray data length does not match its dims");
  }
  for (double v : array.data) {
    if (!std::isfinite(v)) fail(ErrorCode::kUsage, "refusing to write a non-finite value");
  }
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  const std::size_t width = dtype == DType::kF32 ? 4 : 8;
  out.reserve(10 + 8 * array.dims.size() + width * array.data.size());
  put_le(out, kVersion);
  out.push_back(static_cast<std::uint8_t>(dtype));
  out.push_back(static_cast<std::uint8_t>(array.dims.size()));
  for (std::uint64_t d : array.dims) put_le(out, d);
  for (double v : array.data) {
    if (dtype == DType::kF32) {
      put_le(out, static_cast<float>(v));
    } else {
      put_le(out, v);
    }
  }
  return out;
}

NdArray decode_tensor(const std::vector<std::uint8_t>& bytes, DType* dtype_out) {
  Reader in(bytes);
  const std::uint8_t* magic = in.take(4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    char shown[5] = {static_cast<char>(magic[0]), static_cast<char>(magic[1]),
                     static_cast<char>(magic[2]), static_cast<char>(magic[3]), 0};
    fail(ErrorCode::kFormat, std::string("bad MSLT magic '") + shown + "', expected 'MSLT'");
  }
  const auto version = get_le<std::uint32_t>(in.take(4, "version"));
  if (version != kVersion) {
    fail(ErrorCode::kFormat, "unsupported MSLT version " + std::to_string(version));
  }
  const std::uint8_t code = *in.take(1, "dtype");
  if (code > 1) fail(ErrorCode::kFormat, "unknown MSLT dtype code " + std::to_string(code));
  const auto dtype = static_cast<DType>(code);
  const std::uint8_t rank = *in.take(1, "rank");
  if (rank > kMaxRank) fail(ErrorCode::kFormat, "MSLT rank " + std::to_string(rank) + " exceeds 5");
  NdArray a;
  for (std::uint8_t i = 0; i < rank; ++i) a.dims.push_back(get_le<std::uint64_t>(in.take(8, "dims")));
  const std::uint64_t count = a.element_count();
  const std::size_t width = dtype == DType::kF32 ? 4 : 8;
  const std::uint8_t* payload = in.take(count * width, "payload");
  a.data.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    if (dtype == DType::kF32) {
      a.data[i] = std::bit_cast<float>(get_le<std::uint32_t>(payload + 4 * i));
    } else {
      a.data[i] = std::bit_cast<double>(get_le<std::uint64_t>(payload + 8 * i));
    }
  }
  if (dtype_out) *dtype_out = dtype;
  return a;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

void write_tensor(const std::filesystem::path& path, const NdArray& array, DType dtype) {
  write_file_bytes(path, encode_tensor(array, dtype));
}

NdArray read_tensor(const std::filesystem::path& path, DType* dtype) {
  try {
    return decode_tensor(read_file_bytes(path), dtype);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

NdArray to_ndarray(const Tensor& t) {
  const Shape& s = t.shape();
  return NdArray{{s.b, s.c, s.h, s.w}, t.vec()};
}

Tensor to_tensor(const NdArray& a) {
  if (a.dims.empty() || a.dims.size() > 4) {
    fail(ErrorCode::kShape, "to_tensor needs rank 1..4, got " + std::to_string(a.dims.size()));
  }
  std::array<std::size_t, 4> d{1, 1, 1, 1};
  const std::size_t skip = 4 - a.dims.size();
  for (std::size_t i = 0; i < a.dims.size(); ++i) d[skip + i] = a.dims[i];
  return Tensor(Shape{d[0], d[1], d[2], d[3]}, a.data);
}

}  // namespace mslstm
