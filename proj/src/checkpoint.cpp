#include "addps/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "addps/errors.hpp"

namespace addps {
namespace {

// Integers and doubles are stored little-endian regardless of host order.
template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const std::string& what) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    raise(Errc::ParseError, "checkpoint truncated while reading " + what);
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedArray>& arrays) {
  std::ofstream os(path, std::ios::binary);
  if (!os) raise(Errc::IoError, "cannot open checkpoint for writing: " + path);
  os.write(kCheckpointMagic, static_cast<std::streamsize>(std::strlen(kCheckpointMagic)));
  write_le<std::uint64_t>(os, arrays.size());
  for (const NamedArray& a : arrays) {
    if (a.data.size() != a.element_count()) {
      raise(Errc::DimensionMismatch,
            "array '" + a.name + "' has " + std::to_string(a.data.size()) +
                " values but shape implies " + std::to_string(a.element_count()));
    }
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.name.size()));
    os.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.shape.size()));
    for (std::size_t d : a.shape) write_le<std::uint64_t>(os, d);
    for (double v : a.data) write_le<double>(os, v);
  }
  if (!os) raise(Errc::IoError, "write failed for checkpoint: " + path);
}

std::vector<NamedArray> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(Errc::IoError, "cannot open checkpoint: " + path);
  const std::size_t magic_len = std::strlen(kCheckpointMagic);
  std::string magic(magic_len, '\0');
  if (!is.read(magic.data(), static_cast<std::streamsize>(magic_len)) || magic != kCheckpointMagic) {
    raise(Errc::ParseError, "bad checkpoint magic in " + path);
  }
  const auto count = read_le<std::uint64_t>(is, "array count");
  std::vector<NamedArray> arrays;
  arrays.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedArray a;
    const auto name_len = read_le<std::uint32_t>(is, "name length");
    a.name.resize(name_len);
    if (!is.read(a.name.data(), name_len)) raise(Errc::ParseError, "checkpoint truncated in name");
    const auto ndim = read_le<std::uint32_t>(is, "rank of '" + a.name + "'");
    a.shape.resize(ndim);
    for (auto& d : a.shape) d = read_le<std::uint64_t>(is, "shape of '" + a.name + "'");
    a.data.resize(a.element_count());
    for (auto& v : a.data) v = read_le<double>(is, "data of '" + a.name + "'");
    arrays.push_back(std::move(a));
  }
  // read trailing whitespace-free EOF check is intentionally omitted: extra
  // bytes after the last array are ignored so the format can grow a footer.
  return arrays;
}

const NamedArray& find_array(const std::vector<NamedArray>& arrays, const std::string& name) {
  for (const NamedArray& a : arrays) {
    if (a.name == name) return a;
  }
  raise(Errc::ParseError, "checkpoint has no array named '" + name + "'");
}

}  // namespace addps
