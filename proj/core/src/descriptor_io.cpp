#include "seasonmatch/descriptor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "seasonmatch/error.hpp"
#include "seasonmatch/util.hpp"

namespace seasonmatch {

namespace {
constexpr char kMagic[4] = {'S', 'M', 'D', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}
}  // namespace

void save_descriptors(const DescriptorSet& set, const std::filesystem::path& path) {
  if (set.dim <= 0 || set.count() == 0) throw DataError("refusing to write empty descriptor set");
  std::string out(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(set.count()));
  put_u32(out, static_cast<std::uint32_t>(set.dim));
  out.reserve(out.size() + set.data.size() * 4);
  for (float v : set.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  write_file_atomic(path, out);
}

void save_descriptors(const std::vector<Descriptor>& descriptors,
                      const std::filesystem::path& path) {
  if (descriptors.empty()) throw DataError("refusing to write empty descriptor set");
  DescriptorSet set;
  set.dim = descriptors.front().dim();
  set.data.reserve(descriptors.size() * static_cast<std::size_t>(set.dim));
  for (const Descriptor& d : descriptors) {
    if (d.dim() != set.dim)
      throw DataError("descriptor set has mixed dimensions: " + std::to_string(d.dim()) +
                      " vs " + std::to_string(set.dim));
    set.data.insert(set.data.end(), d.values.begin(), d.values.end());
  }
  save_descriptors(set, path);
}

DescriptorSet load_descriptors(const std::filesystem::path& path) {
  const std::string in = read_file(path);
  if (in.size() < 12 || std::memcmp(in.data(), kMagic, 4) != 0)
    throw DataError("not an SMD1 descriptor file: " + path.string());
  auto u32_at = [&](std::size_t pos) {
    const auto* p = reinterpret_cast<const unsigned char*>(in.data() + pos);
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  };
  const std::uint32_t count = u32_at(4);
  const std::uint32_t dim = u32_at(8);
  const std::size_t need = 12 + static_cast<std::size_t>(count) * dim * 4;
  if (count == 0 || dim == 0 || in.size() != need)
    throw DataError("descriptor file size mismatch: " + path.string());
  DescriptorSet set;
  set.dim = static_cast<int>(dim);
  set.data.resize(static_cast<std::size_t>(count) * dim);
  for (std::size_t i = 0; i < set.data.size(); ++i) {
    set.data[i] = std::bit_cast<float>(u32_at(12 + i * 4));
    if (!std::isfinite(set.data[i]))
      throw DataError("non-finite descriptor value in " + path.string());
  }
  return set;
}

}  // namespace seasonmatch
