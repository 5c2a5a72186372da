#pragma once

#include <filesystem>
#include <vector>

#include "seasonmatch/backbone.hpp"

namespace seasonmatch {

// Row-major descriptor matrix as stored in SMD1 files.
struct DescriptorSet {
  int dim = 0;
  std::vector<float> data;  // count x dim

  int count() const { return dim == 0 ? 0 : static_cast<int>(data.size()) / dim; }
  const float* row(int i) const { return data.data() + static_cast<std::size_t>(i) * dim; }
};

// SMD1 descriptor file: magic "SMD1", u32 count, u32 dim, then
// count*dim float32, little-endian.
void save_descriptors(const DescriptorSet& set, const std::filesystem::path& path);
void save_descriptors(const std::vector<Descriptor>& descriptors,
                      const std::filesystem::path& path);
DescriptorSet load_descriptors(const std::filesystem::path& path);

}  // namespace seasonmatch
