#include "seasonmatch/weights_io.hpp"

#include <bit>
#include <cstring>
#include <map>

#include "seasonmatch/error.hpp"
#include "seasonmatch/util.hpp"

namespace seasonmatch {

namespace {

constexpr char kMagic[4] = {'S', 'M', 'W', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw DataError("weights file: unexpected end of data");
  const auto* p = reinterpret_cast<const unsigned char*>(in.data() + pos);
  pos += 4;
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_record(std::string& out, const std::string& name, const std::vector<std::uint32_t>& dims,
                const std::vector<float>& payload) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.append(name);
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  std::size_t count = 1;
  for (std::uint32_t d : dims) {
    put_u32(out, d);
    count *= d;
  }
  if (count != payload.size())
    throw UsageError("weights record '" + name + "': dims do not match payload");
  for (float v : payload) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

struct Record {
  std::vector<std::uint32_t> dims;
  std::vector<float> payload;
};

}  // namespace

void save_weights(const EmbeddingModel& m, const std::filesystem::path& path) {
  std::string out(kMagic, 4);
  TensorShape s = m.arch.input_shape();
  for (std::size_t i = 0; i < m.arch.layers.size(); ++i) {
    const LayerSpec& l = m.arch.layers[i];
    if (l.kind == LayerKind::conv) {
      const ConvParams& p = m.params[i];
      put_record(out, l.name + ".weight",
                 {static_cast<std::uint32_t>(l.out_channels), static_cast<std::uint32_t>(s.c),
                  static_cast<std::uint32_t>(l.kernel), static_cast<std::uint32_t>(l.kernel)},
                 p.w);
      put_record(out, l.name + ".bias", {static_cast<std::uint32_t>(l.out_channels)}, p.b);
    }
    s = m.arch.shape_at(l.name);
  }
  put_record(out, "head.weight",
             {static_cast<std::uint32_t>(EmbeddingModel::kHeadDim),
              static_cast<std::uint32_t>(m.tap_dim())},
             m.head_w);
  put_record(out, "head.bias", {static_cast<std::uint32_t>(EmbeddingModel::kHeadDim)}, m.head_b);
  put_u32(out, crc32_bytes(out.data(), out.size()));
  write_file_atomic(path, out);
}

void load_weights(EmbeddingModel& m, const std::filesystem::path& path) {
  const std::string in = read_file(path);
  if (in.size() < 8 || std::memcmp(in.data(), kMagic, 4) != 0)
    throw DataError("not an SMW1 weights file: " + path.string());
  std::size_t tail = in.size() - 4;
  const std::uint32_t stored = static_cast<std::uint32_t>(
      static_cast<unsigned char>(in[tail]) | (static_cast<unsigned char>(in[tail + 1]) << 8) |
      (static_cast<unsigned char>(in[tail + 2]) << 16) |
      (static_cast<unsigned char>(in[tail + 3]) << 24));
  if (crc32_bytes(in.data(), tail) != stored)
    throw DataError("weights file checksum mismatch (corrupt or truncated): " + path.string());

  std::map<std::string, Record> records;
  std::size_t pos = 4;
  while (pos < tail) {
    const std::uint32_t name_len = get_u32(in, pos);
    if (pos + name_len > tail) throw DataError("weights file: bad record name length");
    std::string name = in.substr(pos, name_len);
    pos += name_len;
    Record r;
    const std::uint32_t rank = get_u32(in, pos);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      r.dims.push_back(get_u32(in, pos));
      count *= r.dims.back();
    }
    if (pos + count * 4 > tail) throw DataError("weights file: record '" + name + "' truncated");
    r.payload.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      r.payload[i] = std::bit_cast<float>(get_u32(in, pos));
    records.emplace(std::move(name), std::move(r));
  }

  auto take = [&](const std::string& name, const std::vector<std::uint32_t>& want,
                  std::vector<float>& dst) {
    auto it = records.find(name);
    if (it == records.end())
      throw DataError("weights file missing record '" + name + "': " + path.string());
    if (it->second.dims != want) {
      std::string got, expect;
      for (auto d : it->second.dims) got += (got.empty() ? "" : "x") + std::to_string(d);
      for (auto d : want) expect += (expect.empty() ? "" : "x") + std::to_string(d);
      throw DataError("shape mismatch for '" + name + "': file has " + got + ", architecture " +
                      m.arch.id + " expects " + expect);
    }
    dst = it->second.payload;
    records.erase(it);
  };

  EmbeddingModel loaded = m;  // all-or-nothing: only commit on success
  TensorShape s = loaded.arch.input_shape();
  for (std::size_t i = 0; i < loaded.arch.layers.size(); ++i) {
    const LayerSpec& l = loaded.arch.layers[i];
    if (l.kind == LayerKind::conv) {
      take(l.name + ".weight",
           {static_cast<std::uint32_t>(l.out_channels), static_cast<std::uint32_t>(s.c),
            static_cast<std::uint32_t>(l.kernel), static_cast<std::uint32_t>(l.kernel)},
           loaded.params[i].w);
      take(l.name + ".bias", {static_cast<std::uint32_t>(l.out_channels)}, loaded.params[i].b);
    }
    s = loaded.arch.shape_at(l.name);
  }
  take("head.weight",
       {static_cast<std::uint32_t>(EmbeddingModel::kHeadDim),
        static_cast<std::uint32_t>(loaded.tap_dim())},
       loaded.head_w);
  take("head.bias", {static_cast<std::uint32_t>(EmbeddingModel::kHeadDim)}, loaded.head_b);
  if (!records.empty())
    throw DataError("weights file has unexpected record '" + records.begin()->first +
                    "' for architecture " + loaded.arch.id);
  m = std::move(loaded);
}

}  // namespace seasonmatch
