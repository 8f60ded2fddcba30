#include "rankalign/distx.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "rankalign/error.hpp"

namespace rankalign {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'F', 'D', 'X', '1'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  template <typename UInt>
  void uint(UInt value) {
    for (std::size_t i = 0; i < sizeof(UInt); ++i) out_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
  void f32(float value) { uint(std::bit_cast<std::uint32_t>(value)); }
  void id(const std::string& s) {
    if (s.size() > std::numeric_limits<std::uint16_t>::max()) throw ValidationError("id longer than 65535 bytes: " + s.substr(0, 32) + "...");
    uint(static_cast<std::uint16_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint64_t offset() const noexcept { return pos_; }
  std::uint64_t remaining() const noexcept { return in_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw FormatError(std::string("truncated ") + what, pos_);
  }
  template <typename UInt>
  UInt uint(const char* what) {
    need(sizeof(UInt), what);
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(static_cast<UInt>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(UInt);
    return v;
  }
  void skip(std::size_t n) { pos_ += n; }
  float f32(const char* what) { return std::bit_cast<float>(uint<std::uint32_t>(what)); }
  std::string id(const char* what) {
    const auto n = uint<std::uint16_t>(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::uint64_t pos_ = 0;
};

}  // namespace

void DistanceArchive::insert(DistanceTensor tensor) {
  check_conforms(schema_, tensor);
  Key key{tensor.set_id, tensor.image_id};
  const auto [it, fresh] = records_.try_emplace(std::move(key), std::move(tensor));
  if (!fresh) throw ValidationError("duplicate archive key (" + it->first.first + ", " + it->first.second + ")");
}

const DistanceTensor* DistanceArchive::find(const std::string& set_id, const std::string& image_id) const {
  const auto it = records_.find(Key{set_id, image_id});
  return it == records_.end() ? nullptr : &it->second;
}

const DistanceTensor& DistanceArchive::at(const std::string& set_id, const std::string& image_id) const {
  if (const auto* t = find(set_id, image_id)) return *t;
  throw ValidationError("missing distance tensor for (" + set_id + ", " + image_id + ")");
}

std::uint64_t archive_header_size(const LayerSchema& schema) {
  std::uint64_t n = kMagic.size() + 4 + 8;
  for (const auto& l : schema.layers()) n += 2 + l.name.size() + 4;
  return n;
}

std::vector<std::uint8_t> encode_archive(const DistanceArchive& archive) {
  Writer w;
  w.bytes(kMagic.data(), kMagic.size());
  const auto& schema = archive.schema();
  w.uint(static_cast<std::uint32_t>(schema.layer_count()));
  for (const auto& l : schema.layers()) {
    w.id(l.name);
    w.uint(static_cast<std::uint32_t>(l.channel_count));
  }
  w.uint(static_cast<std::uint64_t>(archive.size()));
  for (const auto& [key, tensor] : archive.records()) {
    w.id(key.first);
    w.id(key.second);
    for (const auto& layer : tensor.values)
      for (float v : layer) w.f32(v);
  }
  return w.take();
}

DistanceArchive decode_archive(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(kMagic.size(), "magic");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw FormatError("bad magic (expected \"FDX1\")", 0);
  r.skip(kMagic.size());

  const auto layer_count = r.uint<std::uint32_t>("layer count");
  std::vector<LayerSpec> specs;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    const auto at = r.offset();
    auto name = r.id("layer name");
    const auto channels = r.uint<std::uint32_t>("channel count");
    if (channels == 0) throw FormatError("layer '" + name + "' has zero channels", at);
    specs.push_back({std::move(name), channels});
  }
  LayerSchema schema;
  try {
    schema = LayerSchema(std::move(specs));
  } catch (const ValidationError& e) {
    throw FormatError(e.what(), r.offset());
  }

  const auto record_count = r.uint<std::uint64_t>("record count");
  DistanceArchive archive(schema);
  for (std::uint64_t i = 0; i < record_count; ++i) {
    const auto record_start = r.offset();
    DistanceTensor t;
    t.set_id = r.id("set id");
    t.image_id = r.id("image id");
    t.values.resize(schema.layer_count());
    for (std::size_t l = 0; l < schema.layer_count(); ++l) {
      r.need(4 * schema.channels(l), "record values");
      t.values[l].reserve(schema.channels(l));
      for (std::size_t c = 0; c < schema.channels(l); ++c) {
        const auto at = r.offset();
        const float v = r.f32("record values");
        if (!std::isfinite(v) || v < 0.0f) throw FormatError("negative or non-finite value in layer '" + schema.layers()[l].name + "'", at);
        t.values[l].push_back(v);
      }
    }
    if (archive.find(t.set_id, t.image_id) != nullptr) {
      throw FormatError("duplicate key (" + t.set_id + ", " + t.image_id + ")", record_start);
    }
    archive.insert(std::move(t));
  }
  if (r.remaining() != 0) throw FormatError(std::to_string(r.remaining()) + " trailing bytes after last record", r.offset());
  return archive;
}

DistanceArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open archive " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return decode_archive(bytes);
}

void write_archive(const DistanceArchive& archive, const std::filesystem::path& path) {
  const auto bytes = encode_archive(archive);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write archive " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace rankalign
