#pragma once

// Binary field snapshots ("VLF1").
//
//   bytes  content
//   4      magic "VLF1"
//   4      u32 n (grid points per dimension)
//   8      f64 time
//   4      u32 field count F
//   F x    { u32 name length L, L bytes of name }
//   F x    n*n f64 samples, row-major (index i*n + j)
//
// All integers and doubles are little-endian regardless of host order.

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vislim/error.hpp"
#include "vislim/spectral.hpp"

namespace vislim {

struct NamedField {
  std::string name;
  Field2D field;
};

struct Snapshot {
  double time = 0.0;
  std::vector<NamedField> fields;

  const Field2D& field(const std::string& name) const {
    for (const auto& f : fields) {
      if (f.name == name) return f.field;
    }
    throw FormatError("snapshot has no field named '" + name + "'");
  }
};

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

inline void put_f64(std::vector<unsigned char>& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

class ByteReader {
 public:
  explicit ByteReader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * b);
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * b);
    return std::bit_cast<double>(v);
  }

  std::string text(std::size_t len) {
    need(len);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
    pos_ += len;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t k) const {
    if (pos_ + k > bytes_.size()) throw FormatError("snapshot truncated");
  }

  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<unsigned char> encode_snapshot(const Snapshot& snap) {
  if (snap.fields.empty()) throw InvalidArgument("snapshot needs at least one field");
  const Grid grid = snap.fields.front().field.grid();
  std::vector<unsigned char> out = {'V', 'L', 'F', '1'};
  detail::put_u32(out, static_cast<std::uint32_t>(grid.n()));
  detail::put_f64(out, snap.time);
  detail::put_u32(out, static_cast<std::uint32_t>(snap.fields.size()));
  for (const auto& f : snap.fields) {
    require_same_grid(grid, f.field.grid());
    detail::put_u32(out, static_cast<std::uint32_t>(f.name.size()));
    out.insert(out.end(), f.name.begin(), f.name.end());
  }
  for (const auto& f : snap.fields) {
    for (double v : f.field.values()) detail::put_f64(out, v);
  }
  return out;
}

inline Snapshot decode_snapshot(std::vector<unsigned char> bytes) {
  detail::ByteReader in(std::move(bytes));
  if (in.text(4) != "VLF1") throw FormatError("bad snapshot magic");
  const auto n = static_cast<int>(in.u32());
  Snapshot snap;
  snap.time = in.f64();
  const auto count = in.u32();
  std::vector<std::string> names;
  for (std::uint32_t k = 0; k < count; ++k) names.push_back(in.text(in.u32()));
  const Grid grid(n);
  for (auto& name : names) {
    std::vector<double> values(grid.size());
    for (double& v : values) v = in.f64();
    snap.fields.push_back({std::move(name), Field2D(grid, std::move(values))});
  }
  if (!in.done()) throw FormatError("trailing bytes after snapshot payload");
  return snap;
}

inline void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
  const auto bytes = encode_snapshot(snap);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_snapshot(std::move(bytes));
}

}  // namespace vislim
