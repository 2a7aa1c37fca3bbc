#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "catexpand/categorical.hpp"

namespace catexpand {

// Little-endian binary container helpers. All on-disk formats use a 4-byte
// magic followed by a u32 version; readers reject unknown magics and newer
// versions, reporting the file offset of the failure.

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path)
      : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw Error("cannot open for writing: " + path);
  }

  void magic(const char tag[5]) { out_.write(tag, 4); }
  void u16(std::uint16_t v) { raw(&v, sizeof v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void u8(std::uint8_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void f32(float v) { raw(&v, sizeof v); }

  void f64_array(const double* data, std::size_t n) { raw(data, n * sizeof(double)); }
  void f32_array(const float* data, std::size_t n) { raw(data, n * sizeof(float)); }

  void raw(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) throw Error("write failed: " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path)
      : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw Error("cannot open for reading: " + path);
  }

  void expect_magic(const char tag[5]) {
    char buf[4];
    raw(buf, 4);
    if (std::memcmp(buf, tag, 4) != 0)
      throw Error("bad magic in " + path_ + " at offset 0 (expected " +
                  std::string(tag, 4) + ")");
  }

  void expect_version(std::uint32_t max_supported) {
    std::uint32_t v = u32();
    if (v > max_supported)
      throw Error("unsupported version " + std::to_string(v) + " in " + path_);
  }

  std::uint16_t u16() { std::uint16_t v; raw(&v, sizeof v); return v; }
  std::uint32_t u32() { std::uint32_t v; raw(&v, sizeof v); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, sizeof v); return v; }
  std::uint8_t u8() { std::uint8_t v; raw(&v, sizeof v); return v; }
  double f64() { double v; raw(&v, sizeof v); return v; }
  float f32() { float v; raw(&v, sizeof v); return v; }

  void f64_array(double* data, std::size_t n) { raw(data, n * sizeof(double)); }
  void f32_array(float* data, std::size_t n) { raw(data, n * sizeof(float)); }

  void raw(void* data, std::size_t n) {
    auto at = in_.tellg();
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (!in_)
      throw Error("truncated read in " + path_ + " at offset " +
                  std::to_string(static_cast<long long>(at)));
  }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace catexpand
