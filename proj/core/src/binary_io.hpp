// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "rvrank/common.hpp"

namespace rvrank::detail {

// Explicit little-endian encoding, independent of host byte order.
class ByteWriter {
 public:
  void put_bytes(std::string_view bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
  void put_u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void put_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  void put_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  void put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }

  const std::vector<char>& bytes() const { return buf_; }

  void write_to(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path.string());
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
  }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> data, std::string name)
      : data_(std::move(data)), name_(std::move(name)) {}

  static ByteReader from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open: " + path.string());
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ByteReader(std::move(data), path.string());
  }

  std::size_t offset() const { return pos_; }
  std::size_t size() const { return data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }
  const std::string& name() const { return name_; }

  void expect_magic(std::string_view magic) {
    require(magic.size());
    if (std::memcmp(data_.data() + pos_, magic.data(), magic.size()) != 0) {
      throw Error(ErrorCode::kMalformedHeader,
                  name_ + ": bad magic at byte offset 0, expected '" + std::string(magic) + "'");
    }
    pos_ += magic.size();
  }

  std::uint8_t get_u8() {
    require(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t get_u32() {
    require(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::uint64_t get_u64() {
    require(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }
  float get_f32() { return std::bit_cast<float>(get_u32()); }

  void require(std::size_t n) const {
    if (remaining() < n) {
      throw Error(ErrorCode::kTruncated, name_ + ": truncated at byte offset " +
                                             std::to_string(pos_) + " (need " + std::to_string(n) +
                                             " bytes, have " + std::to_string(remaining()) + ")");
    }
  }

  void expect_end() const {
    if (remaining() != 0) {
      throw Error(ErrorCode::kDimensionMismatch,
                  name_ + ": " + std::to_string(remaining()) +
                      " trailing bytes after payload at byte offset " + std::to_string(pos_));
    }
  }

 private:
  std::vector<char> data_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace rvrank::detail
