// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cgomax/util.hpp"

namespace cgomax {

// Binary cache blob: magic "CGMX", a 4-char tag, a version, payload size,
// FNV-1a content hash. Readers reject on any mismatch (cache corruption is
// an error, not a silent recompute).

class BlobWriter {
 public:
  void put_bytes(const void* p, size_t n);
  void put_u64(uint64_t v) { put_bytes(&v, sizeof v); }
  void put_i32(int32_t v) { put_bytes(&v, sizeof v); }
  void put_f64(double v) { put_bytes(&v, sizeof v); }
  void put_vec(const Eigen::VectorXd& v);
  void put_mat(const Eigen::MatrixXd& m);
  void put_ints(const std::vector<int>& v);
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class BlobReader {
 public:
  explicit BlobReader(std::vector<char> buf) : buf_(std::move(buf)) {}
  void get_bytes(void* p, size_t n);
  uint64_t get_u64() { uint64_t v; get_bytes(&v, sizeof v); return v; }
  int32_t get_i32() { int32_t v; get_bytes(&v, sizeof v); return v; }
  double get_f64() { double v; get_bytes(&v, sizeof v); return v; }
  Eigen::VectorXd get_vec();
  Eigen::MatrixXd get_mat();
  std::vector<int> get_ints();

 private:
  std::vector<char> buf_;
  size_t pos_ = 0;
};

// Writes atomically (tmp file + rename).
void write_blob_file(const std::string& path, const char tag[4], uint32_t version,
                     const std::vector<char>& payload);
// Returns false if the file does not exist; throws on corruption.
bool read_blob_file(const std::string& path, const char tag[4], uint32_t version,
                    std::vector<char>& payload);

}  // namespace cgomax
