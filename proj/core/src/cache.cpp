// SPDX-License-Identifier: Apache-2.0
#include "cgomax/cache.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace cgomax {

void BlobWriter::put_bytes(const void* p, size_t n) {
  const char* c = static_cast<const char*>(p);
  buf_.insert(buf_.end(), c, c + n);
}

void BlobWriter::put_vec(const Eigen::VectorXd& v) {
  put_u64(uint64_t(v.size()));
  put_bytes(v.data(), size_t(v.size()) * sizeof(double));
}

void BlobWriter::put_mat(const Eigen::MatrixXd& m) {
  put_u64(uint64_t(m.rows()));
  put_u64(uint64_t(m.cols()));
  put_bytes(m.data(), size_t(m.size()) * sizeof(double));
}

void BlobWriter::put_ints(const std::vector<int>& v) {
  put_u64(uint64_t(v.size()));
  if (!v.empty()) put_bytes(v.data(), v.size() * sizeof(int));
}

void BlobReader::get_bytes(void* p, size_t n) {
  if (pos_ + n > buf_.size()) throw std::runtime_error("cache blob: truncated read");
  std::memcpy(p, buf_.data() + pos_, n);
  pos_ += n;
}

Eigen::VectorXd BlobReader::get_vec() {
  uint64_t n = get_u64();
  Eigen::VectorXd v;
  v.resize(Eigen::Index(n));
  get_bytes(v.data(), size_t(n) * sizeof(double));
  return v;
}

Eigen::MatrixXd BlobReader::get_mat() {
  uint64_t r = get_u64(), c = get_u64();
  Eigen::MatrixXd m;
  m.resize(Eigen::Index(r), Eigen::Index(c));
  get_bytes(m.data(), size_t(r) * size_t(c) * sizeof(double));
  return m;
}

std::vector<int> BlobReader::get_ints() {
  uint64_t n = get_u64();
  std::vector<int> v;
  v.resize(size_t(n));
  if (n) get_bytes(v.data(), size_t(n) * sizeof(int));
  return v;
}

namespace {
struct Header {
  char magic[4];
  char tag[4];
  uint32_t version;
  uint32_t reserved;
  uint64_t size;
  uint64_t hash;
};
}  // namespace

void write_blob_file(const std::string& path, const char tag[4], uint32_t version,
                     const std::vector<char>& payload) {
  Header h{};
  std::memcpy(h.magic, "CGMX", 4);
  std::memcpy(h.tag, tag, 4);
  h.version = version;
  h.size = payload.size();
  h.hash = fnv1a(payload.data(), payload.size());
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cache: cannot write " + tmp);
    f.write(reinterpret_cast<const char*>(&h), sizeof h);
    f.write(payload.data(), std::streamsize(payload.size()));
  }
  std::filesystem::rename(tmp, path);
}

bool read_blob_file(const std::string& path, const char tag[4], uint32_t version,
                    std::vector<char>& payload) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return false;
  Header h{};
  f.read(reinterpret_cast<char*>(&h), sizeof h);
  if (!f || std::memcmp(h.magic, "CGMX", 4) != 0 || std::memcmp(h.tag, tag, 4) != 0)
    throw std::runtime_error("cache: bad header in " + path);
  if (h.version != version) throw std::runtime_error("cache: version mismatch in " + path);
  payload.resize(size_t(h.size));
  f.read(payload.data(), std::streamsize(h.size));
  if (!f) throw std::runtime_error("cache: truncated file " + path);
  if (fnv1a(payload.data(), payload.size()) != h.hash)
    throw std::runtime_error("cache: content hash mismatch in " + path);
  return true;
}

}  // namespace cgomax
