#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "capforge/binary_io.hpp"
#include "capforge/pool.hpp"
#include "capforge/types.hpp"

namespace testutil {

namespace fs = std::filesystem;

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("capforge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::vector<float> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> nd;
  std::vector<double> v(dim);
  double norm = 0;
  for (auto& x : v) {
    x = nd(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

inline capforge::EmbeddingMatrix random_matrix(std::mt19937_64& rng, std::string source,
                                               std::size_t rows, std::uint32_t dim) {
  capforge::EmbeddingMatrix m(std::move(source), dim);
  for (std::size_t i = 0; i < rows; ++i) m.append_row(random_unit(rng, dim));
  return m;
}

// Records with one synthetic variant each and random unit embeddings for
// image, raw and the variant.
struct ToyPool {
  std::vector<capforge::Record> records;
  std::vector<capforge::EmbeddingMatrix> embeddings;
};

inline ToyPool toy_pool(std::size_t n, std::uint32_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ToyPool p;
  const std::string syn_label = capforge::variant_source_label("blip2", 0.75);
  for (std::size_t i = 0; i < n; ++i) {
    capforge::Record r;
    r.id = i;
    r.raw_caption = "raw caption number " + std::to_string(i);
    r.synthetic_variants.push_back({"blip2", 0.75, "a photo of item " + std::to_string(i % 7)});
    p.records.push_back(std::move(r));
  }
  p.embeddings.push_back(random_matrix(rng, "image", n, dim));
  p.embeddings.push_back(random_matrix(rng, "raw", n, dim));
  p.embeddings.push_back(random_matrix(rng, syn_label, n, dim));
  return p;
}

inline std::string slurp(const fs::path& p) { return capforge::read_file(p); }

}  // namespace testutil
