#pragma once

// Test fixtures: IDX file writers (plain and gzip) and a deterministic
// synthetic greyscale set shaped like Fashion-MNIST.  Each class gets a
// fixed random template; samples are the template plus bounded pixel noise,
// which keeps the classes well separated and learnable.

#include "cflines/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fixture {

inline void push_u32be(std::vector<unsigned char>& buf, std::uint32_t v) {
  buf.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
  buf.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  buf.push_back(static_cast<unsigned char>(v & 0xff));
}

inline void write_file(const std::string& path, const std::vector<unsigned char>& bytes,
                       bool gzipped) {
  if (gzipped) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (f == nullptr) throw std::runtime_error(path + ": cannot open for writing");
    if (!bytes.empty() &&
        gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size())) !=
            static_cast<int>(bytes.size())) {
      gzclose(f);
      throw std::runtime_error(path + ": gzwrite failed");
    }
    gzclose(f);
  } else {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw std::runtime_error(path + ": cannot open for writing");
    if (!bytes.empty() && std::fwrite(bytes.data(), 1, bytes.size(), f) != bytes.size()) {
      std::fclose(f);
      throw std::runtime_error(path + ": write failed");
    }
    std::fclose(f);
  }
}

inline std::vector<unsigned char> idx_images_bytes(const std::vector<unsigned char>& pixels,
                                                   std::uint32_t count, std::uint32_t rows = 28,
                                                   std::uint32_t cols = 28,
                                                   std::uint32_t magic = 0x00000803u) {
  std::vector<unsigned char> buf;
  push_u32be(buf, magic);
  push_u32be(buf, count);
  push_u32be(buf, rows);
  push_u32be(buf, cols);
  buf.insert(buf.end(), pixels.begin(), pixels.end());
  return buf;
}

inline std::vector<unsigned char> idx_labels_bytes(const std::vector<unsigned char>& labels,
                                                   std::uint32_t magic = 0x00000801u) {
  std::vector<unsigned char> buf;
  push_u32be(buf, magic);
  push_u32be(buf, static_cast<std::uint32_t>(labels.size()));
  buf.insert(buf.end(), labels.begin(), labels.end());
  return buf;
}

// Labels cycle 0..9 so every prefix of n*10 samples is balanced.
inline void write_synthetic_idx(const std::string& images_path, const std::string& labels_path,
                                int n, std::uint64_t seed, bool gzipped) {
  std::vector<std::vector<int>> templates(10, std::vector<int>(784));
  for (int cls = 0; cls < 10; ++cls) {
    std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(cls));
    std::uniform_int_distribution<int> level(0, 255);
    for (int p = 0; p < 784; ++p) templates[cls][p] = level(rng);
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> noise(-25, 25);
  std::vector<unsigned char> pixels;
  pixels.reserve(static_cast<std::size_t>(n) * 784);
  std::vector<unsigned char> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const int cls = j % 10;
    labels.push_back(static_cast<unsigned char>(cls));
    for (int p = 0; p < 784; ++p) {
      int v = templates[cls][p] + noise(rng);
      if (v < 0) v = 0;
      if (v > 255) v = 255;
      pixels.push_back(static_cast<unsigned char>(v));
    }
  }
  write_file(images_path, idx_images_bytes(pixels, static_cast<std::uint32_t>(n)), gzipped);
  write_file(labels_path, idx_labels_bytes(labels), gzipped);
}

// Harder greyscale set with Fashion-MNIST-like difficulty: five elongated
// garment-style blobs shared by class pairs, a single faint marker pixel
// telling the pair members apart, pixel and intensity noise, and 8% label
// flips for irreducible overlap.  Separating the pairs linearly requires
// amplifying the marker, so plain logistic weights keep growing while the
// bounded-curve model stays small.
inline void write_hard_synthetic_idx(const std::string& images_path,
                                     const std::string& labels_path, int n, std::uint64_t seed,
                                     bool gzipped) {
  std::vector<std::array<double, 784>> base(5);
  for (int pair = 0; pair < 5; ++pair)
    for (int r = 0; r < 28; ++r)
      for (int c = 0; c < 28; ++c) {
        const double dr = r - 14.0, dc = c - 14.0;
        const double ang = 0.7 * pair;
        const double u = dr * std::cos(ang) + dc * std::sin(ang);
        const double v = -dr * std::sin(ang) + dc * std::cos(ang);
        base[pair][28 * r + c] =
            165.0 * std::exp(-(u * u / (30.0 + 14.0 * pair) + v * v / (90.0 - 12.0 * pair)));
      }
  std::vector<int> interior;
  for (int r = 8; r < 20; ++r)
    for (int c = 8; c < 20; ++c) interior.push_back(28 * r + c);
  std::mt19937_64 prng(555);
  std::shuffle(interior.begin(), interior.end(), prng);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> pix_noise(-20, 20);
  std::uniform_int_distribution<int> other(1, 9);
  std::vector<unsigned char> pixels;
  pixels.reserve(static_cast<std::size_t>(n) * 784);
  std::vector<unsigned char> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const int cls = j % 10;
    const double gain = 0.9 + 0.2 * unif(rng);
    std::array<double, 784> img{};
    for (int p = 0; p < 784; ++p) img[p] = base[cls / 2][p] * gain;
    img[interior[cls]] += 51.0;  // the marker
    for (int p = 0; p < 784; ++p) {
      const double v = img[p] + pix_noise(rng);
      pixels.push_back(static_cast<unsigned char>(v < 0 ? 0 : (v > 255 ? 255 : v)));
    }
    labels.push_back(
        static_cast<unsigned char>(unif(rng) < 0.08 ? (cls + other(rng)) % 10 : cls));
  }
  write_file(images_path, idx_images_bytes(pixels, static_cast<std::uint32_t>(n)), gzipped);
  write_file(labels_path, idx_labels_bytes(labels), gzipped);
}

// Writes a train/test fixture pair into dir and loads it back through the
// production loader.
struct SyntheticSets {
  cflines::ImageSet train;
  cflines::ImageSet test;
};

inline SyntheticSets make_synthetic_sets(const std::string& dir, int train_n, int test_n) {
  const std::string tri = dir + "/train-images-idx3-ubyte.gz";
  const std::string trl = dir + "/train-labels-idx1-ubyte.gz";
  const std::string tei = dir + "/t10k-images-idx3-ubyte";
  const std::string tel = dir + "/t10k-labels-idx1-ubyte";
  write_synthetic_idx(tri, trl, train_n, /*seed=*/7, /*gzipped=*/true);
  write_synthetic_idx(tei, tel, test_n, /*seed=*/8, /*gzipped=*/false);
  return {cflines::load_image_set(tri, trl), cflines::load_image_set(tei, tel)};
}

inline SyntheticSets make_hard_sets(const std::string& dir, int train_n, int test_n) {
  const std::string tri = dir + "/train-images-idx3-ubyte.gz";
  const std::string trl = dir + "/train-labels-idx1-ubyte.gz";
  const std::string tei = dir + "/t10k-images-idx3-ubyte";
  const std::string tel = dir + "/t10k-labels-idx1-ubyte";
  write_hard_synthetic_idx(tri, trl, train_n, /*seed=*/7, /*gzipped=*/true);
  write_hard_synthetic_idx(tei, tel, test_n, /*seed=*/8, /*gzipped=*/false);
  return {cflines::load_image_set(tri, trl), cflines::load_image_set(tei, tel)};
}

}  // namespace fixture
