#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace cflines {

// IDX container layout (the (Fashion-)MNIST distribution format), all
// integers big-endian:
//
//   images: 0x00000803, count, rows(28), cols(28), count*rows*cols bytes
//   labels: 0x00000801, count, count bytes each in 0..9
//
// Files may arrive gzip-compressed; the 0x1f 0x8b prefix is detected and
// the stream inflated transparently.

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803u;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801u;
inline constexpr int kImageRows = 28;
inline constexpr int kImageCols = 28;
inline constexpr int kPixels = kImageRows * kImageCols;
inline constexpr int kFeatures = kPixels + 1;  // bias component up front
inline constexpr int kClasses = 10;

// n x 784 pixel bytes, row-major pixel order within each image row.
using RawImages = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RawImages load_idx_images(const std::string& path);
Eigen::VectorXi load_idx_labels(const std::string& path);

// value / 255 per pixel, with a bias column of ones prepended as component 0.
Eigen::MatrixXd normalize(const RawImages& raw);

// 10-vector with a single 1 at the label index.
Eigen::VectorXd one_hot(int label);

struct ImageSet {
  Eigen::MatrixXd features;  // n x 785, column 0 identically 1
  Eigen::VectorXi labels;    // each in 0..9
  Eigen::Index n() const { return features.rows(); }
};

// Loads and normalizes an images/labels pair; the two counts must agree.
ImageSet load_image_set(const std::string& images_path, const std::string& labels_path);

// First n samples, in file order.
ImageSet subset_prefix(const ImageSet& set, Eigen::Index n);

struct BatchPlan {
  Eigen::Index batch_size = 600;
  bool shuffled = false;   // default is the plain file order
  std::uint64_t seed = 0;  // shuffle seed; unused when sequential
};

// Disjoint row-index batches covering the set exactly once.  Sequential
// order is a plain partition of the file order; shuffled order is a
// deterministic function of the seed.  The last batch is short when
// batch_size does not divide n.
std::vector<std::vector<Eigen::Index>> batches(const ImageSet& set, const BatchPlan& plan);

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& features,
                            const std::vector<Eigen::Index>& rows);

// One-hot target matrix for the given rows, size rows x 10.
Eigen::MatrixXd one_hot_rows(const ImageSet& set, const std::vector<Eigen::Index>& rows);

}  // namespace cflines
