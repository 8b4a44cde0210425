#include "cflines/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>

namespace cflines {

namespace {

// gzread-backed reader; zlib's transparent mode handles both plain and
// gzip-wrapped files, dispatching on the 0x1f 0x8b prefix.
class IdxReader {
 public:
  explicit IdxReader(const std::string& path) : path_(path), file_(gzopen(path.c_str(), "rb")) {
    if (file_ == nullptr) throw std::runtime_error(path + ": cannot open");
  }
  ~IdxReader() {
    if (file_ != nullptr) gzclose(file_);
  }
  IdxReader(const IdxReader&) = delete;
  IdxReader& operator=(const IdxReader&) = delete;

  void read_exact(void* dst, std::size_t len) {
    const int got = gzread(file_, dst, static_cast<unsigned>(len));
    if (got < 0 || static_cast<std::size_t>(got) != len)
      throw std::runtime_error(path_ + ": truncated at offset " +
                               std::to_string(offset_ + (got > 0 ? got : 0)));
    offset_ += len;
  }

  std::uint32_t read_u32be() {
    unsigned char b[4];
    read_exact(b, 4);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
  }

  std::size_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  gzFile file_;
  std::size_t offset_ = 0;
};

std::string hex32(std::uint32_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += digits[(v >> shift) & 0xf];
  return s;
}

}  // namespace

RawImages load_idx_images(const std::string& path) {
  IdxReader in(path);
  const std::uint32_t magic = in.read_u32be();
  if (magic != kIdxImagesMagic)
    throw std::runtime_error(path + ": bad magic " + hex32(magic) + " at offset 0 (expected " +
                             hex32(kIdxImagesMagic) + " for an images file)");
  const std::uint32_t count = in.read_u32be();
  const std::uint32_t rows = in.read_u32be();
  const std::uint32_t cols = in.read_u32be();
  if (rows != kImageRows || cols != kImageCols)
    throw std::runtime_error(path + ": dimension mismatch at offset 8: " + std::to_string(rows) +
                             "x" + std::to_string(cols) + " (expected 28x28)");
  RawImages out(static_cast<Eigen::Index>(count), kPixels);
  if (count > 0) in.read_exact(out.data(), std::size_t(count) * kPixels);
  return out;
}

Eigen::VectorXi load_idx_labels(const std::string& path) {
  IdxReader in(path);
  const std::uint32_t magic = in.read_u32be();
  if (magic != kIdxLabelsMagic)
    throw std::runtime_error(path + ": bad magic " + hex32(magic) + " at offset 0 (expected " +
                             hex32(kIdxLabelsMagic) + " for a labels file)");
  const std::uint32_t count = in.read_u32be();
  std::vector<unsigned char> bytes(count);
  if (count > 0) in.read_exact(bytes.data(), bytes.size());
  Eigen::VectorXi labels(static_cast<Eigen::Index>(count));
  for (std::uint32_t i = 0; i < count; ++i) {
    if (bytes[i] > 9)
      throw std::runtime_error(path + ": label " + std::to_string(int(bytes[i])) +
                               " out of range at offset " + std::to_string(8 + i));
    labels(static_cast<Eigen::Index>(i)) = bytes[i];
  }
  return labels;
}

Eigen::MatrixXd normalize(const RawImages& raw) {
  const Eigen::Index n = raw.rows();
  Eigen::MatrixXd features(n, kFeatures);
  features.col(0).setOnes();
  features.rightCols(kPixels) = raw.cast<double>() / 255.0;
  return features;
}

Eigen::VectorXd one_hot(int label) {
  if (label < 0 || label >= kClasses)
    throw std::domain_error("one_hot: label " + std::to_string(label) + " outside 0..9");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kClasses);
  v(label) = 1.0;
  return v;
}

ImageSet load_image_set(const std::string& images_path, const std::string& labels_path) {
  ImageSet set;
  set.features = normalize(load_idx_images(images_path));
  set.labels = load_idx_labels(labels_path);
  if (set.features.rows() != set.labels.size())
    throw std::runtime_error(images_path + ": image count " + std::to_string(set.features.rows()) +
                             " does not match label count " + std::to_string(set.labels.size()));
  return set;
}

ImageSet subset_prefix(const ImageSet& set, Eigen::Index n) {
  if (n < 0 || n > set.n())
    throw std::domain_error("subset_prefix: n out of range (have " + std::to_string(set.n()) +
                            " samples, asked for " + std::to_string(n) + ")");
  ImageSet out;
  out.features = set.features.topRows(n);
  out.labels = set.labels.head(n);
  return out;
}

std::vector<std::vector<Eigen::Index>> batches(const ImageSet& set, const BatchPlan& plan) {
  if (plan.batch_size < 1) throw std::domain_error("batches: batch_size must be >= 1");
  if (plan.batch_size > set.n())
    throw std::domain_error("batches: batch_size " + std::to_string(plan.batch_size) +
                            " exceeds sample count " + std::to_string(set.n()));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(set.n()));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  if (plan.shuffled) {
    std::mt19937_64 rng(plan.seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::vector<Eigen::Index>> out;
  for (std::size_t start = 0; start < order.size(); start += plan.batch_size) {
    const std::size_t stop = std::min(order.size(), start + plan.batch_size);
    out.emplace_back(order.begin() + start, order.begin() + stop);
  }
  return out;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& features,
                            const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
  return out;
}

Eigen::MatrixXd one_hot_rows(const ImageSet& set, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), kClasses);
  for (std::size_t i = 0; i < rows.size(); ++i)
    P(static_cast<Eigen::Index>(i), set.labels(rows[i])) = 1.0;
  return P;
}

}  // namespace cflines
