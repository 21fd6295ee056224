#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fedcert/common.hpp"

namespace fedcert {

// Examples are stored one per column: features is F x count, labels(i) is
// the label of column i, in [0, num_labels).
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXi labels;
  int num_labels = 0;

  Eigen::Index size() const { return labels.size(); }
  Eigen::Index feature_dim() const { return features.rows(); }
};

// Shape and label-range checks; throws ShapeError / DomainError.
void validate(const Dataset& d);

// Columns of `source` selected by `index` (order preserved).
Dataset select(const Dataset& source, const std::vector<std::int64_t>& index);

Dataset take_prefix(const Dataset& source, std::int64_t count);

// Order- and content-sensitive fingerprint of a dataset.
std::uint64_t dataset_fingerprint(const Dataset& d);

// IDX container: 4-byte big-endian magic (2051 images, 2049 labels), then
// big-endian 32-bit dimension sizes, then raw bytes. Pixels are scaled by
// 1/255 into [0,1]; the label space is 10.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// One user's slice of the activity-recognition archive, split 75/25 into
// train and test by example index order.
struct HarSubject {
  int subject = 0;
  Dataset train;
  Dataset test;
};

// Reads whitespace-separated 561-column features, labels 1..6 (remapped to
// 0..5) and per-line subject ids. Accepts either X.txt/y.txt/subject.txt in
// `dir` or the usual archive layout train/X_train.txt + test/X_test.txt
// (concatenated per subject, train block first). Exactly 30 subjects.
std::vector<HarSubject> load_har(const std::string& dir);

struct BlobSpec {
  int num_labels = 2;
  int feature_dim = 2;
  int per_label_count = 1;
  double centroid_scale = 1.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

// Gaussian clusters, one centroid per label at centroid_scale times a unit
// vector (evenly spaced on the unit circle for F >= 2, evenly spaced in
// [-1,1] for F = 1). Examples are label-major; linearly separable for small
// noise_sigma.
Dataset synth_blobs(const BlobSpec& spec);

}  // namespace fedcert
