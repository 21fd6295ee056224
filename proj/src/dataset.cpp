#include "fedcert/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fedcert {

namespace {

constexpr double kTau = 6.283185307179586477;

std::uint32_t read_be32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw FormatError("truncated IDX header while reading " + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

std::vector<unsigned char> read_bytes(std::istream& in, std::size_t count,
                                      const std::string& what) {
  std::vector<unsigned char> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    throw FormatError("truncated IDX payload in " + what);
  }
  return buf;
}

}  // namespace

void validate(const Dataset& d) {
  if (d.num_labels < 1) throw DomainError("dataset: num_labels must be >= 1");
  if (d.features.cols() != d.labels.size()) {
    throw ShapeError("dataset: feature columns and label count differ");
  }
  for (Eigen::Index i = 0; i < d.labels.size(); ++i) {
    if (d.labels(i) < 0 || d.labels(i) >= d.num_labels) {
      throw DomainError("dataset: label out of range at example " + std::to_string(i));
    }
  }
}

Dataset select(const Dataset& source, const std::vector<std::int64_t>& index) {
  Dataset out;
  out.num_labels = source.num_labels;
  out.features.resize(source.features.rows(), static_cast<Eigen::Index>(index.size()));
  out.labels.resize(static_cast<Eigen::Index>(index.size()));
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(index[i]);
    if (j < 0 || j >= source.size()) throw DomainError("select: index out of range");
    out.features.col(static_cast<Eigen::Index>(i)) = source.features.col(j);
    out.labels(static_cast<Eigen::Index>(i)) = source.labels(j);
  }
  return out;
}

Dataset take_prefix(const Dataset& source, std::int64_t count) {
  if (count < 0 || count > source.size()) throw DomainError("take_prefix: bad count");
  Dataset out;
  out.num_labels = source.num_labels;
  out.features = source.features.leftCols(static_cast<Eigen::Index>(count));
  out.labels = source.labels.head(static_cast<Eigen::Index>(count));
  return out;
}

std::uint64_t dataset_fingerprint(const Dataset& d) {
  std::uint64_t h = kFnvOffset;
  h = fnv1a_u64(static_cast<std::uint64_t>(d.features.rows()), h);
  h = fnv1a_u64(static_cast<std::uint64_t>(d.labels.size()), h);
  h = fnv1a_u64(static_cast<std::uint64_t>(d.num_labels), h);
  for (Eigen::Index i = 0; i < d.labels.size(); ++i) {
    h = fnv1a_u64(static_cast<std::uint64_t>(d.labels(i)), h);
  }
  const auto* data = d.features.data();
  const std::size_t bytes = sizeof(double) * static_cast<std::size_t>(d.features.size());
  h = fnv1a(std::string_view(reinterpret_cast<const char*>(data), bytes), h);
  return h;
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw FormatError("cannot open image file: " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw FormatError("cannot open label file: " + labels_path);

  const std::uint32_t img_magic = read_be32(img, images_path);
  if (img_magic != 2051) {
    throw FormatError("bad image magic in " + images_path + ": expected 2051, got " +
                      std::to_string(img_magic));
  }
  const std::uint32_t count = read_be32(img, images_path);
  const std::uint32_t rows = read_be32(img, images_path);
  const std::uint32_t cols = read_be32(img, images_path);

  const std::uint32_t lab_magic = read_be32(lab, labels_path);
  if (lab_magic != 2049) {
    throw FormatError("bad label magic in " + labels_path + ": expected 2049, got " +
                      std::to_string(lab_magic));
  }
  const std::uint32_t lab_count = read_be32(lab, labels_path);
  if (lab_count != count) {
    throw FormatError("image/label count mismatch: " + std::to_string(count) + " vs " +
                      std::to_string(lab_count));
  }

  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  const auto pixels = read_bytes(img, static_cast<std::size_t>(count) * dim, images_path);
  const auto labels = read_bytes(lab, count, labels_path);

  Dataset out;
  out.num_labels = 10;
  out.features.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(count));
  out.labels.resize(static_cast<Eigen::Index>(count));
  for (std::uint32_t i = 0; i < count; ++i) {
    for (std::size_t p = 0; p < dim; ++p) {
      out.features(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) =
          static_cast<double>(pixels[static_cast<std::size_t>(i) * dim + p]) / 255.0;
    }
    const unsigned char l = labels[i];
    if (l >= 10) throw FormatError("label byte out of range in " + labels_path);
    out.labels(static_cast<Eigen::Index>(i)) = l;
  }
  return out;
}

namespace {

struct HarRaw {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;    // remapped to 0..5
  std::vector<int> subjects;  // 1..30
};

void read_har_block(const std::string& x_path, const std::string& y_path,
                    const std::string& subject_path, HarRaw& raw) {
  std::ifstream xf(x_path);
  if (!xf) throw FormatError("cannot open " + x_path);
  std::ifstream yf(y_path);
  if (!yf) throw FormatError("cannot open " + y_path);
  std::ifstream sf(subject_path);
  if (!sf) throw FormatError("cannot open " + subject_path);

  std::string line;
  while (std::getline(xf, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<double> row;
    row.reserve(561);
    double v;
    while (ls >> v) row.push_back(v);
    if (row.size() != 561) {
      throw FormatError("expected 561 feature columns in " + x_path + ", got " +
                        std::to_string(row.size()));
    }
    raw.features.push_back(std::move(row));

    int label;
    if (!(yf >> label)) throw FormatError("label file shorter than feature file: " + y_path);
    if (label < 1 || label > 6) {
      throw FormatError("label outside 1..6 in " + y_path + ": " + std::to_string(label));
    }
    raw.labels.push_back(label - 1);

    int subject;
    if (!(sf >> subject)) {
      throw FormatError("subject file shorter than feature file: " + subject_path);
    }
    raw.subjects.push_back(subject);
  }
  int extra;
  if (yf >> extra) throw FormatError("label file longer than feature file: " + y_path);
  if (sf >> extra) throw FormatError("subject file longer than feature file: " + subject_path);
}

}  // namespace

std::vector<HarSubject> load_har(const std::string& dir) {
  namespace fs = std::filesystem;
  HarRaw raw;
  const fs::path root(dir);
  if (fs::exists(root / "train" / "X_train.txt")) {
    read_har_block((root / "train" / "X_train.txt").string(),
                   (root / "train" / "y_train.txt").string(),
                   (root / "train" / "subject_train.txt").string(), raw);
    read_har_block((root / "test" / "X_test.txt").string(),
                   (root / "test" / "y_test.txt").string(),
                   (root / "test" / "subject_test.txt").string(), raw);
  } else if (fs::exists(root / "X.txt")) {
    read_har_block((root / "X.txt").string(), (root / "y.txt").string(),
                   (root / "subject.txt").string(), raw);
  } else {
    throw FormatError("no recognizable activity archive under " + dir);
  }

  std::map<int, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < raw.subjects.size(); ++i) {
    by_subject[raw.subjects[i]].push_back(i);
  }
  for (int s = 1; s <= 30; ++s) {
    if (!by_subject.count(s)) throw FormatError("subject " + std::to_string(s) + " missing");
  }
  if (by_subject.size() != 30) throw FormatError("expected exactly 30 subjects");

  std::vector<HarSubject> out;
  out.reserve(30);
  for (const auto& [subject, index] : by_subject) {
    const auto count = static_cast<std::int64_t>(index.size());
    const auto train_count = static_cast<std::int64_t>(std::lround(0.75 * static_cast<double>(count)));
    HarSubject hs;
    hs.subject = subject;
    for (int part = 0; part < 2; ++part) {
      Dataset& d = part == 0 ? hs.train : hs.test;
      const std::int64_t begin = part == 0 ? 0 : train_count;
      const std::int64_t end = part == 0 ? train_count : count;
      d.num_labels = 6;
      d.features.resize(561, static_cast<Eigen::Index>(end - begin));
      d.labels.resize(static_cast<Eigen::Index>(end - begin));
      for (std::int64_t i = begin; i < end; ++i) {
        const auto& row = raw.features[index[static_cast<std::size_t>(i)]];
        for (int f = 0; f < 561; ++f) {
          d.features(f, static_cast<Eigen::Index>(i - begin)) = row[static_cast<std::size_t>(f)];
        }
        d.labels(static_cast<Eigen::Index>(i - begin)) =
            raw.labels[index[static_cast<std::size_t>(i)]];
      }
    }
    out.push_back(std::move(hs));
  }
  return out;
}

Dataset synth_blobs(const BlobSpec& spec) {
  if (spec.num_labels < 2) throw ConfigError("synth_blobs: need at least 2 labels");
  if (spec.feature_dim < 1) throw ConfigError("synth_blobs: need feature_dim >= 1");
  if (spec.per_label_count < 1) throw ConfigError("synth_blobs: need per_label_count >= 1");
  if (spec.noise_sigma < 0) throw ConfigError("synth_blobs: noise_sigma must be >= 0");

  const int L = spec.num_labels;
  const int F = spec.feature_dim;
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(F, L);
  for (int l = 0; l < L; ++l) {
    if (F >= 2) {
      const double angle = kTau * static_cast<double>(l) / static_cast<double>(L);
      centroids(0, l) = spec.centroid_scale * std::cos(angle);
      centroids(1, l) = spec.centroid_scale * std::sin(angle);
    } else {
      centroids(0, l) =
          spec.centroid_scale * (2.0 * static_cast<double>(l) / static_cast<double>(L - 1) - 1.0);
    }
  }

  Rng rng(mix(spec.seed, 0x626c6f62));
  Dataset out;
  out.num_labels = L;
  const auto count = static_cast<Eigen::Index>(L) * spec.per_label_count;
  out.features.resize(F, count);
  out.labels.resize(count);
  Eigen::Index col = 0;
  for (int l = 0; l < L; ++l) {
    for (int j = 0; j < spec.per_label_count; ++j, ++col) {
      for (int f = 0; f < F; ++f) {
        out.features(f, col) = centroids(f, l) + spec.noise_sigma * normal_unit(rng);
      }
      out.labels(col) = l;
    }
  }
  return out;
}

}  // namespace fedcert
