#include "egg/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <string>

namespace egg {

std::vector<double> AttributeValueDataset::encode(const std::vector<std::size_t>& tuple) const {
  if (tuple.size() != n_attributes) {
    throw std::invalid_argument("encode: tuple has " + std::to_string(tuple.size()) +
                                " attributes, expected " + std::to_string(n_attributes));
  }
  std::vector<double> out(dim(), 0.0);
  for (std::size_t a = 0; a < n_attributes; ++a) {
    if (tuple[a] >= n_values) throw std::out_of_range("encode: attribute value out of range");
    out[a * n_values + tuple[a]] = 1.0;
  }
  return out;
}

std::vector<std::size_t> AttributeValueDataset::decode(std::span<const double> encoded) const {
  if (encoded.size() != dim()) throw std::invalid_argument("decode: wrong encoding width");
  std::vector<std::size_t> out(n_attributes);
  for (std::size_t a = 0; a < n_attributes; ++a) {
    const auto block = encoded.subspan(a * n_values, n_values);
    out[a] = static_cast<std::size_t>(std::max_element(block.begin(), block.end()) - block.begin());
  }
  return out;
}

Tensor AttributeValueDataset::features() const {
  std::vector<double> values;
  values.reserve(size() * dim());
  for (const auto& item : items) {
    const auto e = encode(item);
    values.insert(values.end(), e.begin(), e.end());
  }
  return Tensor({size(), dim()}, std::move(values));
}

AttributeValueDataset gen_attribute_dataset(std::size_t n_attributes, std::size_t n_values,
                                            Rng& rng, std::optional<std::size_t> subset_size) {
  if (n_attributes < 1) throw std::invalid_argument("need at least one attribute");
  if (n_values < 2) throw std::invalid_argument("need at least two values per attribute");
  std::size_t total = 1;
  for (std::size_t a = 0; a < n_attributes; ++a) {
    if (total > (std::size_t{1} << 40) / n_values) {
      throw std::invalid_argument("attribute space too large to enumerate");
    }
    total *= n_values;
  }
  if (subset_size && *subset_size > total) {
    throw std::invalid_argument("subset of " + std::to_string(*subset_size) +
                                " items requested from " + std::to_string(total));
  }

  std::vector<std::size_t> chosen(total);
  for (std::size_t i = 0; i < total; ++i) chosen[i] = i;
  if (subset_size) {
    rng.shuffle(chosen);
    chosen.resize(*subset_size);
    std::sort(chosen.begin(), chosen.end());
  }

  AttributeValueDataset ds;
  ds.n_attributes = n_attributes;
  ds.n_values = n_values;
  for (std::size_t code : chosen) {
    std::vector<std::size_t> tuple(n_attributes);
    for (std::size_t a = n_attributes; a-- > 0;) {
      tuple[a] = code % n_values;
      code /= n_values;
    }
    ds.items.push_back(std::move(tuple));
  }
  return ds;
}

Tensor IdxDataset::images() const {
  std::vector<double> values(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) values[i] = pixels[i] / 255.0;
  return Tensor({size(), dim()}, std::move(values));
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::uint32_t be32(const std::string& bytes, std::size_t offset) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + 3]));
}

void put_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

void expect_size(const std::string& bytes, std::size_t expected, const std::filesystem::path& path) {
  if (bytes.size() != expected) {
    throw IdxError(path.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                   std::to_string(bytes.size()));
  }
}

}  // namespace

IdxDataset parse_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const std::string img = read_file(images);
  const std::string lab = read_file(labels);
  if (img.size() < 16) expect_size(img, 16, images);
  if (lab.size() < 8) expect_size(lab, 8, labels);
  if (const auto magic = be32(img, 0); magic != 2051) {
    throw IdxError(images.string() + ": bad magic " + std::to_string(magic) +
                   " (expected 2051 for an image file)");
  }
  if (const auto magic = be32(lab, 0); magic != 2049) {
    throw IdxError(labels.string() + ": bad magic " + std::to_string(magic) +
                   " (expected 2049 for a label file)");
  }
  const std::size_t count = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  const std::size_t label_count = be32(lab, 4);
  expect_size(img, 16 + count * rows * cols, images);
  expect_size(lab, 8 + label_count, labels);
  if (count != label_count) {
    throw IdxError("image count " + std::to_string(count) + " differs from label count " +
                   std::to_string(label_count));
  }
  IdxDataset ds;
  ds.rows = rows;
  ds.cols = cols;
  ds.pixels.assign(img.begin() + 16, img.end());
  ds.labels.assign(lab.begin() + 8, lab.end());
  return ds;
}

void write_idx(const IdxDataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels) {
  std::string img, lab;
  put_be32(img, 2051);
  put_be32(img, static_cast<std::uint32_t>(data.size()));
  put_be32(img, static_cast<std::uint32_t>(data.rows));
  put_be32(img, static_cast<std::uint32_t>(data.cols));
  img.append(data.pixels.begin(), data.pixels.end());
  put_be32(lab, 2049);
  put_be32(lab, static_cast<std::uint32_t>(data.size()));
  lab.append(data.labels.begin(), data.labels.end());
  std::ofstream(images, std::ios::binary).write(img.data(), static_cast<std::streamsize>(img.size()));
  std::ofstream(labels, std::ios::binary).write(lab.data(), static_cast<std::streamsize>(lab.size()));
}

BatchLoader::BatchLoader(const GameDataset& data, std::size_t batch_size, bool shuffle,
                         std::uint64_t seed)
    : data_(data), batch_size_(batch_size), shuffle_(shuffle), seed_(seed) {
  if (batch_size_ == 0) throw std::invalid_argument("batch size must be at least 1");
}

std::size_t BatchLoader::num_batches() const {
  return (data_.size() + batch_size_ - 1) / batch_size_;
}

std::vector<std::vector<std::size_t>> BatchLoader::index_batches(std::uint64_t epoch) const {
  std::vector<std::size_t> order(data_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (shuffle_) {
    Rng rng(derive_seed(seed_, "shuffle", epoch));
    rng.shuffle(order);
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size_) {
    const std::size_t end = std::min(order.size(), start + batch_size_);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<GameBatch> BatchLoader::batches(std::uint64_t epoch) const {
  Rng rng(derive_seed(seed_, "instances", epoch));
  std::vector<GameBatch> out;
  for (const auto& idx : index_batches(epoch)) out.push_back(data_.batch(idx, rng));
  return out;
}

}  // namespace egg
