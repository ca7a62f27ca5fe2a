#include "egg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

namespace egg {

namespace {

constexpr char kMagic[8] = {'E', 'G', 'G', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint8_t kTensor = 1;
constexpr std::uint8_t kBlob = 2;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    bytes_.append(buf, sizeof(T));
  }
  void put_bytes(const std::string& s) { bytes_.append(s); }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(std::string("corrupt checkpoint: truncated while reading ") + what);
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw CheckpointError("checkpoint has no tensor '" + name + "'");
  return it->second;
}

const std::string& Checkpoint::blob(const std::string& name) const {
  auto it = blobs.find(name);
  if (it == blobs.end()) throw CheckpointError("checkpoint has no blob '" + name + "'");
  return it->second;
}

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& path) {
  Writer w;
  w.put_bytes(std::string(kMagic, sizeof(kMagic)));
  w.put<std::uint32_t>(ckpt.version);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size() + ckpt.blobs.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    w.put<std::uint8_t>(kTensor);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.put_bytes(name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.put<std::uint64_t>(d);
    for (double v : t.values()) w.put<double>(v);
  }
  for (const auto& [name, b] : ckpt.blobs) {
    w.put<std::uint8_t>(kBlob);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.put_bytes(name);
    w.put<std::uint64_t>(b.size());
    w.put_bytes(b);
  }

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Write then rename so a crash never leaves a half-written checkpoint.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw CheckpointError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint checkpoint_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(bytes);
  if (r.get_bytes(sizeof(kMagic), "magic") != std::string(kMagic, sizeof(kMagic))) {
    throw CheckpointError(path.string() + " is not a checkpoint (bad magic)");
  }
  Checkpoint ckpt;
  ckpt.version = r.get<std::uint32_t>("version");
  if (ckpt.version != Checkpoint::kFormatVersion) {
    throw CheckpointError("checkpoint format version " + std::to_string(ckpt.version) +
                          " is not supported (expected version " +
                          std::to_string(Checkpoint::kFormatVersion) + ")");
  }
  const auto count = r.get<std::uint32_t>("entry count");
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto kind = r.get<std::uint8_t>("entry kind");
    const auto name_len = r.get<std::uint32_t>("name length");
    std::string name = r.get_bytes(name_len, "name");
    if (kind == kTensor) {
      const auto rank = r.get<std::uint32_t>("rank");
      Shape shape(rank);
      std::size_t n = 1;
      for (auto& d : shape) {
        d = static_cast<std::size_t>(r.get<std::uint64_t>("extent"));
        n *= d;
      }
      if (n > bytes.size() / sizeof(double)) {
        throw CheckpointError("corrupt checkpoint: tensor '" + name + "' larger than file");
      }
      std::vector<double> values(n);
      for (auto& v : values) v = r.get<double>("tensor values");
      ckpt.tensors.emplace(std::move(name), Tensor(std::move(shape), std::move(values)));
    } else if (kind == kBlob) {
      const auto size = r.get<std::uint64_t>("blob size");
      ckpt.blobs.emplace(std::move(name), r.get_bytes(static_cast<std::size_t>(size), "blob"));
    } else {
      throw CheckpointError("corrupt checkpoint: unknown entry kind " + std::to_string(kind));
    }
  }
  if (!r.done()) throw CheckpointError("corrupt checkpoint: trailing bytes");
  return ckpt;
}

void store_params(Checkpoint& ckpt, const ParamList& params, const std::string& prefix) {
  for (const auto& p : params) ckpt.tensors.insert_or_assign(prefix + p.name, p.tensor.clone());
}

void restore_params(const Checkpoint& ckpt, const ParamList& params, const std::string& prefix) {
  std::vector<std::string> problems;
  std::map<std::string, bool> seen;
  for (const auto& p : params) {
    const std::string key = prefix + p.name;
    seen[key] = true;
    auto it = ckpt.tensors.find(key);
    if (it == ckpt.tensors.end()) {
      problems.push_back(p.name + ": missing from checkpoint (model " + shape_str(p.tensor.shape()) +
                         ")");
    } else if (it->second.shape() != p.tensor.shape()) {
      problems.push_back(p.name + ": checkpoint " + shape_str(it->second.shape()) + " vs model " +
                         shape_str(p.tensor.shape()));
    }
  }
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.rfind(prefix, 0) == 0 && !seen.count(name)) {
      problems.push_back(name.substr(prefix.size()) + ": in checkpoint " + shape_str(t.shape()) +
                         " but not in model");
    }
  }
  if (!problems.empty()) {
    std::ostringstream os;
    os << "checkpoint does not match the model architecture:";
    for (const auto& p : problems) os << "\n  " << p;
    throw CheckpointError(os.str());
  }
  for (const auto& p : params) {
    const Tensor& src = ckpt.tensors.at(prefix + p.name);
    Tensor dst = p.tensor;
    std::copy(src.values().begin(), src.values().end(), dst.mutable_values().begin());
  }
}

}  // namespace egg
