#include "fedcomp/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

namespace fedcomp {

namespace fs = std::filesystem;
using nlohmann::json;

void SyntheticSpec::validate() const {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha < 0.0 || beta < 0.0) {
    throw UsageError("synthetic spec: alpha and beta must be finite and nonnegative");
  }
  if (n_clients < 1) {
    throw UsageError("synthetic spec: need at least one client");
  }
  if (input_dim < 1 || n_classes < 2) {
    throw UsageError("synthetic spec: require input_dim >= 1 and n_classes >= 2");
  }
  if (min_samples < 1 || max_samples < min_samples) {
    throw UsageError("synthetic spec: require 1 <= min_samples <= max_samples");
  }
}

DatasetBundle generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  DatasetBundle bundle;
  bundle.spec = spec;
  bundle.shards.reserve(spec.n_clients);
  bundle.true_weights.reserve(spec.n_clients);
  bundle.true_bias.reserve(spec.n_clients);

  // One shared top-level draw; per-client model means scatter around it
  // with variance alpha.
  auto hyper_eng = rng::engine(rng::derive(spec.seed, "synthetic.hyper"));
  std::normal_distribution<double> hyper_gauss;
  const double mu0 = hyper_gauss(hyper_eng);

  auto sizes_eng = rng::engine(rng::derive(spec.seed, "synthetic.sizes"));
  std::lognormal_distribution<double> size_law(4.0, 1.0);

  // Per-coordinate feature standard deviation sqrt(j^-1.2), 1-based j.
  Eigen::VectorXd feat_std(spec.input_dim);
  for (int j = 0; j < spec.input_dim; ++j) {
    feat_std[j] = std::pow(static_cast<double>(j + 1), -0.6);
  }

  for (int i = 0; i < spec.n_clients; ++i) {
    auto model_eng = rng::engine(rng::derive(spec.seed, "synthetic.model", i));
    std::normal_distribution<double> model_gauss;
    const double u_i = mu0 + std::sqrt(spec.alpha) * model_gauss(model_eng);

    Eigen::MatrixXd w(spec.n_classes, spec.input_dim);
    Eigen::VectorXd b(spec.n_classes);
    for (int r = 0; r < spec.n_classes; ++r) {
      for (int c = 0; c < spec.input_dim; ++c) {
        w(r, c) = u_i + model_gauss(model_eng);
      }
    }
    for (int r = 0; r < spec.n_classes; ++r) {
      b[r] = u_i + model_gauss(model_eng);
    }

    auto input_eng = rng::engine(rng::derive(spec.seed, "synthetic.input", i));
    std::normal_distribution<double> input_gauss;
    const double input_mean = std::sqrt(spec.beta) * input_gauss(input_eng);
    Eigen::VectorXd v(spec.input_dim);
    for (int j = 0; j < spec.input_dim; ++j) {
      v[j] = input_mean + input_gauss(input_eng);
    }

    const double raw_size = size_law(sizes_eng);
    const long long rounded = std::llround(raw_size);
    const int m = static_cast<int>(std::clamp<long long>(rounded, spec.min_samples,
                                                         spec.max_samples));

    auto feature_eng = rng::engine(rng::derive(spec.seed, "synthetic.features", i));
    std::normal_distribution<double> feature_gauss;
    ClientShard shard;
    shard.features.resize(m, spec.input_dim);
    shard.labels.resize(m);
    shard.n_classes = spec.n_classes;
    for (int s = 0; s < m; ++s) {
      for (int j = 0; j < spec.input_dim; ++j) {
        shard.features(s, j) = v[j] + feat_std[j] * feature_gauss(feature_eng);
      }
      const Eigen::VectorXd logits = w * shard.features.row(s).transpose() + b;
      int best = 0;
      for (int c = 1; c < spec.n_classes; ++c) {
        if (logits[c] > logits[best]) best = c;
      }
      shard.labels[s] = static_cast<std::uint32_t>(best);
    }

    bundle.shards.push_back(std::move(shard));
    bundle.true_weights.push_back(std::move(w));
    bundle.true_bias.push_back(std::move(b));
    bundle.model_means.push_back(u_i);
    bundle.input_means.push_back(input_mean);
  }
  return bundle;
}

std::uint64_t fnv1a64(const unsigned char* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string shard_filename(int client_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "client_%03d.bin", client_index);
  return buf;
}

namespace {

constexpr char kMagic[8] = {'F', 'D', 'C', 'S', 'H', 'R', 'D', '1'};
constexpr std::uint32_t kFormatVersion = 1;

void require_little_endian() {
  if constexpr (std::endian::native != std::endian::little) {
    throw CapabilityError("shard format is little-endian only");
  }
}

template <typename T>
void append_raw(std::vector<unsigned char>& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

// Sequential reader over a byte buffer; throws past-the-end as ConfigError
// so truncated files surface as bad input, not UB.
class ByteReader {
 public:
  ByteReader(const std::vector<unsigned char>& buf, std::string name)
      : buf_(buf), name_(std::move(name)) {}

  template <typename T>
  T take() {
    if (pos_ + sizeof(T) > buf_.size()) {
      throw ConfigError("dataset shard " + name_ + " is truncated");
    }
    T value;
    std::memcpy(&value, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  void expect_consumed() const {
    if (pos_ != buf_.size()) {
      throw ConfigError("dataset shard " + name_ + " has trailing bytes");
    }
  }

 private:
  const std::vector<unsigned char>& buf_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::vector<unsigned char> encode_shard(const DatasetBundle& bundle, int i) {
  const ClientShard& shard = bundle.shards[i];
  std::vector<unsigned char> out;
  out.reserve(56 + shard.features.size() * 8 + shard.labels.size() * 4);
  for (const char ch : kMagic) out.push_back(static_cast<unsigned char>(ch));
  append_raw<std::uint32_t>(out, kFormatVersion);
  append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(i));
  append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(shard.n_samples()));
  append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(shard.input_dim()));
  append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(shard.n_classes));
  append_raw<std::uint32_t>(out, 0u);
  append_raw<double>(out, bundle.spec.alpha);
  append_raw<double>(out, bundle.spec.beta);
  append_raw<std::uint64_t>(out, bundle.spec.seed);
  for (int r = 0; r < shard.features.rows(); ++r) {
    for (int c = 0; c < shard.features.cols(); ++c) {
      append_raw<double>(out, shard.features(r, c));
    }
  }
  for (const std::uint32_t label : shard.labels) {
    append_raw<std::uint32_t>(out, label);
  }
  return out;
}

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<unsigned char> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open dataset file " + path.string());
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace

std::uint64_t write_bundle(const DatasetBundle& bundle, const std::string& directory) {
  require_little_endian();
  if (bundle.shards.empty()) {
    throw UsageError("write_bundle: bundle has no shards");
  }
  fs::create_directories(directory);

  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["alpha"] = bundle.spec.alpha;
  manifest["beta"] = bundle.spec.beta;
  manifest["n_clients"] = static_cast<int>(bundle.shards.size());
  manifest["input_dim"] = bundle.shards[0].input_dim();
  manifest["n_classes"] = bundle.shards[0].n_classes;
  manifest["min_samples"] = bundle.spec.min_samples;
  manifest["max_samples"] = bundle.spec.max_samples;
  manifest["seed"] = bundle.spec.seed;

  std::string hash_chain;
  json shards = json::array();
  for (int i = 0; i < static_cast<int>(bundle.shards.size()); ++i) {
    const std::vector<unsigned char> bytes = encode_shard(bundle, i);
    const std::string name = shard_filename(i);
    const fs::path path = fs::path(directory) / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out ||
        !out.write(reinterpret_cast<const char*>(bytes.data()),
                   static_cast<std::streamsize>(bytes.size()))) {
      throw ConfigError("cannot write dataset file " + path.string());
    }
    const std::string digest = hash_hex(fnv1a64(bytes.data(), bytes.size()));
    hash_chain += digest;
    shards.push_back({{"file", name},
                      {"samples", bundle.shards[i].n_samples()},
                      {"hash", digest}});
  }
  const std::uint64_t bundle_hash =
      fnv1a64(reinterpret_cast<const unsigned char*>(hash_chain.data()), hash_chain.size());
  manifest["shards"] = std::move(shards);
  manifest["bundle_hash"] = hash_hex(bundle_hash);

  const fs::path manifest_path = fs::path(directory) / "manifest.json";
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out || !(out << manifest.dump(2) << '\n')) {
    throw ConfigError("cannot write " + manifest_path.string());
  }
  return bundle_hash;
}

DatasetBundle read_bundle(const std::string& directory) {
  require_little_endian();
  const fs::path manifest_path = fs::path(directory) / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) {
    throw ConfigError("cannot open " + manifest_path.string());
  }
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw ConfigError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }

  DatasetBundle bundle;
  try {
    bundle.spec.alpha = manifest.at("alpha").get<double>();
    bundle.spec.beta = manifest.at("beta").get<double>();
    bundle.spec.n_clients = manifest.at("n_clients").get<int>();
    bundle.spec.input_dim = manifest.at("input_dim").get<int>();
    bundle.spec.n_classes = manifest.at("n_classes").get<int>();
    bundle.spec.min_samples = manifest.at("min_samples").get<int>();
    bundle.spec.max_samples = manifest.at("max_samples").get<int>();
    bundle.spec.seed = manifest.at("seed").get<std::uint64_t>();

    for (const json& entry : manifest.at("shards")) {
      const std::string name = entry.at("file").get<std::string>();
      const fs::path path = fs::path(directory) / name;
      const std::vector<unsigned char> bytes = read_file_bytes(path);
      const std::string digest = hash_hex(fnv1a64(bytes.data(), bytes.size()));
      if (digest != entry.at("hash").get<std::string>()) {
        throw ConfigError("dataset shard " + name + " does not match its manifest hash");
      }

      ByteReader reader(bytes, name);
      char magic[8];
      for (char& ch : magic) ch = reader.take<char>();
      if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ConfigError("dataset shard " + name + " has wrong magic bytes");
      }
      if (reader.take<std::uint32_t>() != kFormatVersion) {
        throw ConfigError("dataset shard " + name + " has unsupported version");
      }
      reader.take<std::uint32_t>();  // client index, informational
      const auto n_samples = reader.take<std::uint32_t>();
      const auto input_dim = reader.take<std::uint32_t>();
      const auto n_classes = reader.take<std::uint32_t>();
      reader.take<std::uint32_t>();  // reserved
      reader.take<double>();         // alpha, informational
      reader.take<double>();         // beta, informational
      reader.take<std::uint64_t>();  // seed, informational
      if (static_cast<int>(input_dim) != bundle.spec.input_dim ||
          static_cast<int>(n_classes) != bundle.spec.n_classes) {
        throw ConfigError("dataset shard " + name + " disagrees with the manifest dims");
      }

      ClientShard shard;
      shard.n_classes = static_cast<int>(n_classes);
      shard.features.resize(n_samples, input_dim);
      shard.labels.resize(n_samples);
      for (std::uint32_t r = 0; r < n_samples; ++r) {
        for (std::uint32_t c = 0; c < input_dim; ++c) {
          shard.features(r, c) = reader.take<double>();
        }
      }
      for (std::uint32_t r = 0; r < n_samples; ++r) {
        const std::uint32_t label = reader.take<std::uint32_t>();
        if (label >= n_classes) {
          throw ConfigError("dataset shard " + name + " has an out-of-range label");
        }
        shard.labels[r] = label;
      }
      reader.expect_consumed();
      bundle.shards.push_back(std::move(shard));
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }

  if (static_cast<int>(bundle.shards.size()) != bundle.spec.n_clients) {
    throw ConfigError("manifest client count does not match its shard list");
  }
  return bundle;
}

}  // namespace fedcomp
