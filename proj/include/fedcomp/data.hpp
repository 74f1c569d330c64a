#ifndef FEDCOMP_DATA_HPP_
#define FEDCOMP_DATA_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "fedcomp/core.hpp"

namespace fedcomp {

// One client's local training data. Rows of `features` are samples.
struct ClientShard {
  Eigen::MatrixXd features;
  std::vector<std::uint32_t> labels;
  int n_classes = 0;

  int n_samples() const { return static_cast<int>(features.rows()); }
  int input_dim() const { return static_cast<int>(features.cols()); }
};

// Parameters of the synthetic non-iid generator. `alpha` spreads the
// per-client labeling models, `beta` spreads the per-client input
// distributions; (0,0) makes all clients statistically identical.
struct SyntheticSpec {
  double alpha = 0.0;
  double beta = 0.0;
  int n_clients = 30;
  int input_dim = 60;
  int n_classes = 10;
  int min_samples = 10;
  int max_samples = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

// A generated dataset plus the labeling models behind it. The ground-truth
// models and the per-client mean draws are kept for dispersion diagnostics;
// they are not serialized, so bundles read back from disk carry data only.
struct DatasetBundle {
  SyntheticSpec spec;
  std::vector<ClientShard> shards;
  std::vector<Eigen::MatrixXd> true_weights;  // n_classes x input_dim per client
  std::vector<Eigen::VectorXd> true_bias;     // n_classes per client
  std::vector<double> model_means;            // top-level mean of client i's model entries
  std::vector<double> input_means;            // top-level mean of client i's input entries
};

// Hierarchical Gaussian generator. Client i draws a scalar model mean
// u_i = mu0 + sqrt(alpha) * xi_i around one shared hyper-draw mu0, fills a
// softmax model (W_i, b_i) with N(u_i, 1) entries, draws an input mean
// vector with N(sqrt(beta) * zeta_i, 1) entries, and samples features with
// decaying per-coordinate variance j^-1.2. Labels are the argmax class of
// the local model, ties toward the lowest index. Shard sizes follow a
// lognormal(4, 1) law clipped to [min_samples, max_samples]. Every draw
// comes from a purpose-keyed substream of spec.seed, so equal specs give
// byte-identical bundles.
DatasetBundle generate_synthetic(const SyntheticSpec& spec);

// FNV-1a 64-bit content hash used by the shard manifest.
std::uint64_t fnv1a64(const unsigned char* data, std::size_t size);

std::string shard_filename(int client_index);

// Binary shard layout (all little-endian): 8-byte magic "FDCSHRD1", then
// u32 version, client index, sample count, input dim, class count, reserved,
// then f64 alpha, f64 beta, u64 generator seed, then the feature matrix
// row-major as f64 and the labels as u32.
//
// write_bundle emits one shard file per client plus manifest.json listing
// each file with its content hash; returns the bundle-level hash. The
// directory is created when missing.
std::uint64_t write_bundle(const DatasetBundle& bundle, const std::string& directory);

// Reads a bundle back, verifying manifest hashes and header consistency.
// Malformed or corrupted files raise ConfigError.
DatasetBundle read_bundle(const std::string& directory);

}  // namespace fedcomp

#endif  // FEDCOMP_DATA_HPP_
