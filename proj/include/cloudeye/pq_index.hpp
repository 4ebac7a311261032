#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cloudeye/config_set.hpp"
#include "cloudeye/embedding.hpp"

namespace cloudeye {

struct PqParams {
  int subspaces = 4;       // M
  int codebook_size = 16;  // centroids per subspace
  int kmeans_iters = 25;
  std::uint64_t seed = 1;
};

// Product-quantization index over the config set's scaled embeddings. Falls
// back to an exhaustive scan when the set is too small to train codebooks.
class PqIndex {
 public:
  static PqIndex build(const ConfigSet& set, PqParams params);

  // entry ids ranked by asymmetric distance, ties by id
  std::vector<std::int64_t> query(const DistributionEmbedding& query_embedding,
                                  int top_n) const;

  bool exhaustive_fallback() const { return exhaustive_; }
  const EmbeddingMetric& metric() const { return metric_; }
  std::size_t size() const { return entry_ids_.size(); }

  // binary sidecar, magic "CEPQ"
  void save(const std::string& path) const;
  static PqIndex load(const std::string& path);

 private:
  PqParams params_;
  EmbeddingMetric metric_;
  int dim_ = 0;
  bool exhaustive_ = false;
  std::vector<std::int64_t> entry_ids_;
  // pq mode: codebooks (M x codebook_size x subdim) and per-entry codes
  std::vector<float> codebooks_;
  std::vector<std::uint8_t> codes_;
  // fallback mode: raw scaled vectors
  std::vector<float> raw_;
};

// convenience wrapper returning the ranked entries themselves
std::vector<ConfigEntry> query_configs(const PqIndex& index, const ConfigSet& set,
                                       const DistributionEmbedding& query,
                                       int top_n);

}  // namespace cloudeye
