#include "cloudeye/pq_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "cloudeye/kernels.hpp"
#include "cloudeye/rng.hpp"

namespace cloudeye {

namespace {

// deterministic k-means++ seeding followed by Lloyd iterations
std::vector<double> train_codebook(const std::vector<double>& data, int dim,
                                   int k, int iters, Rng& rng) {
  const int n = static_cast<int>(data.size()) / dim;
  std::vector<double> centroids(static_cast<std::size_t>(k) * dim);

  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  int first = rng.uniform_int(0, n);
  std::copy_n(data.begin() + static_cast<std::size_t>(first) * dim, dim,
              centroids.begin());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double* p = data.data() + static_cast<std::size_t>(i) * dim;
      const double* q = centroids.data() + static_cast<std::size_t>(c - 1) * dim;
      double d = 0.0;
      for (int j = 0; j < dim; ++j) {
        const double diff = p[j] - q[j];
        d += diff * diff;
      }
      d2[i] = std::min(d2[i], d);
      total += d2[i];
    }
    int pick = 0;
    if (total > 0.0) {
      const double r = rng.uniform01() * total;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.uniform_int(0, n);
    }
    std::copy_n(data.begin() + static_cast<std::size_t>(pick) * dim, dim,
                centroids.begin() + static_cast<std::size_t>(c) * dim);
  }

  std::vector<int> assign, prev;
  for (int iter = 0; iter < iters; ++iter) {
    kernels::assign_nearest(data, dim, centroids, assign);
    if (assign == prev) break;
    prev = assign;
    std::vector<double> sums(static_cast<std::size_t>(k) * dim, 0.0);
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      const double* p = data.data() + static_cast<std::size_t>(i) * dim;
      double* s = sums.data() + static_cast<std::size_t>(assign[i]) * dim;
      for (int j = 0; j < dim; ++j) s[j] += p[j];
      ++counts[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // repopulate from the point farthest from its assigned centroid
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double* p = data.data() + static_cast<std::size_t>(i) * dim;
          const double* q =
              centroids.data() + static_cast<std::size_t>(assign[i]) * dim;
          double d = 0.0;
          for (int j = 0; j < dim; ++j) {
            const double diff = p[j] - q[j];
            d += diff * diff;
          }
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        std::copy_n(data.begin() + static_cast<std::size_t>(far) * dim, dim,
                    centroids.begin() + static_cast<std::size_t>(c) * dim);
        continue;
      }
      double* s = sums.data() + static_cast<std::size_t>(c) * dim;
      for (int j = 0; j < dim; ++j) {
        centroids[static_cast<std::size_t>(c) * dim + j] = s[j] / counts[c];
      }
    }
  }
  return centroids;
}

}  // namespace

PqIndex PqIndex::build(const ConfigSet& set, PqParams params) {
  PqIndex index;
  index.params_ = params;
  if (set.empty()) {
    index.exhaustive_ = true;
    return index;
  }

  std::vector<DistributionEmbedding> embeddings;
  embeddings.reserve(set.size());
  for (const auto& e : set) embeddings.push_back(e.embedding);
  index.metric_ = fit_metric(embeddings);
  index.dim_ = embeddings[0].dim();
  if (index.dim_ % params.subspaces != 0) {
    throw std::invalid_argument("PqIndex: dim not divisible by subspaces");
  }

  std::vector<float> vectors;
  vectors.reserve(set.size() * index.dim_);
  for (const auto& e : set) {
    const auto v = scaled_vector(e.embedding, index.metric_);
    vectors.insert(vectors.end(), v.begin(), v.end());
    index.entry_ids_.push_back(e.id);
  }

  if (static_cast<int>(set.size()) < params.codebook_size) {
    index.exhaustive_ = true;
    index.raw_ = std::move(vectors);
    return index;
  }

  const int n = static_cast<int>(set.size());
  const int m = params.subspaces;
  const int sub = index.dim_ / m;
  index.codebooks_.resize(static_cast<std::size_t>(m) * params.codebook_size * sub);
  index.codes_.resize(static_cast<std::size_t>(n) * m);

  for (int s = 0; s < m; ++s) {
    std::vector<double> sub_data(static_cast<std::size_t>(n) * sub);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < sub; ++j) {
        sub_data[static_cast<std::size_t>(i) * sub + j] =
            vectors[static_cast<std::size_t>(i) * index.dim_ + s * sub + j];
      }
    }
    Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(s)));
    const auto centroids = train_codebook(sub_data, sub, params.codebook_size,
                                          params.kmeans_iters, rng);
    for (std::size_t j = 0; j < centroids.size(); ++j) {
      index.codebooks_[static_cast<std::size_t>(s) * params.codebook_size * sub + j] =
          static_cast<float>(centroids[j]);
    }
    std::vector<int> assign;
    kernels::assign_nearest(sub_data, sub, centroids, assign);
    for (int i = 0; i < n; ++i) {
      index.codes_[static_cast<std::size_t>(i) * m + s] =
          static_cast<std::uint8_t>(assign[i]);
    }
  }
  return index;
}

std::vector<std::int64_t> PqIndex::query(
    const DistributionEmbedding& query_embedding, int top_n) const {
  if (entry_ids_.empty()) return {};
  const auto q = scaled_vector(query_embedding, metric_);
  const int n = static_cast<int>(entry_ids_.size());

  std::vector<float> dists;
  if (exhaustive_) {
    dists.resize(n);
    for (int i = 0; i < n; ++i) {
      const float* v = raw_.data() + static_cast<std::size_t>(i) * dim_;
      float d = 0.0f;
      for (int j = 0; j < dim_; ++j) {
        const float diff = v[j] - q[j];
        d += diff * diff;
      }
      dists[i] = d;
    }
  } else {
    const int m = params_.subspaces;
    const int sub = dim_ / m;
    const int ks = params_.codebook_size;
    std::vector<float> tables(static_cast<std::size_t>(m) * ks);
    for (int s = 0; s < m; ++s) {
      for (int c = 0; c < ks; ++c) {
        const float* cen =
            codebooks_.data() + (static_cast<std::size_t>(s) * ks + c) * sub;
        float d = 0.0f;
        for (int j = 0; j < sub; ++j) {
          const float diff = q[s * sub + j] - cen[j];
          d += diff * diff;
        }
        tables[static_cast<std::size_t>(s) * ks + c] = d;
      }
    }
    kernels::pq_adc_scan(codes_, m, ks, tables, dists);
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dists[a] != dists[b]) return dists[a] < dists[b];
    return entry_ids_[a] < entry_ids_[b];
  });
  const int take = std::min(top_n, n);
  std::vector<std::int64_t> out;
  out.reserve(take);
  for (int i = 0; i < take; ++i) out.push_back(entry_ids_[order[i]]);
  return out;
}

std::vector<ConfigEntry> query_configs(const PqIndex& index, const ConfigSet& set,
                                       const DistributionEmbedding& query,
                                       int top_n) {
  std::unordered_map<std::int64_t, const ConfigEntry*> by_id;
  by_id.reserve(set.size());
  for (const auto& e : set) by_id[e.id] = &e;
  std::vector<ConfigEntry> out;
  for (std::int64_t id : index.query(query, top_n)) {
    auto it = by_id.find(id);
    if (it != by_id.end()) out.push_back(*it->second);
  }
  return out;
}

namespace {

constexpr char kPqMagic[4] = {'C', 'E', 'P', 'Q'};

void put_u32(std::ofstream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

std::uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("PqIndex: truncated sidecar");
  return b[0] | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

void put_f32(std::ofstream& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

float get_f32(std::ifstream& in) {
  const std::uint32_t bits = get_u32(in);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

void PqIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("PqIndex: cannot open " + path);
  out.write(kPqMagic, 4);
  out.put(1);  // version
  out.put(exhaustive_ ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(params_.subspaces));
  put_u32(out, static_cast<std::uint32_t>(params_.codebook_size));
  put_u32(out, static_cast<std::uint32_t>(dim_));
  put_u32(out, static_cast<std::uint32_t>(entry_ids_.size()));
  put_u32(out, static_cast<std::uint32_t>(metric_.inv_std.size()));
  for (float f : metric_.inv_std) put_f32(out, f);
  for (std::int64_t id : entry_ids_) {
    put_u32(out, static_cast<std::uint32_t>(id & 0xffffffff));
    put_u32(out, static_cast<std::uint32_t>((id >> 32) & 0xffffffff));
  }
  if (exhaustive_) {
    for (float f : raw_) put_f32(out, f);
  } else {
    for (float f : codebooks_) put_f32(out, f);
    out.write(reinterpret_cast<const char*>(codes_.data()),
              static_cast<std::streamsize>(codes_.size()));
  }
}

PqIndex PqIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("PqIndex: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kPqMagic, 4) != 0) {
    throw std::runtime_error("PqIndex: bad magic");
  }
  const int version = in.get();
  if (version != 1) throw std::runtime_error("PqIndex: unsupported version");
  PqIndex index;
  index.exhaustive_ = in.get() == 1;
  index.params_.subspaces = static_cast<int>(get_u32(in));
  index.params_.codebook_size = static_cast<int>(get_u32(in));
  index.dim_ = static_cast<int>(get_u32(in));
  const std::uint32_t n = get_u32(in);
  const std::uint32_t metric_n = get_u32(in);
  index.metric_.inv_std.resize(metric_n);
  for (auto& f : index.metric_.inv_std) f = get_f32(in);
  index.entry_ids_.resize(n);
  for (auto& id : index.entry_ids_) {
    const std::uint64_t lo = get_u32(in);
    const std::uint64_t hi = get_u32(in);
    id = static_cast<std::int64_t>(lo | (hi << 32));
  }
  if (index.exhaustive_) {
    index.raw_.resize(static_cast<std::size_t>(n) * index.dim_);
    for (auto& f : index.raw_) f = get_f32(in);
  } else {
    const int sub = index.dim_ / index.params_.subspaces;
    index.codebooks_.resize(static_cast<std::size_t>(index.params_.subspaces) *
                            index.params_.codebook_size * sub);
    for (auto& f : index.codebooks_) f = get_f32(in);
    index.codes_.resize(static_cast<std::size_t>(n) * index.params_.subspaces);
    in.read(reinterpret_cast<char*>(index.codes_.data()),
            static_cast<std::streamsize>(index.codes_.size()));
    if (!in) throw std::runtime_error("PqIndex: truncated sidecar");
  }
  return index;
}

}  // namespace cloudeye
