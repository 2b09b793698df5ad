#include "dvk/reference_init.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dvk/error.hpp"
#include "dvk/parallel.hpp"
#include "dvk/random.hpp"
#include "json.hpp"

namespace dvk {
namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
constexpr std::size_t kBlock = 2048;

std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

// Column i is the unit-length copy of feature i.
Matrix normalized_columns(const FeatureBag& bag) {
  Matrix x(bag.dim, static_cast<Eigen::Index>(bag.size()));
  parallel_for(block_count(bag.size()), [&](std::size_t b) {
    const std::size_t end = std::min(bag.size(), (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      const auto v = bag.vector(i);
      double sq = 0.0;
      for (float f : v) sq += double{f} * f;
      const double inv = 1.0 / std::sqrt(sq);
      for (std::uint32_t d = 0; d < bag.dim; ++d) x(d, i) = v[d] * inv;
    }
  });
  return x;
}

double squared_distance(const Matrix& x, Eigen::Index i, const Matrix& c, Eigen::Index j) {
  return (x.col(i) - c.col(j)).squaredNorm();
}

struct Assignment {
  std::vector<std::uint32_t> label;
  std::vector<double> distance;
  double inertia = 0.0;
};

// Nearest centroid per point; ties go to the lower cluster index.
Assignment assign(const Matrix& x, const Matrix& c) {
  const std::size_t n = static_cast<std::size_t>(x.cols());
  const Eigen::Index k = c.cols();
  Assignment out;
  out.label.resize(n);
  out.distance.resize(n);
  Eigen::VectorXd x_sq = x.colwise().squaredNorm().transpose();
  Eigen::VectorXd c_sq = c.colwise().squaredNorm().transpose();

  parallel_for(block_count(n), [&](std::size_t b) {
    const Eigen::Index begin = static_cast<Eigen::Index>(b * kBlock);
    const Eigen::Index len =
        static_cast<Eigen::Index>(std::min(n, (b + 1) * kBlock)) - begin;
    Matrix dots = c.transpose() * x.middleCols(begin, len);
    for (Eigen::Index p = 0; p < len; ++p) {
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t best_j = 0;
      for (Eigen::Index j = 0; j < k; ++j) {
        const double d = x_sq(begin + p) + c_sq(j) - 2.0 * dots(j, p);
        if (d < best) {
          best = d;
          best_j = static_cast<std::uint32_t>(j);
        }
      }
      out.label[begin + p] = best_j;
      out.distance[begin + p] = squared_distance(x, begin + p, c, best_j);
    }
  });
  for (double d : out.distance) out.inertia += d;
  return out;
}

Matrix seed_plus_plus(const Matrix& x, std::uint32_t clusters, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(x.cols());
  Rng rng(mix_seed({seed, 0x6b6d65616e73ULL}));
  Matrix c(x.rows(), clusters);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  c.col(0) = x.col(static_cast<Eigen::Index>(first(rng)));

  std::vector<double> min_d2(n);
  parallel_for(block_count(n), [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      min_d2[i] = squared_distance(x, static_cast<Eigen::Index>(i), c, 0);
    }
  });

  for (std::uint32_t k = 1; k < clusters; ++k) {
    double total = 0.0;
    for (double d : min_d2) total += d;
    if (!(total > 0.0)) {
      if (k == 1) {
        throw Error(ErrorCode::DegenerateBag,
                    "all features are identical but more than one cluster was requested");
      }
      throw Error(ErrorCode::TooFewPoints,
                  "only " + std::to_string(k) + " distinct features for " +
                      std::to_string(clusters) + " clusters");
    }
    const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t pick = n;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (min_d2[i] <= 0.0) continue;
      cumulative += min_d2[i];
      pick = i;
      if (cumulative > target) break;
    }
    c.col(k) = x.col(static_cast<Eigen::Index>(pick));
    parallel_for(block_count(n), [&](std::size_t b) {
      const std::size_t end = std::min(n, (b + 1) * kBlock);
      for (std::size_t i = b * kBlock; i < end; ++i) {
        min_d2[i] = std::min(min_d2[i], squared_distance(x, static_cast<Eigen::Index>(i), c, k));
      }
    });
  }
  return c;
}

// Normalized cluster means; empty clusters move to the points farthest from
// their current centroid.
Matrix update_centroids(const Matrix& x, const Matrix& c, const Assignment& a) {
  const Eigen::Index k = c.cols();
  Matrix sums = Matrix::Zero(x.rows(), k);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < a.label.size(); ++i) {
    sums.col(a.label[i]) += x.col(static_cast<Eigen::Index>(i));
    ++counts[a.label[i]];
  }

  Matrix next = c;
  std::vector<std::size_t> order;
  std::size_t next_far = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (counts[j] > 0) {
      const double norm = sums.col(j).norm();
      if (norm > 0.0) next.col(j) = sums.col(j) / norm;
      continue;
    }
    if (order.empty()) {
      order.resize(a.label.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        return a.distance[l] > a.distance[r];
      });
    }
    next.col(j) = x.col(static_cast<Eigen::Index>(order[next_far++ % order.size()]));
  }
  return next;
}

}  // namespace

void FeatureBag::add(std::span<const float> v, PatchOrigin origin) {
  vectors.insert(vectors.end(), v.begin(), v.end());
  origins.push_back(origin);
}

CollectedFeatures collect_features(const DemoDataset& dataset, std::uint32_t stride) {
  if (stride == 0) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
  if (dataset.step_count() == 0) throw Error(ErrorCode::NoFrames, "dataset has no frames");

  CollectedFeatures out;
  for (const auto& demo : dataset.demos) {
    for (std::size_t t = 0; t < demo.steps.size(); t += stride) {
      const auto frame = dataset.load_frame(demo.steps[t]);
      if (!frame->attention) {
        throw Error(ErrorCode::MissingAttention, "frame " + demo.steps[t].frame_ref);
      }
      if (out.bag.dim == 0) {
        out.bag.dim = frame->dim;
      } else if (frame->dim != out.bag.dim) {
        throw Error(ErrorCode::DimMismatch, "frame " + demo.steps[t].frame_ref);
      }
      const std::uint32_t image = out.bag.image_count++;
      out.bag.vectors.reserve(out.bag.vectors.size() + frame->embeddings.size());
      for (std::uint32_t r = 0; r < frame->rows; ++r) {
        for (std::uint32_t c = 0; c < frame->cols; ++c) {
          out.bag.add(frame->patch(r, c), {image, r, c});
        }
      }
      out.attention.push_back({frame->rows, frame->cols, *frame->attention});
    }
  }
  return out;
}

std::vector<std::uint32_t> Clustering::sizes() const {
  std::vector<std::uint32_t> out(cluster_count(), 0);
  for (auto label : assignment) ++out[label];
  return out;
}

Clustering kmeans(const FeatureBag& bag, const KMeansOptions& options) {
  if (options.clusters == 0) throw Error(ErrorCode::BadConfig, "clusters must be >= 1");
  if (options.max_iter == 0) throw Error(ErrorCode::BadConfig, "max_iter must be >= 1");
  if (!(options.tol >= 0.0)) throw Error(ErrorCode::BadConfig, "tol must be >= 0");
  if (bag.size() < options.clusters) {
    throw Error(ErrorCode::TooFewPoints, std::to_string(bag.size()) + " features for " +
                                             std::to_string(options.clusters) + " clusters");
  }

  const Matrix x = normalized_columns(bag);
  Matrix c = seed_plus_plus(x, options.clusters, options.seed);
  Assignment a = assign(x, c);

  Clustering out;
  out.dim = bag.dim;
  out.seed = options.seed;
  out.inertia_trace.push_back(a.inertia);
  for (std::uint32_t iter = 0; iter < options.max_iter; ++iter) {
    Matrix next_c = update_centroids(x, c, a);
    Assignment next_a = assign(x, next_c);
    // Exact Lloyd steps cannot raise inertia; a rise is rounding at a fixed
    // point, so keep the previous state.
    if (next_a.inertia > a.inertia) break;
    const double gain = a.inertia - next_a.inertia;
    c = std::move(next_c);
    a = std::move(next_a);
    out.inertia_trace.push_back(a.inertia);
    if (gain <= options.tol * out.inertia_trace[out.inertia_trace.size() - 2]) break;
  }

  out.centroids.assign(c.data(), c.data() + c.size());
  out.assignment = std::move(a.label);
  return out;
}

SaliencyTable SaliencyTable::empty(std::uint32_t images, std::uint32_t clusters) {
  SaliencyTable t;
  t.image_count = images;
  t.cluster_count = clusters;
  t.attention_sum.assign(std::size_t{images} * clusters, 0.0);
  t.patch_count.assign(std::size_t{images} * clusters, 0);
  return t;
}

std::optional<double> SaliencyTable::sal(std::uint32_t image, std::uint32_t cluster) const {
  const std::size_t i = std::size_t{image} * cluster_count + cluster;
  if (patch_count[i] == 0) return std::nullopt;
  return attention_sum[i] / patch_count[i];
}

void SaliencyTable::set(std::uint32_t image, std::uint32_t cluster, double sal_value) {
  const std::size_t i = std::size_t{image} * cluster_count + cluster;
  attention_sum[i] = sal_value;
  patch_count[i] = 1;
}

SaliencyTable saliency(const Clustering& clustering, const FeatureBag& bag,
                       std::span<const AttentionPlane> attention) {
  if (clustering.assignment.size() != bag.size()) {
    throw Error(ErrorCode::InvalidArgument, "assignment does not cover the bag");
  }
  if (attention.size() != bag.image_count) {
    throw Error(ErrorCode::MissingAttention, "one attention plane per image is required");
  }
  auto table = SaliencyTable::empty(bag.image_count, clustering.cluster_count());
  for (std::size_t i = 0; i < bag.size(); ++i) {
    const PatchOrigin& o = bag.origins[i];
    const std::size_t slot = std::size_t{o.image} * table.cluster_count + clustering.assignment[i];
    table.attention_sum[slot] += attention[o.image].at(o.row, o.col);
    ++table.patch_count[slot];
  }
  return table;
}

std::vector<std::uint32_t> count_votes(const SaliencyTable& table, double tau) {
  std::vector<std::uint32_t> votes(table.cluster_count, 0);
  for (std::uint32_t img = 0; img < table.image_count; ++img) {
    for (std::uint32_t j = 0; j < table.cluster_count; ++j) {
      const auto s = table.sal(img, j);
      if (s && *s > tau) ++votes[j];
    }
  }
  return votes;
}

ReferenceSet vote_and_select(const SaliencyTable& table, const Clustering& clustering,
                             double tau, std::uint32_t keep) {
  const std::uint32_t clusters = clustering.cluster_count();
  if (table.cluster_count != clusters) {
    throw Error(ErrorCode::DimMismatch, "saliency table and clustering disagree");
  }
  if (keep < 1 || keep > clusters) throw Error(ErrorCode::BadConfig, "require 1 <= m <= M");
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorCode::BadConfig, "tau outside [0, 1]");

  const auto votes = count_votes(table, tau);
  std::vector<std::uint32_t> order(clusters);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t l, std::uint32_t r) { return votes[l] > votes[r]; });

  ReferenceSet refs;
  refs.dim = clustering.dim;
  refs.config = {clusters, keep, static_cast<float>(tau), clustering.seed};
  for (std::uint32_t k = 0; k < keep; ++k) {
    for (double v : clustering.centroid(order[k])) refs.centroids.push_back(static_cast<float>(v));
    refs.votes.push_back(votes[order[k]]);
  }
  return refs;
}

InitResult init_references(const DemoDataset& dataset, const InitConfig& config) {
  if (config.keep < 1 || config.keep > config.clusters) {
    throw Error(ErrorCode::BadConfig, "require 1 <= m <= M");
  }
  CollectedFeatures collected = collect_features(dataset, config.stride);
  InitResult out;
  out.clustering = kmeans(collected.bag,
                          {config.clusters, config.seed, config.max_iter, config.tol});
  const SaliencyTable table = saliency(out.clustering, collected.bag, collected.attention);
  out.refs = vote_and_select(table, out.clustering, config.tau, config.keep);
  out.votes = count_votes(table, config.tau);

  std::vector<std::uint32_t> order(out.votes.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t l, std::uint32_t r) {
    return out.votes[l] > out.votes[r];
  });
  out.selected.assign(order.begin(), order.begin() + config.keep);
  out.image_count = collected.bag.image_count;
  out.feature_count = collected.bag.size();
  return out;
}

std::string clusters_report(const InitResult& result) {
  nlohmann::ordered_json doc;
  doc["images"] = result.image_count;
  doc["features"] = result.feature_count;
  doc["clusters"] = result.clustering.cluster_count();
  doc["keep"] = result.refs.size();
  doc["tau"] = result.refs.config.tau;
  doc["seed"] = result.refs.config.seed;
  doc["inertia_trace"] = result.clustering.inertia_trace;
  doc["all_votes_zero"] = result.refs.no_salient_votes();
  const auto sizes = result.clustering.sizes();
  std::vector<int> rank(sizes.size(), -1);
  for (std::size_t k = 0; k < result.selected.size(); ++k) {
    rank[result.selected[k]] = static_cast<int>(k);
  }
  auto& list = doc["per_cluster"] = nlohmann::ordered_json::array();
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    nlohmann::ordered_json entry;
    entry["cluster"] = j;
    entry["size"] = sizes[j];
    entry["votes"] = result.votes[j];
    entry["reference"] = rank[j] >= 0 ? nlohmann::ordered_json(rank[j]) : nullptr;
    list.push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

}  // namespace dvk
