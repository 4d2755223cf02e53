#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stg/geometry.hpp"

namespace stg {

struct FeatureVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double norm() const;
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

double cosine(const FeatureVector& a, const FeatureVector& b);

/// One proposal of one object: its box, its mask pasted onto the full
/// frame, and its appearance feature.
struct ProposalNode {
  BBox bbox;
  SoftMask mask;
  FeatureVector feature;
};

/// Dense N x N weights with a zero diagonal.
class EdgeWeights {
 public:
  EdgeWeights() = default;
  explicit EdgeWeights(std::size_t n) : n_(n), w_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t v, std::size_t u) { return w_[v * n_ + u]; }
  double operator()(std::size_t v, std::size_t u) const { return w_[v * n_ + u]; }
  /// Sum over u != v of W(v, u).
  double row_sum(std::size_t v) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> w_;
};

/// W(v,u) = clamp(alpha * cos(X_v, X_u) + beta * IoU(b_v, b_u), 0, 1) off
/// the diagonal. Throws on zero-norm or mismatched features.
EdgeWeights edge_weights(std::span<const ProposalNode> nodes, double alpha, double beta);

/// m_v = sum_{u != v} W(v,u) h_u, pixelwise.
SoftMask aggregate(std::span<const SoftMask> states, const EdgeWeights& w, std::size_t v);

/// ((1 - W(v,v)) h_v + m_v) / (1 + sum_{u != v} W(v,u)).
SoftMask update_node(const SoftMask& state, const SoftMask& message, const EdgeWeights& w,
                     std::size_t v);

/// `iterations` synchronous rounds of aggregate + update with frozen W.
std::vector<SoftMask> run_spatial(std::vector<SoftMask> states, const EdgeWeights& w,
                                  int iterations);
std::vector<SoftMask> run_spatial(std::span<const ProposalNode> nodes, double alpha, double beta,
                                  int iterations);

/// Strict threshold: 1 iff value > thr.
BinaryMask binarize(const SoftMask& h, double thr);

}  // namespace stg
