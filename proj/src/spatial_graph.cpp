#include "stg/spatial_graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stg {

double FeatureVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

double cosine(const FeatureVector& a, const FeatureVector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("cosine: feature lengths differ");
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0) || !std::isfinite(na) || !std::isfinite(nb)) {
    throw std::invalid_argument("cosine: zero-norm or non-finite feature vector");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a.values[i] * b.values[i];
  return dot / (na * nb);
}

double EdgeWeights::row_sum(std::size_t v) const {
  double s = 0.0;
  for (std::size_t u = 0; u < n_; ++u) {
    if (u != v) s += (*this)(v, u);
  }
  return s;
}

EdgeWeights edge_weights(std::span<const ProposalNode> nodes, double alpha, double beta) {
  if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("edge_weights: negative alpha/beta");
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    const double n = nodes[v].feature.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw std::invalid_argument("edge_weights: node " + std::to_string(v) +
                                  " has a zero-norm feature");
    }
  }
  EdgeWeights w(nodes.size());
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    for (std::size_t u = v + 1; u < nodes.size(); ++u) {
      const double raw = alpha * cosine(nodes[v].feature, nodes[u].feature) +
                         beta * iou_box(nodes[v].bbox, nodes[u].bbox);
      const double c = std::clamp(raw, 0.0, 1.0);
      w(v, u) = c;
      w(u, v) = c;
    }
  }
  return w;
}

SoftMask aggregate(std::span<const SoftMask> states, const EdgeWeights& w, std::size_t v) {
  if (states.size() != w.size()) throw DimensionMismatch("aggregate: state count != graph size");
  if (v >= states.size()) throw std::out_of_range("aggregate: node index");
  SoftMask m(states[v].height(), states[v].width());
  for (std::size_t u = 0; u < states.size(); ++u) {
    if (!states[u].same_shape(m)) throw DimensionMismatch("aggregate: node states differ in shape");
    if (u == v) continue;
    const double wu = w(v, u);
    if (wu == 0.0) continue;
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += wu * states[u][i];
  }
  return m;
}

SoftMask update_node(const SoftMask& state, const SoftMask& message, const EdgeWeights& w,
                     std::size_t v) {
  if (!state.same_shape(message)) throw DimensionMismatch("update_node: state/message shape");
  const double self = 1.0 - w(v, v);
  const double norm = 1.0 + w.row_sum(v);
  SoftMask out(state.height(), state.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (self * state[i] + message[i]) / norm;
  return out;
}

std::vector<SoftMask> run_spatial(std::vector<SoftMask> states, const EdgeWeights& w,
                                  int iterations) {
  if (iterations < 1 || iterations > 3) {
    throw std::invalid_argument("run_spatial: iterations must be in [1, 3]");
  }
  for (int it = 0; it < iterations; ++it) {
    std::vector<SoftMask> next;
    next.reserve(states.size());
    for (std::size_t v = 0; v < states.size(); ++v) {
      next.push_back(update_node(states[v], aggregate(states, w, v), w, v));
    }
    states = std::move(next);
  }
  return states;
}

std::vector<SoftMask> run_spatial(std::span<const ProposalNode> nodes, double alpha, double beta,
                                  int iterations) {
  const EdgeWeights w = edge_weights(nodes, alpha, beta);
  std::vector<SoftMask> states;
  states.reserve(nodes.size());
  for (const auto& n : nodes) states.push_back(n.mask);
  return run_spatial(std::move(states), w, iterations);
}

BinaryMask binarize(const SoftMask& h, double thr) {
  BinaryMask out(h.height(), h.width());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i] > thr ? 1 : 0;
  return out;
}

}  // namespace stg
