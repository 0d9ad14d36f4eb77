#pragma once

#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scp/head.hpp"
#include "scp/metrics.hpp"

namespace scp {

/// Share of items above which a single cluster counts as collapsed.
inline constexpr double kCollapseFraction = 0.9;

struct ClusteringReport {
  std::size_t n_items = 0;
  std::size_t n_clusters = 0;
  std::vector<Label> hard_labels;
  std::vector<std::size_t> occupancy;
  std::size_t empty_clusters = 0;
  double max_cluster_fraction = 0.0;
  bool collapsed = false;
  std::optional<double> acc;
  std::optional<double> nmi;
  std::optional<double> ari;

  bool operator==(const ClusteringReport&) const = default;
};

/// Hard labels are the row argmax with ties resolved to the lowest index.
template <class Derived>
std::vector<Label> argmax_labels(const Eigen::MatrixBase<Derived>& probs) {
  std::vector<Label> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < probs.cols(); ++k) {
      if (probs(i, k) > probs(i, best)) best = k;
    }
    out[static_cast<std::size_t>(i)] = static_cast<Label>(best);
  }
  return out;
}

inline ClusteringReport report_from_labels(std::vector<Label> hard, std::size_t n_clusters,
                                           const std::optional<std::vector<Label>>& truth) {
  ClusteringReport r;
  r.n_items = hard.size();
  r.n_clusters = n_clusters;
  r.occupancy.assign(n_clusters, 0);
  for (Label l : hard) {
    if (l >= n_clusters) throw ShapeError("cluster label outside [0, K)");
    ++r.occupancy[l];
  }
  std::size_t largest = 0;
  for (auto c : r.occupancy) {
    if (c == 0) ++r.empty_clusters;
    largest = std::max(largest, c);
  }
  r.max_cluster_fraction =
      r.n_items == 0 ? 0.0 : static_cast<double>(largest) / static_cast<double>(r.n_items);
  r.collapsed = r.empty_clusters > 0 || r.max_cluster_fraction > kCollapseFraction;
  if (truth) {
    if (truth->size() != hard.size()) throw ShapeError("truth labels differ in length from assignments");
    if (!hard.empty()) {
      r.acc = hungarian_acc(hard, *truth);
      r.nmi = nmi(hard, *truth);
      if (hard.size() >= 2) r.ari = ari(hard, *truth);
    }
  }
  r.hard_labels = std::move(hard);
  return r;
}

template <class Derived>
ClusteringReport cluster_report(const Eigen::MatrixBase<Derived>& probs,
                                const std::optional<std::vector<Label>>& truth) {
  return report_from_labels(argmax_labels(probs), static_cast<std::size_t>(probs.cols()), truth);
}

template <class T>
ClusteringReport cluster_report(const AssignmentBatch<T>& batch,
                                const std::optional<std::vector<Label>>& truth) {
  return cluster_report(batch.probs, truth);
}

// Field names of both serializations: n_items, n_clusters, occupancy,
// empty_clusters, max_cluster_fraction, collapsed, acc, nmi, ari. The metric
// fields are omitted when no ground truth was available.

inline nlohmann::json to_json(const ClusteringReport& r) {
  nlohmann::json j;
  j["n_items"] = r.n_items;
  j["n_clusters"] = r.n_clusters;
  j["occupancy"] = r.occupancy;
  j["empty_clusters"] = r.empty_clusters;
  j["max_cluster_fraction"] = r.max_cluster_fraction;
  j["collapsed"] = r.collapsed;
  if (r.acc) j["acc"] = *r.acc;
  if (r.nmi) j["nmi"] = *r.nmi;
  if (r.ari) j["ari"] = *r.ari;
  return j;
}

inline std::string to_key_value(const ClusteringReport& r) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "n_items=" << r.n_items << '\n' << "n_clusters=" << r.n_clusters << '\n' << "occupancy=";
  for (std::size_t k = 0; k < r.occupancy.size(); ++k) os << (k ? "," : "") << r.occupancy[k];
  os << '\n'
     << "empty_clusters=" << r.empty_clusters << '\n'
     << "max_cluster_fraction=" << r.max_cluster_fraction << '\n'
     << "collapsed=" << (r.collapsed ? "true" : "false") << '\n';
  if (r.acc) os << "acc=" << *r.acc << '\n';
  if (r.nmi) os << "nmi=" << *r.nmi << '\n';
  if (r.ari) os << "ari=" << *r.ari << '\n';
  return os.str();
}

inline std::string to_table(const ClusteringReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "items      " << r.n_items << "\nclusters   " << r.n_clusters << '\n';
  if (r.acc) os << "ACC        " << *r.acc << '\n';
  if (r.nmi) os << "NMI        " << *r.nmi << '\n';
  if (r.ari) os << "ARI        " << *r.ari << '\n';
  os << "largest    " << r.max_cluster_fraction << "\nempty      " << r.empty_clusters
     << "\ncollapsed  " << (r.collapsed ? "yes" : "no") << "\noccupancy ";
  for (auto c : r.occupancy) os << ' ' << c;
  os << '\n';
  return os.str();
}

}  // namespace scp
