// Trains a cluster head on synthetic blobs and compares it with k-means.
//
//   ./scp_quickstart [epochs] [seed]

#include <cstdio>
#include <cstdlib>

#include "scp/blobs.hpp"
#include "scp/kmeans.hpp"
#include "scp/metrics.hpp"
#include "scp/trainer.hpp"

int main(int argc, char** argv) {
  scp::TrainConfig cfg;
  cfg.k = 5;
  cfg.epochs = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 30;
  cfg.seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 0;
  cfg.eval_every_epochs = 5;

  const auto ds = scp::make_blobs(scp::BlobParams{});
  std::printf("blobs: %zu items, %zu views, dim %zu\n", ds.n_items, ds.n_views, ds.dim);

  const auto result = scp::train(ds, cfg);
  for (const auto& e : result.trace.evals) {
    std::printf("epoch %3zu  acc %.4f  nmi %.4f  collapsed %d\n", e.epoch, *e.report.acc, *e.report.nmi,
                e.report.collapsed);
  }
  const auto& first = result.trace.steps.front();
  const auto& last = result.trace.steps.back();
  std::printf("l_clu %.4f -> %.4f over %zu steps\n", first.l_clu, last.l_clu, last.step + 1);
  std::printf("\ncluster head\n%s", scp::to_table(result.report).c_str());

  const auto km = scp::kmeans(ds, cfg.k);
  std::printf("\nk-means\n%s", scp::to_table(scp::report_from_labels(km.assignments, cfg.k, ds.labels)).c_str());
  return 0;
}
