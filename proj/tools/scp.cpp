// scp-cluster: train, evaluate and inspect cluster heads on embedding files.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
// error, 3 data, format, shape or I/O error, 4 numeric abort during training.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "scp/blobs.hpp"
#include "scp/checkpoint.hpp"
#include "scp/config.hpp"
#include "scp/dataset.hpp"
#include "scp/error.hpp"
#include "scp/kmeans.hpp"
#include "scp/log.hpp"
#include "scp/report.hpp"
#include "scp/trainer.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct TrainFlags {
  std::optional<std::string> config, preset, features, mix, out, activation, reduction, hidden;
  std::optional<std::size_t> k, epochs, batch_size, log_every, eval_every;
  std::optional<double> alpha, lr, lr_min, clip_norm;
  std::optional<std::uint64_t> seed;
  std::optional<bool> symmetrize_le, l2;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw scp::IoError("cannot write '" + path.string() + "'");
}

scp::EmbeddingDataset load_features(const std::string& path) {
  if (path.empty()) throw scp::ConfigError("--features is required");
  return scp::load_scpf(path);
}

template <class T>
void require_at_least(const std::optional<T>& v, T min, const char* flag) {
  if (v && *v < min) {
    std::ostringstream os;
    os << flag << " must be >= " << min << ", got " << *v;
    throw scp::ConfigError(os.str());
  }
}

// Precedence, lowest first: built-in defaults, --config file, --preset, flags.
scp::RunConfig resolve(const TrainFlags& f) {
  require_at_least(f.alpha, 0.0, "--alpha");
  require_at_least(f.k, std::size_t{2}, "--k");
  require_at_least(f.batch_size, std::size_t{1}, "--batch-size");
  require_at_least(f.lr, 0.0, "--lr");
  require_at_least(f.lr_min, 0.0, "--lr-min");
  require_at_least(f.log_every, std::size_t{1}, "--log-every");
  require_at_least(f.clip_norm, 0.0, "--clip-norm");

  scp::RunConfig rc;
  if (f.config) scp::load_config_file(rc, *f.config);
  auto& t = rc.train;
  if (f.preset) scp::apply_preset(t, *f.preset);
  if (f.features) rc.features = *f.features;
  if (f.mix) rc.mix = *f.mix;
  if (f.out) rc.out = *f.out;
  if (f.k) t.k = *f.k;
  if (f.alpha) t.alpha = *f.alpha;
  if (f.epochs) t.epochs = *f.epochs;
  if (f.batch_size) t.batch_size = *f.batch_size;
  if (f.lr) t.lr_init = *f.lr;
  if (f.lr_min) t.lr_min = *f.lr_min;
  if (f.seed) t.seed = *f.seed;
  if (f.activation) t.activation = scp::parse_activation(*f.activation);
  if (f.reduction) t.le_reduction = scp::parse_reduction(*f.reduction);
  if (f.symmetrize_le) t.symmetrize_le = *f.symmetrize_le;
  if (f.l2) t.l2_normalize = *f.l2;
  if (f.log_every) t.log_every = *f.log_every;
  if (f.eval_every) t.eval_every_epochs = *f.eval_every;
  if (f.hidden) t.hidden = scp::parse_hidden(*f.hidden, "--hidden");
  if (f.clip_norm) t.clip_norm = *f.clip_norm;
  scp::validate(t);
  return rc;
}

int cmd_train(const TrainFlags& flags) {
  const scp::RunConfig rc = resolve(flags);
  auto ds = load_features(rc.features);
  if (!rc.mix.empty()) ds = scp::concat_features(ds, scp::load_scpf(rc.mix));

  const auto start = std::chrono::steady_clock::now();
  const auto result = scp::train(ds, rc.train);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path out(rc.out);
  fs::create_directories(out);
  scp::save_checkpoint({result.head, result.adam, scp::config_hash(rc.train), rc.train.l2_normalize},
                       out / "head.scph");
  write_text(out / "trace.jsonl", scp::trace_lines(result.trace));
  write_text(out / "report.json", scp::to_json(result.report).dump(2) + "\n");
  write_text(out / "report.txt", scp::to_key_value(result.report));
  write_text(out / "config.ini", scp::render_ini(rc));

  std::cout << scp::to_table(result.report);
  std::printf("steps      %zu\ntime       %.1f s\noutput     %s\n", result.trace.steps.size(), seconds,
              out.string().c_str());
  return kOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& features, bool json) {
  const auto ck = scp::load_checkpoint(checkpoint);
  auto ds = load_features(features);
  if (ck.l2_normalize && !ds.l2_normalized) scp::l2_normalize(ds);
  const auto report = scp::evaluate(ck.head, ds);
  std::cout << (json ? scp::to_json(report).dump(2) + "\n" : scp::to_table(report));
  return kOk;
}

int cmd_kmeans(const std::string& features, std::size_t k, const scp::KMeansOptions& opts, bool l2,
               bool json, const std::string& out) {
  auto ds = load_features(features);
  if (l2 && !ds.l2_normalized) scp::l2_normalize(ds);
  const auto km = scp::kmeans(ds, k, opts);
  const auto report = scp::report_from_labels(km.assignments, k, ds.labels);
  auto doc = scp::to_json(report);
  doc["inertia"] = km.inertia;
  doc["iterations"] = km.iterations_run;
  doc["converged"] = km.converged;
  if (!out.empty()) write_text(out, doc.dump(2) + "\n");
  if (json) {
    std::cout << doc.dump(2) << '\n';
  } else {
    std::cout << scp::to_table(report);
    std::printf("inertia    %.6g\n", km.inertia);
  }
  return kOk;
}

int cmd_blobs(const scp::BlobParams& p, const std::string& out) {
  const auto ds = scp::make_blobs(p);
  scp::save_scpf(ds, out);
  std::printf("wrote %s: %zu items, %zu views, dim %zu, %zu clusters\n", out.c_str(), ds.n_items,
              ds.n_views, ds.dim, p.n_clusters);
  return kOk;
}

int cmd_export_logits(const std::string& checkpoint, const std::string& features, const std::string& out) {
  const auto ck = scp::load_checkpoint(checkpoint);
  auto ds = load_features(features);
  if (ck.l2_normalize && !ds.l2_normalized) scp::l2_normalize(ds);
  scp::export_logits(ck.head, ds, out);
  std::printf("wrote %s: %zu x %zu logits\n", out.c_str(), ds.n_items, ck.head.num_clusters());
  return kOk;
}

int cmd_info(const std::string& features) {
  scp::LoadReport report;
  const auto bytes = scp::io::read_file(features);
  scp::decode_scpf(bytes, features, &report);
  report.path = features;
  std::cout << report.to_string();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  scp::set_warning_sink([](std::string_view msg) { std::cout << "warning: " << msg << std::endl; });

  CLI::App app{"Cluster heads on frozen embeddings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  TrainFlags tf;
  auto* train = app.add_subcommand("train", "Train a cluster head on an SCPF file");
  train->add_option("--config", tf.config, "INI file with [train], [data], [output] sections");
  train->add_option("--preset", tf.preset, "cifar10 | cifar20 | cifar100 | imagenet-dogs");
  train->add_option("--features", tf.features, "SCPF embedding file");
  train->add_option("--mix", tf.mix, "Second SCPF file concatenated feature-wise");
  train->add_option("--out", tf.out, "Output directory");
  train->add_option("--k", tf.k, "Number of clusters");
  train->add_option("--alpha", tf.alpha, "Entropy weight");
  train->add_option("--epochs", tf.epochs, "Training epochs");
  train->add_option("--batch-size", tf.batch_size, "Mini-batch size");
  train->add_option("--lr,--lr-init", tf.lr, "Initial learning rate");
  train->add_option("--lr-min", tf.lr_min, "Final learning rate of the cosine schedule");
  train->add_option("--seed", tf.seed, "Seed for initialization and pair sampling");
  train->add_option("--activation", tf.activation, "tanh (default) | relu | gelu");
  train->add_option("--le-reduction", tf.reduction, "mean | sum over the batch for l_e");
  train->add_option("--symmetrize-le", tf.symmetrize_le, "Average both directions of l_e");
  train->add_option("--l2-normalize", tf.l2, "L2-normalize every embedding before training");
  train->add_option("--log-every", tf.log_every, "Trace every n-th step");
  train->add_option("--eval-every", tf.eval_every, "Evaluate every n epochs (0: only at the end)");
  train->add_option("--hidden", tf.hidden, "Four hidden widths, comma separated");
  train->add_option("--clip-norm", tf.clip_norm, "Global gradient norm limit (0: off)");

  std::string checkpoint, features, out;
  bool json = false;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on an SCPF file");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--features", features)->required();
  eval->add_flag("--json", json, "Print the report as JSON");

  std::size_t km_k = 10;
  bool km_l2 = false;
  scp::KMeansOptions km_opts;
  auto* km = app.add_subcommand("kmeans", "k-means++ baseline on the clean view");
  km->add_option("--features", features)->required();
  km->add_option("--k", km_k, "Number of clusters")->capture_default_str();
  km->add_option("--seed", km_opts.seed)->capture_default_str();
  km->add_option("--n-init", km_opts.n_init)->capture_default_str();
  km->add_option("--max-iter", km_opts.max_iter)->capture_default_str();
  km->add_option("--tol", km_opts.tol)->capture_default_str();
  km->add_flag("--l2-normalize", km_l2);
  km->add_flag("--json", json, "Print the report as JSON");
  km->add_option("--out", out, "Also write the JSON report to this file");

  scp::BlobParams bp;
  std::string blobs_out;
  auto* blobs = app.add_subcommand("blobs", "Write a synthetic Gaussian-blob SCPF file");
  blobs->add_option("--out", blobs_out)->required();
  blobs->add_option("--clusters", bp.n_clusters)->capture_default_str();
  blobs->add_option("--per-cluster", bp.per_cluster)->capture_default_str();
  blobs->add_option("--dim", bp.dim)->capture_default_str();
  blobs->add_option("--sep", bp.center_sep)->capture_default_str();
  blobs->add_option("--noise", bp.view_noise)->capture_default_str();
  blobs->add_option("--views", bp.n_views)->capture_default_str();
  blobs->add_option("--seed", bp.seed)->capture_default_str();

  auto* logits = app.add_subcommand("export-logits", "Write pre-softmax logits of the clean view");
  logits->add_option("--checkpoint", checkpoint)->required();
  logits->add_option("--features", features)->required();
  logits->add_option("--out", out)->required();

  auto* info = app.add_subcommand("info", "Validate an SCPF file and print its header");
  info->add_option("--features", features)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*train) return cmd_train(tf);
    if (*eval) return cmd_eval(checkpoint, features, json);
    if (*km) return cmd_kmeans(features, km_k, km_opts, km_l2, json, out);
    if (*blobs) return cmd_blobs(bp, blobs_out);
    if (*logits) return cmd_export_logits(checkpoint, features, out);
    if (*info) return cmd_info(features);
  } catch (const scp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const scp::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const scp::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const scp::ShapeError& e) {
    std::cerr << "shape error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
