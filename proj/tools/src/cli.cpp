#include "mixagg/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "mixagg/bench.hpp"
#include "mixagg/checkpoint.hpp"
#include "mixagg/errors.hpp"
#include "mixagg/feature_store.hpp"
#include "mixagg/hash.hpp"
#include "mixagg/manifest.hpp"
#include "mixagg/retrieval.hpp"
#include "mixagg/synth.hpp"
#include "mixagg/train_config.hpp"
#include "mixagg/trainer.hpp"
#include "mixagg/weight_export.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace mixagg::cli {
namespace {

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  auto out = p;
  out += suffix;
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Sidecar written by extract; eval copies its fields into the report.
struct DbMeta {
  std::string config_hash;
  std::optional<double> extraction_ms;
};

std::optional<DbMeta> read_meta(const fs::path& db) {
  const auto path = with_suffix(db, ".meta.json");
  if (!fs::exists(path)) return std::nullopt;
  DbMeta meta;
  try {
    const auto j = nlohmann::json::parse(read_text(path));
    meta.config_hash = j.value("config_hash", "");
    if (j.contains("timing_ms") && j["timing_ms"].contains("extraction_per_descriptor")) {
      meta.extraction_ms = j["timing_ms"]["extraction_per_descriptor"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return meta;
}

MixVprConfig model_config_from(const std::string& config_path) {
  if (config_path.empty()) return MixVprConfig{};
  return TrainConfig::load(config_path).model;
}

struct SynthArgs {
  std::size_t places = 16, views = 4, c = 32, h = 4, w = 4;
  std::uint64_t seed = 0;
  double noise_variance = 0.1;
  std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SynthOptions opts;
  opts.places = a.places;
  opts.views = a.views;
  opts.channels = a.c;
  opts.height = a.h;
  opts.width = a.w;
  opts.seed = a.seed;
  opts.noise_variance = a.noise_variance;
  const auto data = synth_generate(opts, a.out);
  ordered_json j;
  j["records"] = data.manifest.size();
  j["places"] = a.places;
  j["manifest"] = (fs::path(a.out) / "manifest.jsonl").string();
  j["latent_oracle_accuracy"] = data.latent_oracle_accuracy;
  out << j.dump() << '\n';
  return kOk;
}

struct TrainArgs {
  std::string manifest, config, out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  auto config = a.config.empty() ? TrainConfig{} : TrainConfig::load(a.config);
  if (a.seed) config.seed = *a.seed;
  config.validate();
  FeatureStore store(load_manifest(a.manifest));
  FitOptions opts;
  opts.checkpoint_out = fs::path(a.out);
  const auto result = fit(store, config, opts);

  std::ostringstream csv;
  write_loss_curve(csv, result.curve);
  write_text(with_suffix(a.out, ".loss.csv"), csv.str());

  if (!a.quiet) {
    for (std::size_t e = 0; e < result.epoch_mean_loss.size(); ++e) {
      out << "epoch " << e << " mean_loss " << result.epoch_mean_loss[e] << '\n';
    }
  }
  ordered_json j;
  j["checkpoint"] = a.out;
  j["steps"] = result.curve.size();
  j["final_epoch_loss"] = result.epoch_mean_loss.empty() ? 0.0 : result.epoch_mean_loss.back();
  j["config_hash"] = config_hash(config.to_text());
  out << j.dump() << '\n';
  return kOk;
}

struct ExtractArgs {
  std::string manifest, ckpt, out;
};

int cmd_extract(const ExtractArgs& a, std::ostream& out) {
  const auto params = load_checkpoint(a.ckpt);
  FeatureStore store(load_manifest(a.manifest));
  store.preload();
  const auto t0 = std::chrono::steady_clock::now();
  const auto db = extract_descriptors(params, store);
  const auto t1 = std::chrono::steady_clock::now();
  const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count() /
                    static_cast<double>(db.size());
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  db.save(a.out);

  ordered_json meta;
  meta["count"] = db.size();
  meta["dim"] = db.dim();
  meta["config_hash"] = config_hash(params.config().to_text());
  meta["timing_ms"] = {{"extraction_per_descriptor", ms}, {"deterministic", false}};
  write_text(with_suffix(a.out, ".meta.json"), meta.dump(2) + "\n");
  out << meta.dump() << '\n';
  return kOk;
}

struct EvalArgs {
  std::string queries, refs, report;
  double radius = kDefaultSuccessRadiusM;
  std::vector<std::size_t> ks{1, 5, 10};
  bool exclude_self = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto queries = DescriptorDb::load(a.queries);
  const auto refs = DescriptorDb::load(a.refs);
  const auto positives = ground_truth(queries, refs, a.radius);
  EvalOptions opts;
  opts.ks = a.ks;
  opts.exclude_same_id = a.exclude_self;
  auto report = recall_at_k(queries, refs, positives, opts);
  if (const auto meta = read_meta(a.refs)) {
    report.config_hash = meta->config_hash;
    report.extraction_ms_per_descriptor = meta->extraction_ms;
  }
  const auto text = report.to_json(2) + "\n";
  if (a.report.empty()) {
    out << text;
  } else {
    write_text(a.report, text);
    for (std::size_t i = 0; i < report.ks.size(); ++i) {
      out << "recall@" << report.ks[i] << ' ' << report.recalls[i] << '\n';
    }
  }
  return kOk;
}

int cmd_paramcount(const std::string& config_path, std::ostream& out) {
  const auto cfg = model_config_from(config_path);
  cfg.validate();
  ordered_json j;
  j["total"] = count_params(cfg);
  j["per_block"] = count_block_params(cfg);
  j["blocks"] = cfg.mixer_depth;
  j["head"] = count_head_params(cfg);
  j["descriptor_dim"] = cfg.descriptor_dim();
  j["config_hash"] = config_hash(cfg.to_text());
  out << j.dump(2) << '\n';
  return kOk;
}

struct BenchArgs {
  std::string ckpt, config;
  std::size_t n = 100, warmup = 3;
  std::uint64_t seed = 0;
  std::optional<std::size_t> depth;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  std::optional<MixVprParams> params;
  if (!a.ckpt.empty()) {
    params = load_checkpoint(a.ckpt);
  } else {
    auto cfg = model_config_from(a.config);
    if (a.depth) cfg.mixer_depth = *a.depth;
    cfg.validate();
    params = MixVprParams::initialized(cfg, a.seed);
  }
  const auto stats = bench_latency(*params, a.n, a.warmup, a.seed);
  // Halves of one run stand in for two runs in the sanity gate.
  bool consistent = true;
  if (stats.samples_ms.size() >= 2) {
    const auto mid = stats.samples_ms.begin() + static_cast<std::ptrdiff_t>(stats.samples_ms.size() / 2);
    consistent = latency_consistent(summarize({stats.samples_ms.begin(), mid}),
                                    summarize({mid, stats.samples_ms.end()}));
  }
  ordered_json j;
  j["n"] = a.n;
  j["warmup"] = a.warmup;
  j["blocks"] = params->config().mixer_depth;
  j["params"] = count_params(params->config());
  j["timing_ms"] = {{"mean_per_descriptor", stats.mean_ms},
                    {"p50", stats.p50_ms},
                    {"p95", stats.p95_ms},
                    {"deterministic", false}};
  j["consistent"] = consistent;
  j["config_hash"] = config_hash(params->config().to_text());
  out << j.dump(2) << '\n';
  return kOk;
}

struct ExportArgs {
  std::string ckpt, out;
  std::optional<std::size_t> count;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
  const auto params = load_checkpoint(a.ckpt);
  const auto files = export_first_layer_weights(params, a.out, a.count);
  out << "wrote " << files.size() << " images to " << a.out << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feature-mixing place descriptors: synthesize, train, extract, evaluate", "mixagg"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic place dataset");
  s->add_option("--places", synth.places, "Number of places")->check(CLI::PositiveNumber);
  s->add_option("--views", synth.views, "Views per place")->check(CLI::PositiveNumber);
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--seed", synth.seed, "Random seed");
  s->add_option("--channels", synth.c, "Feature channels")->check(CLI::PositiveNumber);
  s->add_option("--height", synth.h, "Map height")->check(CLI::PositiveNumber);
  s->add_option("--width", synth.w, "Map width")->check(CLI::PositiveNumber);
  s->add_option("--noise-variance", synth.noise_variance, "Per-element view noise variance")
      ->check(CLI::NonNegativeNumber);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the aggregator with the multi-similarity loss");
  t->add_option("--manifest", train.manifest, "Training manifest (JSON lines)")->required();
  t->add_option("--config", train.config, "key=value training config");
  t->add_option("--out", train.out, "Checkpoint path; the loss curve goes to <out>.loss.csv")->required();
  t->add_option("--seed", train.seed, "Override the config seed");
  t->add_flag("--quiet", train.quiet, "Only print the summary line");

  ExtractArgs extract;
  auto* x = app.add_subcommand("extract", "Compute descriptors for every manifest record");
  x->add_option("--manifest", extract.manifest, "Manifest (JSON lines)")->required();
  x->add_option("--ckpt", extract.ckpt, "Checkpoint")->required();
  x->add_option("--out", extract.out, "Descriptor db path (also writes .ids and .meta.json)")->required();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Recall@k of query descriptors against references");
  e->add_option("--queries", eval.queries, "Query descriptor db")->required();
  e->add_option("--refs", eval.refs, "Reference descriptor db")->required();
  e->add_option("--radius", eval.radius, "Success radius in meters")->check(CLI::NonNegativeNumber);
  e->add_option("--ks", eval.ks, "Comma-separated k values")->delimiter(',')->check(CLI::PositiveNumber);
  e->add_option("--report", eval.report, "Write the JSON report here instead of stdout");
  e->add_flag("--exclude-self", eval.exclude_self, "Skip references sharing the query id");

  std::string paramcount_config;
  auto* p = app.add_subcommand("paramcount", "Print parameter counts for a model config");
  p->add_option("--config", paramcount_config, "Config file (defaults when omitted)");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Time single-descriptor aggregation");
  auto* bench_ckpt = b->add_option("--ckpt", bench.ckpt, "Checkpoint to time");
  auto* bench_cfg = b->add_option("--config", bench.config, "Config to time with seeded weights");
  bench_ckpt->excludes(bench_cfg);
  b->add_option("--depth", bench.depth, "Override the mixer depth (with --config or defaults)")
      ->excludes(bench_ckpt);
  b->add_option("--n", bench.n, "Timed calls")->check(CLI::PositiveNumber);
  b->add_option("--warmup", bench.warmup, "Untimed calls first");
  b->add_option("--seed", bench.seed, "Seed for weights and inputs");

  ExportArgs exp;
  auto* w = app.add_subcommand("export-weights", "Write first-layer mixer weights as PGM images");
  w->add_option("--ckpt", exp.ckpt, "Checkpoint")->required();
  w->add_option("--out", exp.out, "Output directory")->required();
  w->add_option("--count", exp.count, "Number of neurons")->check(CLI::PositiveNumber);

  // CLI11 consumes arguments from the back.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex, out, err);
    const auto* failed = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << failed->help();
    return kUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (t->parsed()) return cmd_train(train, out);
    if (x->parsed()) return cmd_extract(extract, out);
    if (e->parsed()) return cmd_eval(eval, out);
    if (p->parsed()) return cmd_paramcount(paramcount_config, out);
    if (b->parsed()) return cmd_bench(bench, out);
    if (w->parsed()) return cmd_export(exp, out);
  } catch (const ParamError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << '\n';
    return kDataError;
  }
  err << app.help();
  return kUsage;
}

int run(int argc, char** argv) {
  // Keep stdout for command results.
  spdlog::set_default_logger(spdlog::stderr_logger_st("mixagg"));
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace mixagg::cli
