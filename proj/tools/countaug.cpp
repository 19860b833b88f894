// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

// countaug command-line front end.

#include <atomic>
#include <csignal>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "countaug/caption.hpp"
#include "countaug/client.hpp"
#include "countaug/dataset.hpp"
#include "countaug/density.hpp"
#include "countaug/error.hpp"
#include "countaug/eval.hpp"
#include "countaug/feed.hpp"
#include "countaug/mock_backend.hpp"
#include "countaug/schedule.hpp"
#include "countaug/store.hpp"
#include "countaug/synthetic.hpp"
#include "countaug/version.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace countaug;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void report(const Diagnostics& diagnostics) {
  for (const auto& w : diagnostics.warnings) std::cerr << "warning: " << w << "\n";
  if (diagnostics.clamped_points > 0) {
    std::cerr << "clamped " << diagnostics.clamped_points << " out-of-bounds point(s)\n";
  }
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  for (std::string token; std::getline(in, token, ',');) {
    std::size_t used = 0;
    try {
      values.push_back(std::stod(token, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != token.size()) throw ArgumentError("not a number: '" + token + "'");
  }
  if (values.empty()) throw ArgumentError("empty value list");
  return values;
}

// --- ingest -----------------------------------------------------------------

struct IngestArgs {
  fs::path annotations, splits, captions, dims, out;
  std::string schema = "fsc147";
};

void run_ingest(const IngestArgs& a) {
  const auto schema = parse_schema(a.schema);
  if (!schema) throw ArgumentError("unknown schema " + a.schema);
  Diagnostics diagnostics;
  const auto records = load_annotations(
      a.annotations, a.dims.empty() ? std::nullopt : std::optional<fs::path>(a.dims), *schema,
      &diagnostics);
  auto dataset = load_splits(a.splits, records, &diagnostics);
  if (!a.captions.empty()) dataset = attach_captions(std::move(dataset), a.captions, &diagnostics);
  report(diagnostics);
  save_dataset(dataset, a.out);
  std::cerr << "train " << dataset.ids(Split::kTrain).size() << ", val "
            << dataset.ids(Split::kVal).size() << ", test " << dataset.ids(Split::kTest).size()
            << " -> " << a.out.string() << "\n";
}

// --- density ----------------------------------------------------------------

struct DensityArgs {
  fs::path dataset, out;
  double sigma = kDefaultSigma;
  bool png = false;
};

void run_density(const DensityArgs& a) {
  const auto dataset = load_dataset(a.dataset);
  fs::create_directories(a.out);
  std::size_t written = 0;
  for (const auto& [id, record] : dataset.records) {
    check_image_id_for_path(id);
    const auto map = render_density(record, a.sigma);
    save_dmap(map, a.out / density_ref_for(id));
    if (a.png) export_density_png(map, a.out / (id + ".png"));
    ++written;
  }
  std::cerr << "wrote " << written << " density map(s) to " << a.out.string() << "\n";
}

// --- pairs ------------------------------------------------------------------

struct PairsArgs {
  fs::path dataset, out;
  std::string encoder = "builtin";
  double tc = kDefaultSimilarityThreshold;
  unsigned threads = 0;
};

void run_pairs(const PairsArgs& a) {
  const auto dataset = load_dataset(a.dataset);
  std::unique_ptr<CaptionEncoder> encoder;
  if (a.encoder == "builtin") {
    encoder = std::make_unique<HashedNgramEncoder>();
  } else if (a.encoder.rfind("file:", 0) == 0) {
    encoder = std::make_unique<SidecarEncoder>(SidecarEncoder::from_file(a.encoder.substr(5)));
  } else {
    throw ArgumentError("--encoder must be 'builtin' or 'file:<path>'");
  }
  const auto sets = build_compatible_sets(embed_train_captions(dataset, *encoder), a.tc, a.threads);
  write_text_file(a.out, serialize_pairs(sets));
  std::size_t with = 0, pairs = 0;
  for (const auto& [id, list] : sets.candidates) {
    with += !list.empty();
    pairs += list.size();
  }
  std::cerr << with << " of " << sets.candidates.size() << " image(s) have partners, " << pairs / 2
            << " pair(s) at t_c=" << a.tc << "\n";
}

// --- plan -------------------------------------------------------------------

struct PlanArgs {
  fs::path dataset, pairs, out;
  std::uint32_t m = kDefaultAugmentations;
  double pc = kDefaultDiverseFraction;
  double tc = kDefaultSimilarityThreshold;
  std::uint64_t seed = 42;
};

void run_plan(const PlanArgs& a) {
  const auto dataset = load_dataset(a.dataset);
  const auto compat = deserialize_pairs(read_text_file(a.pairs), a.tc);
  const auto plan = build_plan(dataset, compat, a.m, a.pc, a.seed);
  save_plan(plan, a.out);
  for (const auto& id : plan.downgraded) std::cerr << "warning: " << id << " has no partner; baseline only\n";
  std::cerr << plan.items.size() << " item(s) -> " << a.out.string() << "\n";
}

// --- serve-mock -------------------------------------------------------------

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  fs::path port_file;
  bool quiet = false;
};

void run_serve(const ServeArgs& a) {
  LogSink log;
  if (!a.quiet) log = [](std::string_view line) { std::cerr << line << std::endl; };
  MockServer server(a.host, a.port, log);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "mock backend " << kMockBackendId << " listening on " << server.endpoint() << std::endl;
  if (!a.port_file.empty()) write_text_file(a.port_file, std::to_string(server.port()) + "\n");
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
}

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
  fs::path plan, out, densities, dataset;
  std::string endpoint;
  std::uint32_t concurrency = 4;
  std::uint32_t attempts = 4;
  double timeout = 120.0;
  double guidance = kDefaultGuidanceScale;
  std::uint32_t steps = kDefaultSteps;
  bool hints = false;
  bool skip_existing = false;
};

int run_generate(const GenerateArgs& a) {
  const auto plan = load_plan(a.plan);
  if (a.densities.empty() && a.dataset.empty()) {
    throw ArgumentError("generate needs --densities or --dataset");
  }
  if (a.hints && a.dataset.empty()) throw ArgumentError("--hints requires --dataset");
  std::optional<CountingDataset> dataset;
  if (!a.dataset.empty()) dataset = load_dataset(a.dataset);

  DensitySource densities = [&](const PlannedItem& item) {
    if (!a.densities.empty()) return load_dmap(a.densities / item.density_ref);
    return render_density(dataset->record(item.image_id));
  };
  PointSource hints;
  if (a.hints) hints = [&](const PlannedItem& item) { return dataset->record(item.image_id).points; };

  if (!check_health(a.endpoint)) std::cerr << "warning: " << a.endpoint << "/healthz did not answer ok\n";
  AugmentationStore store(a.out);
  ExecutionOptions options;
  options.concurrency = a.concurrency;
  options.retry.max_attempts = a.attempts;
  options.retry.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(a.timeout * 1000));
  options.guidance_scale = a.guidance;
  options.steps = a.steps;
  options.skip_existing = a.skip_existing;
  const auto report = execute_plan(plan, a.endpoint, densities, store, options, hints);
  for (std::size_t i = 0; i < report.outcomes.size(); ++i) {
    if (!report.outcomes[i].ok) {
      std::cerr << "failed " << plan.items[i].image_id << "/" << plan.items[i].aug_index << ": "
                << report.outcomes[i].error << "\n";
    }
  }
  std::cerr << report.succeeded << " ok (" << report.skipped << " skipped), " << report.failed
            << " failed\n";
  return report.failed == 0 ? 0 : 1;
}

// --- feed -------------------------------------------------------------------

struct FeedArgs {
  fs::path plan, store, dataset, out, images_dir, densities_dir;
  double p0 = kDefaultReplacementProbability;
  std::uint32_t epochs = 1;
  std::uint32_t first_epoch = 0;
  std::optional<std::uint64_t> seed;
};

void run_feed(const FeedArgs& a) {
  const auto plan = load_plan(a.plan);
  const auto dataset = load_dataset(a.dataset);
  const AugmentationStore store(a.store);
  const std::uint64_t seed = a.seed.value_or(plan.global_seed);
  const std::string hash = plan_hash(plan);
  const FeedLayout layout{a.images_dir, a.densities_dir};
  fs::create_directories(a.out);
  for (std::uint32_t e = a.first_epoch; e < a.first_epoch + a.epochs; ++e) {
    const auto entries = epoch_manifest(dataset, plan, store, a.p0, e, seed, layout);
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%04u.jsonl", e);
    write_text_file(a.out / name, serialize_manifest(entries, e, a.p0, seed, hash));
  }
  std::cerr << "wrote " << a.epochs << " manifest(s) to " << a.out.string() << "\n";
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  fs::path dataset, predictions;
  std::string split = "val";
  std::size_t trimmed = 0;
};

void run_eval(const EvalArgs& a) {
  const auto dataset = load_dataset(a.dataset);
  const auto split = parse_split(a.split);
  if (!split) throw ArgumentError("unknown split " + a.split);
  nlohmann::json predictions;
  try {
    predictions = nlohmann::json::parse(read_text_file(a.predictions));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed predictions file: ") + e.what());
  }
  std::vector<double> predicted, truth;
  for (const auto& id : dataset.ids(*split)) {
    if (!predictions.contains(id)) throw ValidationError("no prediction for " + id);
    if (!predictions[id].is_number()) throw ValidationError("prediction for " + id + " is not a number");
    predicted.push_back(predictions[id].get<double>());
    truth.push_back(static_cast<double>(dataset.record(id).points.size()));
  }
  nlohmann::ordered_json out = {{"split", a.split},
                                {"mae", mae(predicted, truth)},
                                {"rmse", rmse(predicted, truth)},
                                {"n", predicted.size()}};
  if (a.trimmed > 0) {
    const auto t = trimmed_metrics(predicted, truth, a.trimmed);
    out["trimmed"] = {{"excluded", a.trimmed}, {"mae", t.mae}, {"rmse", t.rmse}, {"n", t.n}};
  }
  std::cout << out.dump() << std::endl;
}

// --- sweep ------------------------------------------------------------------

struct SweepArgs {
  std::string axis, values, evaluator = "mock";
  fs::path out;
  SweepConfig fixed;
  unsigned parallel = 1;
  std::size_t mock_images = 50;
};

int run_sweep_command(const SweepArgs& a) {
  const auto axis = parse_axis(a.axis);
  if (!axis) throw ArgumentError("unknown axis " + a.axis + " (tc, pc, M, p0)");
  Evaluator evaluator;
  if (a.evaluator == "mock") {
    MockFidelityOptions options;
    options.corpus.images = a.mock_images;
    evaluator = make_mock_fidelity_evaluator(options);
  } else if (a.evaluator.rfind("cmd:", 0) == 0) {
    evaluator = make_command_evaluator(a.evaluator.substr(4));
  } else {
    throw ArgumentError("--evaluator must be 'mock' or 'cmd:<command template>'");
  }
  const auto values = parse_values(a.values);
  const auto rows = run_sweep(*axis, values, a.fixed, evaluator, a.parallel);
  const auto csv = write_sweep_csv(to_csv_rows(rows));
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_text_file(a.out, csv);
  }
  int failed = 0;
  for (const auto& row : rows) {
    if (!row.result) {
      ++failed;
      std::cerr << "failed " << a.axis << "=" << row.value << ": " << row.error << "\n";
    }
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Density-conditioned augmentation pipeline for few-shot counting"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Load annotations, splits and captions into a dataset file");
  c_ingest->add_option("--annotations", ingest.annotations, "Annotation JSON")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--splits", ingest.splits, "Split JSON (split -> ids)")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--captions", ingest.captions, "Caption JSON (id -> caption)")->check(CLI::ExistingFile);
  c_ingest->add_option("--dims", ingest.dims, "Image dimensions JSON (id -> {width, height})")->check(CLI::ExistingFile);
  c_ingest->add_option("--schema", ingest.schema, "fsc147 or generic")->capture_default_str();
  c_ingest->add_option("--out", ingest.out, "Dataset file to write")->required();

  DensityArgs density;
  auto* c_density = app.add_subcommand("density", "Render DMAPv1 density maps for every record");
  c_density->add_option("--dataset", density.dataset)->required()->check(CLI::ExistingFile);
  c_density->add_option("--out", density.out, "Output directory")->required();
  c_density->add_option("--sigma", density.sigma, "Kernel sigma in pixels")->capture_default_str();
  c_density->add_flag("--png", density.png, "Also export 16-bit grayscale previews");

  PairsArgs pairs;
  auto* c_pairs = app.add_subcommand("pairs", "Build caption compatibility sets");
  c_pairs->add_option("--dataset", pairs.dataset)->required()->check(CLI::ExistingFile);
  c_pairs->add_option("--tc", pairs.tc, "Similarity threshold; 0 disables filtering")->capture_default_str();
  c_pairs->add_option("--encoder", pairs.encoder, "builtin or file:<CEMBv1 sidecar>")->capture_default_str();
  c_pairs->add_option("--threads", pairs.threads, "0 = hardware concurrency");
  c_pairs->add_option("--out", pairs.out)->required();

  PlanArgs plan;
  auto* c_plan = app.add_subcommand("plan", "Build the augmentation plan");
  c_plan->add_option("--dataset", plan.dataset)->required()->check(CLI::ExistingFile);
  c_plan->add_option("--pairs", plan.pairs)->required()->check(CLI::ExistingFile);
  c_plan->add_option("--m", plan.m, "Augmentations per image")->capture_default_str();
  c_plan->add_option("--pc", plan.pc, "Fraction of diverse augmentations")->capture_default_str();
  c_plan->add_option("--tc", plan.tc, "Threshold the pairs were built with (recorded in the header)")->capture_default_str();
  c_plan->add_option("--seed", plan.seed)->capture_default_str();
  c_plan->add_option("--out", plan.out)->required();

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve-mock", "Run the deterministic mock generation backend");
  c_serve->add_option("--host", serve.host)->capture_default_str();
  c_serve->add_option("--port", serve.port, "0 picks a free port")->capture_default_str();
  c_serve->add_option("--port-file", serve.port_file, "Write the bound port here once listening");
  c_serve->add_flag("--quiet", serve.quiet);

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Execute a plan against a generation backend");
  c_gen->add_option("--plan", gen.plan)->required()->check(CLI::ExistingFile);
  c_gen->add_option("--endpoint", gen.endpoint, "e.g. http://127.0.0.1:8080")->required();
  c_gen->add_option("--out", gen.out, "Augmentation store directory")->required();
  c_gen->add_option("--densities", gen.densities, "Directory of <id>.dmap files")->check(CLI::ExistingDirectory);
  c_gen->add_option("--dataset", gen.dataset, "Render densities from this dataset instead")->check(CLI::ExistingFile);
  c_gen->add_option("--concurrency", gen.concurrency)->capture_default_str();
  c_gen->add_option("--attempts", gen.attempts)->capture_default_str();
  c_gen->add_option("--timeout", gen.timeout, "Per-request timeout in seconds")->capture_default_str();
  c_gen->add_option("--guidance", gen.guidance)->capture_default_str();
  c_gen->add_option("--steps", gen.steps)->capture_default_str();
  c_gen->add_flag("--hints", gen.hints, "Send object centres as point hints");
  c_gen->add_flag("--skip-existing", gen.skip_existing);

  FeedArgs feed;
  auto* c_feed = app.add_subcommand("feed", "Write per-epoch training manifests");
  c_feed->add_option("--plan", feed.plan)->required()->check(CLI::ExistingFile);
  c_feed->add_option("--store", feed.store)->required();
  c_feed->add_option("--dataset", feed.dataset)->required()->check(CLI::ExistingFile);
  c_feed->add_option("--p0", feed.p0, "Replacement probability")->capture_default_str();
  c_feed->add_option("--epochs", feed.epochs)->capture_default_str();
  c_feed->add_option("--first-epoch", feed.first_epoch)->capture_default_str();
  c_feed->add_option("--seed", feed.seed, "Defaults to the plan's global seed");
  c_feed->add_option("--images-dir", feed.images_dir, "Prefix for real image paths");
  c_feed->add_option("--densities-dir", feed.densities_dir, "Prefix for density paths");
  c_feed->add_option("--out", feed.out, "Manifest directory")->required();

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "MAE/RMSE of predicted counts against annotated points");
  c_eval->add_option("--dataset", eval.dataset)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--predictions", eval.predictions, "JSON map id -> predicted count")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--split", eval.split)->capture_default_str();
  c_eval->add_option("--report-trimmed", eval.trimmed, "Also report metrics without the K largest errors");

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("sweep", "Ablation sweep over one hyperparameter");
  c_sweep->add_option("--axis", sweep.axis, "tc, pc, M or p0")->required();
  c_sweep->add_option("--values", sweep.values, "Comma-separated values")->required();
  c_sweep->add_option("--evaluator", sweep.evaluator,
                      "mock, or cmd:<template> with {tc} {pc} {M} {p0} {seed}")->capture_default_str();
  c_sweep->add_option("--tc", sweep.fixed.t_c)->capture_default_str();
  c_sweep->add_option("--pc", sweep.fixed.p_c)->capture_default_str();
  c_sweep->add_option("--m", sweep.fixed.m)->capture_default_str();
  c_sweep->add_option("--p0", sweep.fixed.p_0)->capture_default_str();
  c_sweep->add_option("--seed", sweep.fixed.seed)->capture_default_str();
  c_sweep->add_option("--parallel", sweep.parallel)->capture_default_str();
  c_sweep->add_option("--mock-images", sweep.mock_images)->capture_default_str();
  c_sweep->add_option("--out", sweep.out, "CSV file (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_ingest->parsed()) run_ingest(ingest);
    if (c_density->parsed()) run_density(density);
    if (c_pairs->parsed()) run_pairs(pairs);
    if (c_plan->parsed()) run_plan(plan);
    if (c_serve->parsed()) run_serve(serve);
    if (c_gen->parsed()) return run_generate(gen);
    if (c_feed->parsed()) run_feed(feed);
    if (c_eval->parsed()) run_eval(eval);
    if (c_sweep->parsed()) return run_sweep_command(sweep);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
