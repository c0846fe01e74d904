#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "eqe/cache.hpp"
#include "eqe/config.hpp"
#include "eqe/http_service.hpp"
#include "eqe/offline.hpp"
#include "eqe/synth.hpp"
#include "eqe/workflow.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kInternal = 3;

eqe::HttpService* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

void print(const eqe::Json& j) { std::cout << j.dump(2) << "\n"; }

eqe::Json ingest(const eqe::EqeConfig& config, const eqe::DataPaths& paths, bool synthetic, std::uint64_t world_seed) {
  if (synthetic) {
    eqe::synth::WorldConfig wc;
    wc.seed = world_seed;
    const auto world = eqe::synth::make_world(wc);
    fs::create_directories(paths.root);
    eqe::synth::write_world(world, paths.root);
  }
  const auto headlines = eqe::load_headlines(paths.headlines());
  eqe::Json out{{"headlines", headlines.size()}};
  if (fs::exists(paths.clicklog())) out["clicks"] = eqe::load_clicklog(paths.clicklog()).size();
  if (fs::exists(paths.eval_clicklog())) out["eval_clicks"] = eqe::load_clicklog(paths.eval_clicklog()).size();
  if (fs::exists(paths.corpus())) out["documents"] = eqe::DocumentCorpus(eqe::load_documents(paths.corpus()), config.bm25).size();
  if (fs::exists(paths.labeled())) out["labeled"] = eqe::load_labeled(paths.labeled()).size();
  if (fs::exists(paths.lexicon())) {
    const auto lex = eqe::TriggerLexicon::load(paths.lexicon());
    out["lexicon"] = {{"triggers", lex.triggers.size()}, {"interrogatives", lex.interrogatives.size()},
                      {"entities", lex.entity_lexicon.size()}};
  }
  return out;
}

void serve(const eqe::EqeConfig& config, const eqe::DataPaths& paths, int port) {
  auto clock = std::make_shared<eqe::SystemClock>();
  const auto bundle = eqe::load_serving_bundle(config, paths, static_cast<std::int64_t>(clock->now()));
  eqe::ExpansionService service(bundle->expander->as_fn(), clock, config.cache);
  std::unique_ptr<eqe::EventIngestor> ingestor;
  if (fs::exists(paths.fine_model())) {
    ingestor = std::make_unique<eqe::EventIngestor>(bundle->lexicon, eqe::FineFilterModel::load(paths.fine_model()),
                                                    config.coarse, clock);
  }
  eqe::HttpService http(service, ingestor.get());
  g_server = &http;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << config.serve.host << ":" << port << "\n";
  http.run(config.serve.host, port);
  g_server = nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-centric query expansion engine"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string data_dir = "data";
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Base seed for every component");
  app.add_option("--data-dir", data_dir, "Data directory");

  bool synthetic = false;
  std::uint64_t world_seed = 11;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate inputs; --synthetic writes a generated data set first");
  ingest_cmd->add_flag("--synthetic", synthetic, "Generate the bundled synthetic data set");
  ingest_cmd->add_option("--world-seed", world_seed, "Seed of the synthetic data set");

  bool resume = false;
  auto* offline_cmd = app.add_subcommand("offline", "collect, reformulate, build-index and cluster-events in order");
  offline_cmd->add_flag("--resume", resume, "Reuse persisted stage outputs");

  auto* collect_cmd = app.add_subcommand("collect", "Coarse rules and fine classifier over headlines");
  auto* reformulate_cmd = app.add_subcommand("reformulate", "Event phrases for collected candidates");
  auto* encoder_cmd = app.add_subcommand("train-encoder", "Contrastive training of the reformulation encoder");
  int stage = 1;
  auto* retriever_cmd = app.add_subcommand("train-retriever", "Dual-tower training");
  retriever_cmd->add_option("--stage", stage, "1 (in-batch) or 2 (hard negatives)")->check(CLI::IsMember({1, 2}));
  auto* mine_cmd = app.add_subcommand("mine-negatives", "Percentile-band hard negatives");
  auto* index_cmd = app.add_subcommand("build-index", "Encode events into the vector index");
  auto* cluster_cmd = app.add_subcommand("cluster-events", "Event popularity clusters");
  auto* ranker_cmd = app.add_subcommand("train-ranker", "GBDT ranker on ranking samples");
  auto* baseline_cmd = app.add_subcommand("baseline", "Click graph build, propagation and query clustering");
  int port = -1;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP expansion service");
  serve_cmd->add_option("--port", port, "Port (default from config)");
  std::string predictions;
  auto* gen_cmd = app.add_subcommand("eval-gen", "ROUGE-L / BLEU of event phrases");
  gen_cmd->add_option("--predictions", predictions, "One predicted phrase per gold line")->check(CLI::ExistingFile);
  auto* ret_cmd = app.add_subcommand("eval-retrieval", "Recall@k, MRR@k and AUC of the retriever");
  auto* e2e_cmd = app.add_subcommand("eval-e2e", "Recall@K for no expansion, click baseline and EQE");
  auto* cov_cmd = app.add_subcommand("eval-coverage", "Event discovery coverage timeline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    eqe::EqeConfig config = config_path.empty() ? eqe::EqeConfig{} : eqe::EqeConfig::load(config_path);
    if (seed) config.reseed(*seed);
    const eqe::DataPaths paths{data_dir};

    if (ingest_cmd->parsed()) {
      print(ingest(config, paths, synthetic, world_seed));
    } else if (offline_cmd->parsed()) {
      print(eqe::run_offline_pipeline(config, paths.root, {resume}).to_json());
    } else if (collect_cmd->parsed()) {
      fs::create_directories(paths.artifacts());
      print(eqe::run_collect_stage(config, paths).to_json());
    } else if (reformulate_cmd->parsed()) {
      print(eqe::run_reformulate_stage(config, paths).to_json());
    } else if (encoder_cmd->parsed()) {
      print(eqe::train_encoder_step(config, paths));
    } else if (retriever_cmd->parsed()) {
      print(eqe::train_retriever_step(config, paths, stage));
    } else if (mine_cmd->parsed()) {
      print(eqe::mine_negatives_step(config, paths));
    } else if (index_cmd->parsed()) {
      print(eqe::run_index_stage(config, paths).to_json());
    } else if (cluster_cmd->parsed()) {
      print(eqe::run_cluster_stage(config, paths).to_json());
    } else if (ranker_cmd->parsed()) {
      print(eqe::train_ranker_step(config, paths));
    } else if (baseline_cmd->parsed()) {
      print(eqe::baseline_step(config, paths));
    } else if (serve_cmd->parsed()) {
      serve(config, paths, port >= 0 ? port : config.serve.port);
    } else if (gen_cmd->parsed()) {
      print(eqe::eval_gen_step(config, paths, predictions.empty() ? std::nullopt : std::optional<fs::path>(predictions)));
    } else if (ret_cmd->parsed()) {
      print(eqe::eval_retrieval_step(config, paths));
    } else if (e2e_cmd->parsed()) {
      const auto report = eqe::eval_e2e_step(config, paths);
      eqe::write_json_file(paths.artifacts() / "e2e_report.json", report.to_json());
      print(report.to_json());
    } else if (cov_cmd->parsed()) {
      print(eqe::eval_coverage_step(config, paths));
    }
    return 0;
  } catch (const eqe::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const eqe::Json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
