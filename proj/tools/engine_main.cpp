#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fashionrag/app.hpp"
#include "fashionrag/error.hpp"
#include "fashionrag/evalkit.hpp"
#include "fashionrag/index_io.hpp"
#include "fashionrag/service.hpp"

namespace fs = std::filesystem;
using namespace fashionrag;

namespace {

void emit(const nlohmann::json& j, const std::string& out_path) {
  const auto text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  retrieval::write_file_bytes(out_path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

app::PipelineConfig load_config(const std::string& path, bool no_llm) {
  auto cfg = path.empty() ? app::PipelineConfig{} : app::PipelineConfig::load(path);
  if (no_llm) {
    cfg.generation.endpoint.clear();
    cfg.generation.api_key.clear();
  } else {
    cfg.generation = cfg.generation.with_env();
  }
  cfg.validate();
  return cfg;
}

retrieval::QueryEmbeddings load_queries(const std::string& flag, const app::PipelineConfig& cfg,
                                        const fs::path& fallback_dir) {
  if (!flag.empty()) return retrieval::QueryEmbeddings::load(flag);
  if (!cfg.paths.queries.empty()) return retrieval::QueryEmbeddings::load(cfg.paths.queries);
  const auto sidecar = fallback_dir / "queries.jsonl";
  if (fs::exists(sidecar)) return retrieval::QueryEmbeddings::load(sidecar);
  return {};
}

app::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Retrieval-augmented fashion post engine"};
  cli.require_subcommand(1);
  std::string out_path;

  // index build
  auto* index_cmd = cli.add_subcommand("index", "Index management");
  index_cmd->require_subcommand(1);
  auto* build_cmd = index_cmd->add_subcommand("build", "Fuse catalog.jsonl and embeddings.bin into index.bin");
  std::string catalog_path;
  std::string embeddings_path;
  std::string index_out;
  build_cmd->add_option("--catalog", catalog_path, "catalog.jsonl")->required()->check(CLI::ExistingFile);
  build_cmd->add_option("--embeddings", embeddings_path, "embeddings.bin")->required()->check(CLI::ExistingFile);
  build_cmd->add_option("--out", index_out, "output index.bin")->required();

  // infer
  auto* infer_cmd = cli.add_subcommand("infer", "Run the pipeline for one image");
  std::string image_path;
  std::string detections_path;
  std::string index_path;
  std::string queries_path;
  std::string config_path;
  std::string image_id;
  bool no_llm = false;
  bool timings = false;
  bool quiet = false;
  infer_cmd->add_option("--image", image_path, "PNG or JPEG image")->required();
  infer_cmd->add_option("--detections", detections_path, "detections.jsonl")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--index", index_path, "index.bin")->required();
  infer_cmd->add_option("--queries", queries_path, "query embeddings JSONL keyed by image_id");
  infer_cmd->add_option("--config", config_path, "engine TOML config")->check(CLI::ExistingFile);
  infer_cmd->add_option("--image-id", image_id, "detections entry to use");
  infer_cmd->add_flag("--no-llm", no_llm, "never call the generation endpoint");
  infer_cmd->add_flag("--timings", timings, "include per-stage timings in the output");
  infer_cmd->add_flag("--quiet", quiet, "no log lines on stderr");
  infer_cmd->add_option("--out", out_path, "write the run record here instead of stdout");

  // eval
  auto* eval_cmd = cli.add_subcommand("eval", "Evaluation reports");
  eval_cmd->require_subcommand(1);
  std::string pred_path;
  std::string gt_path;
  auto* eval_det = eval_cmd->add_subcommand("detections", "mAP@0.5 and mAP@[0.5:0.95]");
  eval_det->add_option("--pred", pred_path, "detections.jsonl with predictions")->required()->check(CLI::ExistingFile);
  eval_det->add_option("--gt", gt_path, "groundtruth.jsonl")->required()->check(CLI::ExistingFile);
  eval_det->add_option("--out", out_path, "report path");

  std::string pairs_path;
  std::string clip_path;
  auto* eval_cap = eval_cmd->add_subcommand("captions", "BLEU, ROUGE, meteor_lite and CLIP similarity");
  eval_cap->add_option("--pairs", pairs_path, "JSONL of {image_id, candidate, reference}")->check(CLI::ExistingFile);
  eval_cap->add_option("--clip", clip_path, "JSONL of {image_id, image, pred, orig} embeddings")->check(CLI::ExistingFile);
  eval_cap->add_option("--out", out_path, "report path");

  std::string posts_path;
  std::string facets_path;
  std::string synonyms_path;
  std::optional<double> tau;
  auto* eval_tags = eval_cmd->add_subcommand("hashtags", "Attribute coverage and Distinct-n");
  eval_tags->add_option("--posts", posts_path, "JSONL with image_id and hashtags")->required()->check(CLI::ExistingFile);
  eval_tags->add_option("--facets", facets_path, "facets.jsonl")->required()->check(CLI::ExistingFile);
  eval_tags->add_option("--synonyms", synonyms_path, "synonyms.tsv")->check(CLI::ExistingFile);
  eval_tags->add_option("--tau", tau, "coverage threshold");
  eval_tags->add_option("--config", config_path, "engine TOML config")->check(CLI::ExistingFile);
  eval_tags->add_option("--out", out_path, "report path");

  // split
  auto* split_cmd = cli.add_subcommand("split", "Category-aware train/test split");
  double ratio = 0.8;
  std::uint64_t seed = 42;
  split_cmd->add_option("--catalog", catalog_path, "catalog.jsonl")->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--ratio", ratio, "train fraction")->capture_default_str();
  split_cmd->add_option("--seed", seed, "shuffle seed")->capture_default_str();
  split_cmd->add_option("--out", out_path, "output path");

  // serve
  auto* serve_cmd = cli.add_subcommand("serve", "HTTP service");
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string image_root = ".";
  serve_cmd->add_option("--port", port, "listen port")->capture_default_str();
  serve_cmd->add_option("--host", host, "listen address")->capture_default_str();
  serve_cmd->add_option("--index", index_path, "index.bin")->required();
  serve_cmd->add_option("--queries", queries_path, "query embeddings JSONL keyed by image_id");
  serve_cmd->add_option("--image-root", image_root, "directory request image paths resolve against")
      ->capture_default_str();
  serve_cmd->add_option("--config", config_path, "engine TOML config")->check(CLI::ExistingFile);
  serve_cmd->add_flag("--no-llm", no_llm, "never call the generation endpoint");

  CLI11_PARSE(cli, argc, argv);

  try {
    if (build_cmd->parsed()) {
      const auto index = retrieval::index_from_files(retrieval::load_catalog(catalog_path),
                                                     retrieval::load_embeddings(embeddings_path));
      retrieval::save_index(index, index_out);
      emit({{"records", index.size()}, {"dim", index.dim()}, {"out", index_out}}, "");
    } else if (infer_cmd->parsed()) {
      auto cfg = load_config(config_path, no_llm);
      RunLog log(quiet ? nullptr : &std::cerr);
      const auto entries = detect::load_detections(detections_path);
      const auto entry = app::select_entry(entries, image_path,
                                           image_id.empty() ? std::nullopt : std::optional(image_id));
      const auto queries = load_queries(queries_path, cfg, fs::path(detections_path).parent_path());
      app::Engine engine(std::move(cfg), retrieval::load_index(index_path));
      const auto record = app::run_pipeline(image_path, entry, queries, engine, log);
      nlohmann::json t = nlohmann::json::object();
      for (const auto& [stage, ms] : record.timings_ms) t[stage] = ms;
      log.info("timings_ms", t);
      emit(app::to_json(record, timings), out_path);
    } else if (eval_det->parsed()) {
      emit(evalkit::detection_report(evalkit::load_predictions(pred_path), evalkit::load_groundtruth(gt_path)),
           out_path);
    } else if (eval_cap->parsed()) {
      if (pairs_path.empty() && clip_path.empty()) {
        throw Error(ErrorCode::config_error, "eval captions needs --pairs and/or --clip");
      }
      const auto pairs = pairs_path.empty() ? std::vector<evalkit::CaptionPair>{} : evalkit::load_captions(pairs_path);
      const auto clip = clip_path.empty() ? std::vector<evalkit::ClipPair>{} : evalkit::load_clip_pairs(clip_path);
      emit(evalkit::caption_report(pairs, clip), out_path);
    } else if (eval_tags->parsed()) {
      const auto cfg = load_config(config_path, true);
      std::optional<evalkit::SynonymDict> loaded;
      if (!synonyms_path.empty()) {
        loaded = evalkit::SynonymDict::load(synonyms_path);
      } else if (!cfg.paths.synonyms.empty()) {
        loaded = evalkit::SynonymDict::load(cfg.paths.synonyms);
      }
      const auto& syn = loaded ? *loaded : evalkit::SynonymDict::builtin();
      emit(evalkit::hashtag_report(evalkit::load_posts(posts_path), evalkit::load_facets(facets_path), syn,
                                   tau.value_or(cfg.coverage_tau)),
           out_path);
    } else if (split_cmd->parsed()) {
      emit(app::to_json(app::split_catalog(retrieval::load_catalog(catalog_path), ratio, seed)), out_path);
    } else if (serve_cmd->parsed()) {
      auto cfg = load_config(config_path, no_llm);
      app::ServiceOptions options;
      options.image_root = image_root;
      options.queries = load_queries(queries_path, cfg, fs::path(index_path).parent_path());
      app::Engine engine(std::move(cfg), retrieval::load_index(index_path));
      app::Service service(engine, std::move(options));
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      RunLog log(&std::cerr);
      log.info("serving", {{"host", host}, {"port", port}, {"index_size", engine.index().size()}});
      service.listen(host, port);
      g_service = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << nlohmann::json{{"error", to_string(e.code())}, {"detail", e.what()}}.dump() << "\n";
    return exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "internal"}, {"detail", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
