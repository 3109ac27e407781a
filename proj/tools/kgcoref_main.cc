// Command-line front end for knowledge building, training and evaluation.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "kgcoref/checkpoint.h"
#include "kgcoref/config.h"
#include "kgcoref/corpus.h"
#include "kgcoref/error.h"
#include "kgcoref/eval.h"
#include "kgcoref/kg.h"
#include "kgcoref/synth.h"
#include "kgcoref/train.h"

namespace kgcoref {
namespace {

void RequireFile(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw LookupError("cli", "input file not found: " + path);
  }
}

void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LookupError("cli", "cannot write " + path);
  out << text;
}

void PrintResolved(const std::string& command, const nlohmann::json& config) {
  std::cerr << "kgcoref " << command << " config: " << config.dump() << '\n';
}

std::vector<Document> ReadCorpus(const std::string& path) {
  RequireFile(path);
  return LoadCorpus(path);
}

KnowledgeGraph ReadGraph(const std::string& path) {
  if (path.empty()) return KnowledgeGraph();
  RequireFile(path);
  return LoadTriplets(path, -std::numeric_limits<double>::infinity());
}

// Model and training flags; a flag given on the command line overrides the
// config file.
struct ConfigFlags {
  std::string config_path;
  ModelConfig model;
  TrainConfig train;
  std::string variant = "complete";
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;

  template <typename T>
  void Add(CLI::App* app, const std::string& name, T* value, const std::string& help,
           std::function<void(RunConfig&, const T&)> apply) {
    CLI::Option* opt = app->add_option(name, *value, help);
    overrides.push_back({opt, [value, apply](RunConfig& c) { apply(c, *value); }});
  }

  void Register(CLI::App* app, bool training) {
    app->add_option("--config", config_path, "JSON file with model/train sections");
    Add<std::string>(app, "--variant", &variant, "complete, without_kg or without_attention",
                     [](RunConfig& c, const std::string& v) { c.model.variant = ParseVariant(v); });
    Add<int>(app, "--embed-dim", &model.embed_dim, "word embedding size",
             [](RunConfig& c, const int& v) { c.model.embed_dim = v; });
    Add<int>(app, "--lstm-hidden", &model.lstm_hidden, "LSTM hidden size per direction",
             [](RunConfig& c, const int& v) { c.model.lstm_hidden = v; });
    Add<int>(app, "--ffn-hidden", &model.ffn_hidden, "feed-forward hidden size",
             [](RunConfig& c, const int& v) { c.model.ffn_hidden = v; });
    Add<int>(app, "--bucket-dim", &model.length_bucket_dim, "length feature size",
             [](RunConfig& c, const int& v) { c.model.length_bucket_dim = v; });
    Add<double>(app, "--dropout", &model.dropout_rate, "dropout rate",
                [](RunConfig& c, const double& v) { c.model.dropout_rate = v; });
    Add<int>(app, "--max-knowledge", &model.max_knowledge,
             "knowledge vectors concatenated by without_attention",
             [](RunConfig& c, const int& v) { c.model.max_knowledge = v; });
    Add<int>(app, "--max-span-width", &model.max_span_width, "longest candidate span",
             [](RunConfig& c, const int& v) { c.model.max_span_width = v; });
    Add<int>(app, "--vocab-min-count", &model.vocab_min_count, "minimum corpus word count",
             [](RunConfig& c, const int& v) { c.model.vocab_min_count = v; });
    Add<uint64_t>(app, "--seed", &model.seed, "initialization and dropout seed",
                  [](RunConfig& c, const uint64_t& v) { c.model.seed = v; });
    if (!training) return;
    Add<int>(app, "--epochs", &train.max_epochs, "maximum epochs",
             [](RunConfig& c, const int& v) { c.train.max_epochs = v; });
    Add<double>(app, "--lr", &train.learning_rate, "Adam learning rate",
                [](RunConfig& c, const double& v) { c.train.learning_rate = v; });
    Add<uint64_t>(app, "--shuffle-seed", &train.shuffle_seed, "instance shuffle seed",
                  [](RunConfig& c, const uint64_t& v) { c.train.shuffle_seed = v; });
    Add<double>(app, "--clip-norm", &train.clip_norm, "global gradient norm clip",
                [](RunConfig& c, const double& v) { c.train.clip_norm = v; });
    Add<double>(app, "--dev-threshold", &train.dev_threshold,
                "selection threshold for dev F1 (stored in the checkpoint)",
                [](RunConfig& c, const double& v) { c.train.dev_threshold = v; });
    Add<bool>(app, "--select-on-dev", &train.select_on_dev, "keep the best dev epoch",
              [](RunConfig& c, const bool& v) { c.train.select_on_dev = v; });
  }

  RunConfig Resolve(int threads) const {
    RunConfig c;
    if (!config_path.empty()) {
      RequireFile(config_path);
      c = LoadRunConfig(config_path);
    }
    for (const auto& [opt, apply] : overrides) {
      if (opt->count() > 0) apply(c);
    }
    c.train.threads = threads;
    c.model.Validate();
    c.train.Validate();
    return c;
  }
};

double CheckpointThreshold(const Checkpoint& ckpt, double fallback) {
  return ckpt.metadata.value("threshold", fallback);
}

int Run(int argc, char** argv) {
  CLI::App app{"Knowledge-aware pronoun coreference"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads for SP counting and evaluation")
      ->check(CLI::PositiveNumber);

  // gen-synth
  SynthSpec synth;
  std::string synth_dir, synth_style = "general";
  CLI::App* gen = app.add_subcommand("gen-synth", "generate a synthetic corpus and knowledge");
  gen->add_option("--out-dir", synth_dir, "output directory")->required();
  gen->add_option("--n-docs", synth.n_docs, "documents");
  gen->add_option("--vocab-size", synth.vocab_size, "filler vocabulary size");
  gen->add_option("--n-entities", synth.n_entities, "entities");
  gen->add_option("--seed", synth.seed, "seed");
  gen->add_option("--knowledge-dependence", synth.knowledge_dependence,
                  "fraction of pronouns that need a triplet");
  gen->add_option("--domain-tag", synth.domain_tag, "domain tag (selects the content lexicon)");
  gen->add_option("--distractors", synth.distractors_per_span, "unrelated triplets per entity");
  gen->add_option("--style", synth_style, "general or medical");

  // extract-sp
  std::string edges_path, sp_out;
  double sp_prob = 0.1;
  int64_t sp_count = 10;
  CLI::App* esp = app.add_subcommand("extract-sp", "mine selectional preference triplets");
  esp->add_option("--edges", edges_path, "dependency edge TSV")->required();
  esp->add_option("--prob", sp_prob, "keep pairs with P(a|p) strictly above this");
  esp->add_option("--min-count", sp_count, "keep pairs with count strictly above this");
  esp->add_option("--out", sp_out, "output triplet TSV")->required();

  // gen-ling
  std::string markups_path, ling_out;
  bool ling_pronouns = false;
  CLI::App* ling = app.add_subcommand("gen-ling", "plurality and animacy/gender triplets");
  ling->add_option("--markups", markups_path, "markup TSV (phrase, plurality, ag)");
  ling->add_flag("--pronouns", ling_pronouns, "append the pronoun table");
  ling->add_option("--out", ling_out, "output triplet TSV")->required();

  // build-kg
  std::vector<std::string> kg_triplets;
  std::vector<std::string> kg_markups, kg_edges;
  std::string kg_out, kg_source = "omcs";
  double kg_min_conf = -std::numeric_limits<double>::infinity();
  bool kg_no_pronouns = false;
  CLI::App* build = app.add_subcommand("build-kg", "merge all knowledge into one triplet file");
  build->add_option("--triplets", kg_triplets, "triplet TSV files (repeatable)");
  build->add_option("--source", kg_source, "source for rows without a source column");
  build->add_option("--min-confidence", kg_min_conf, "drop rows with confidence <= this");
  build->add_option("--markups", kg_markups, "markup TSV files (repeatable)");
  build->add_option("--edges", kg_edges, "dependency edge TSV files (repeatable)");
  build->add_option("--sp-prob", sp_prob, "SP probability threshold");
  build->add_option("--sp-min-count", sp_count, "SP count threshold");
  build->add_flag("--no-pronouns", kg_no_pronouns, "leave out the pronoun table");
  build->add_option("--out", kg_out, "output triplet TSV")->required();

  // train
  ConfigFlags train_flags;
  std::string train_corpus, dev_corpus, train_kg, ckpt_out, log_out;
  CLI::App* train = app.add_subcommand("train", "train a model");
  train->add_option("--corpus", train_corpus, "training JSONL")->required();
  train->add_option("--dev", dev_corpus, "development JSONL");
  train->add_option("--kg", train_kg, "knowledge triplet TSV");
  train->add_option("--out", ckpt_out, "checkpoint path (.kwc)")->required();
  train->add_option("--log", log_out, "training log CSV");
  train_flags.Register(train, true);

  // evaluate / predict / sweep share inputs
  std::string ckpt_path, corpus_path, kg_path, out_path, json_out;
  double threshold = -1;
  bool gold_mode = false;
  auto add_eval_inputs = [&](CLI::App* sub) {
    sub->add_option("--checkpoint", ckpt_path, "checkpoint (.kwc)")->required();
    sub->add_option("--corpus", corpus_path, "JSONL corpus")->required();
    sub->add_option("--kg", kg_path, "knowledge triplet TSV");
    sub->add_flag("--gold-mentions", gold_mode, "use gold mentions as candidates");
  };
  CLI::App* evaluate = app.add_subcommand("evaluate", "precision/recall/F1 report");
  add_eval_inputs(evaluate);
  evaluate->add_option("--threshold", threshold, "selection threshold (default: checkpoint's)");
  evaluate->add_option("--json", json_out, "also write the report as JSON");

  CLI::App* predict = app.add_subcommand("predict", "selected antecedents as JSONL");
  add_eval_inputs(predict);
  predict->add_option("--threshold", threshold, "selection threshold (default: checkpoint's)");
  predict->add_option("--out", out_path, "output JSONL (default stdout)");

  std::vector<double> grid = {0, 1e-8, 1e-4, 1e-2, 0.05, 0.1, 0.2};
  CLI::App* sweep = app.add_subcommand("sweep", "threshold sweep as CSV");
  add_eval_inputs(sweep);
  sweep->add_option("--grid", grid, "ascending thresholds")->delimiter(',');
  sweep->add_option("--out", out_path, "output CSV (default stdout)");

  // cross-domain
  std::array<std::string, 2> cd_names = {"a", "b"}, cd_ckpt, cd_corpus, cd_kg;
  std::array<double, 2> cd_threshold = {-1, -1};
  CLI::App* cross = app.add_subcommand("cross-domain", "2x2 train/test domain F1 matrix");
  for (int i = 0; i < 2; ++i) {
    const std::string s = i == 0 ? "a" : "b";
    cross->add_option("--name-" + s, cd_names[i], "domain name");
    cross->add_option("--checkpoint-" + s, cd_ckpt[i], "checkpoint trained on this domain")
        ->required();
    cross->add_option("--corpus-" + s, cd_corpus[i], "test JSONL of this domain")->required();
    cross->add_option("--kg-" + s, cd_kg[i], "knowledge of this domain")->required();
    cross->add_option("--threshold-" + s, cd_threshold[i], "threshold of this domain's model");
  }
  cross->add_option("--json", json_out, "also write the matrix as JSON");

  // ablate
  ConfigFlags ablate_flags;
  std::string drop_list, abl_train, abl_dev;
  bool eval_only = false;
  CLI::App* ablate = app.add_subcommand("ablate", "remove knowledge sources and compare");
  ablate->add_option("--checkpoint", ckpt_path, "complete-model checkpoint")->required();
  ablate->add_option("--corpus", corpus_path, "test JSONL")->required();
  ablate->add_option("--kg", kg_path, "merged knowledge TSV with a source column")->required();
  ablate->add_option("--drop", drop_list, "comma list of ling, sp, omcs, medical, ...");
  ablate->add_option("--threshold", threshold, "selection threshold (default: checkpoint's)");
  ablate->add_flag("--eval-only", eval_only, "re-evaluate the complete model instead of retraining");
  ablate->add_option("--train", abl_train, "training JSONL for retraining");
  ablate->add_option("--dev", abl_dev, "development JSONL for retraining");
  ablate->add_option("--json", json_out, "also write the result as JSON");
  ablate_flags.Register(ablate, true);

  if (argc <= 1) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*gen) {
    synth.style = ParseSynthStyle(synth_style);
    PrintResolved("gen-synth", {{"out_dir", synth_dir},
                                {"n_docs", synth.n_docs},
                                {"vocab_size", synth.vocab_size},
                                {"n_entities", synth.n_entities},
                                {"seed", synth.seed},
                                {"knowledge_dependence", synth.knowledge_dependence},
                                {"domain_tag", synth.domain_tag},
                                {"distractors", synth.distractors_per_span},
                                {"style", SynthStyleName(synth.style)}});
    const SynthOutput out = GenerateSynthetic(synth);
    WriteSynthetic(out, synth_dir);
    SaveTriplets(SynthKnowledgeGraph(out), (std::filesystem::path(synth_dir) / "kg.tsv").string());
    spdlog::info("wrote {} documents to {}", out.corpus.size(), synth_dir);
  } else if (*esp) {
    PrintResolved("extract-sp", {{"edges", edges_path}, {"prob", sp_prob}, {"min_count", sp_count},
                                 {"out", sp_out}, {"threads", threads}});
    RequireFile(edges_path);
    const std::vector<DepEdge> edges = LoadDepEdges(edges_path);
    const KnowledgeGraph sp(ExtractSp(edges, sp_prob, sp_count, threads));
    SaveTriplets(sp, sp_out);
    spdlog::info("{} edges -> {} SP triplets", edges.size(), sp.size());
  } else if (*ling) {
    PrintResolved("gen-ling", {{"markups", markups_path}, {"pronouns", ling_pronouns}, {"out", ling_out}});
    std::vector<Markup> markups;
    if (!markups_path.empty()) {
      RequireFile(markups_path);
      markups = LoadMarkups(markups_path);
    }
    std::vector<Triplet> triplets = GenLinguisticTriplets(markups);
    if (ling_pronouns) {
      for (Triplet& t : PronounTriplets()) triplets.push_back(std::move(t));
    }
    SaveTriplets(KnowledgeGraph(std::move(triplets)), ling_out);
  } else if (*build) {
    PrintResolved("build-kg", {{"triplets", kg_triplets}, {"source", kg_source},
                               {"min_confidence", kg_min_conf}, {"markups", kg_markups},
                               {"edges", kg_edges}, {"sp_prob", sp_prob},
                               {"sp_min_count", sp_count}, {"pronouns", !kg_no_pronouns},
                               {"out", kg_out}, {"threads", threads}});
    const auto source = ParseSource(kg_source);
    if (!source) throw ValidationError("cli", "unknown knowledge source '" + kg_source + "'");
    std::vector<KnowledgeGraph> bases;
    for (const std::string& path : kg_triplets) {
      RequireFile(path);
      bases.push_back(LoadTriplets(path, kg_min_conf, *source));
    }
    std::vector<Markup> markups;
    for (const std::string& path : kg_markups) {
      RequireFile(path);
      for (Markup& m : LoadMarkups(path)) markups.push_back(std::move(m));
    }
    std::vector<DepEdge> edges;
    for (const std::string& path : kg_edges) {
      RequireFile(path);
      for (DepEdge& e : LoadDepEdges(path)) edges.push_back(std::move(e));
    }
    const KnowledgeGraph graph = BuildKnowledgeGraph(MergeGraphs(bases), markups, edges, sp_prob,
                                                     sp_count, !kg_no_pronouns, threads);
    SaveTriplets(graph, kg_out);
    for (const auto& [src, n] : graph.CountBySource()) spdlog::info("{}: {} triplets", SourceName(src), n);
  } else if (*train) {
    const RunConfig cfg = train_flags.Resolve(threads);
    nlohmann::json resolved = RunConfigToJson(cfg);
    resolved["corpus"] = train_corpus;
    resolved["dev"] = dev_corpus;
    resolved["kg"] = train_kg;
    resolved["out"] = ckpt_out;
    PrintResolved("train", resolved);
    const std::vector<Document> corpus = ReadCorpus(train_corpus);
    std::vector<Document> dev;
    if (!dev_corpus.empty()) dev = ReadCorpus(dev_corpus);
    const KnowledgeGraph graph = ReadGraph(train_kg);
    const TrainResult result =
        Train(corpus, dev_corpus.empty() ? nullptr : &dev, graph, cfg.model, cfg.train);
    spdlog::info("{} instances, {} skipped, kept epoch {}", result.instances, result.skipped,
                 result.best_epoch);
    SaveCheckpoint(ckpt_out, result.model,
                   {{"threshold", cfg.train.dev_threshold}, {"best_epoch", result.best_epoch},
                    {"skipped", result.skipped}, {"train", RunConfigToJson(cfg)["train"]}});
    if (!log_out.empty()) WriteText(log_out, TrainLogToCsv(result.log));
  } else if (*evaluate || *predict || *sweep) {
    const char* name = *evaluate ? "evaluate" : *predict ? "predict" : "sweep";
    RequireFile(ckpt_path);
    const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
    const double t = threshold >= 0 ? threshold : CheckpointThreshold(ckpt, 1e-2);
    nlohmann::json resolved = {{"checkpoint", ckpt_path}, {"corpus", corpus_path},
                               {"kg", kg_path},           {"gold_mentions", gold_mode},
                               {"threads", threads},      {"model", ModelConfigToJson(ckpt.model.config)}};
    if (*sweep) {
      resolved["grid"] = grid;
    } else {
      resolved["threshold"] = t;
    }
    PrintResolved(name, resolved);
    const std::vector<Document> corpus = ReadCorpus(corpus_path);
    const KnowledgeGraph graph = ReadGraph(kg_path);
    if (*evaluate) {
      const MetricReport report = Evaluate(ckpt.model, corpus, graph, t, gold_mode, threads);
      std::cout << FormatReportTable({{VariantName(ckpt.model.config.variant), report}});
      if (!json_out.empty()) WriteText(json_out, ReportToJson(report).dump(2) + "\n");
    } else if (*predict) {
      std::ostringstream out;
      for (const PredictionResult& r : Predict(ckpt.model, corpus, graph, t, gold_mode, threads)) {
        const auto doc = std::find_if(corpus.begin(), corpus.end(),
                                      [&](const Document& d) { return d.id == r.doc_id; });
        out << PredictionToJson(r, *doc) << '\n';
      }
      WriteText(out_path, out.str());
    } else {
      WriteText(out_path, SweepToCsv(ThresholdSweep(ckpt.model, corpus, graph, grid, gold_mode, threads)));
    }
  } else if (*cross) {
    std::array<Checkpoint, 2> ckpts;
    std::array<std::vector<Document>, 2> corpora;
    std::array<KnowledgeGraph, 2> graphs;
    std::array<DomainSetup, 2> setups;
    nlohmann::json resolved;
    for (int i = 0; i < 2; ++i) {
      RequireFile(cd_ckpt[i]);
      ckpts[i] = LoadCheckpoint(cd_ckpt[i]);
      const double t = cd_threshold[i] >= 0 ? cd_threshold[i] : CheckpointThreshold(ckpts[i], 1e-2);
      resolved[cd_names[i]] = {{"checkpoint", cd_ckpt[i]}, {"corpus", cd_corpus[i]},
                               {"kg", cd_kg[i]}, {"threshold", t}};
      corpora[i] = ReadCorpus(cd_corpus[i]);
      graphs[i] = ReadGraph(cd_kg[i]);
      setups[i] = DomainSetup{cd_names[i], &ckpts[i].model, t, &corpora[i], &graphs[i]};
    }
    resolved["threads"] = threads;
    PrintResolved("cross-domain", resolved);
    const CrossDomainMatrix m = CrossDomain(setups, threads);
    std::cout << CrossDomainTable(m);
    if (!json_out.empty()) {
      nlohmann::json j;
      j["names"] = m.names;
      j["f1"] = m.f1;
      WriteText(json_out, j.dump(2) + "\n");
    }
  } else if (*ablate) {
    RequireFile(ckpt_path);
    const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
    const double t = threshold >= 0 ? threshold : CheckpointThreshold(ckpt, 1e-2);
    std::set<KnowledgeSource> drop;
    std::stringstream names(drop_list);
    for (std::string item; std::getline(names, item, ',');) {
      if (item.empty()) continue;
      const std::set<KnowledgeSource> group = SourceGroup(item);
      drop.insert(group.begin(), group.end());
    }
    std::vector<std::string> drop_names;
    for (KnowledgeSource s : drop) drop_names.push_back(SourceName(s));
    RunConfig cfg = ablate_flags.Resolve(threads);
    cfg.model = ckpt.model.config;
    if (ckpt.metadata.contains("train")) ApplyTrainConfig(ckpt.metadata["train"], &cfg.train);
    for (const auto& [opt, apply] : ablate_flags.overrides) {
      if (opt->count() > 0) apply(cfg);
    }
    cfg.train.threads = threads;
    nlohmann::json resolved = {{"checkpoint", ckpt_path}, {"corpus", corpus_path}, {"kg", kg_path},
                               {"drop", drop_names},      {"threshold", t},
                               {"retrain", !eval_only},   {"config", RunConfigToJson(cfg)}};
    PrintResolved("ablate", resolved);
    const std::vector<Document> test = ReadCorpus(corpus_path);
    const KnowledgeGraph graph = ReadGraph(kg_path);
    std::vector<Document> train_docs, dev_docs;
    AblationTraining training;
    if (!eval_only) {
      if (abl_train.empty()) throw ValidationError("cli", "ablate needs --train unless --eval-only");
      train_docs = ReadCorpus(abl_train);
      if (!abl_dev.empty()) dev_docs = ReadCorpus(abl_dev);
      training = AblationTraining{&train_docs, abl_dev.empty() ? nullptr : &dev_docs, cfg.train};
    }
    const AblationResult r = AblateKnowledge(drop, ckpt.model, graph, test, t,
                                             eval_only ? nullptr : &training, threads);
    std::string label = "-";
    for (const std::string& n : drop_names) label += (label.size() > 1 ? "," : "") + n;
    std::cout << FormatReportTable({{"complete", r.complete}, {drop.empty() ? "complete" : label, r.ablated}});
    std::printf("delta_f1 %+.1f\n", 100 * r.delta_f1);
    if (!json_out.empty()) {
      nlohmann::json j = {{"drop", drop_names},
                          {"complete", ReportToJson(r.complete)},
                          {"ablated", ReportToJson(r.ablated)},
                          {"delta_f1", r.delta_f1},
                          {"remaining_triplets", r.remaining_triplets},
                          {"retrained", r.retrained}};
      WriteText(json_out, j.dump(2) + "\n");
    }
  }
  return 0;
}

}  // namespace
}  // namespace kgcoref

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("kgcoref"));
  try {
    return kgcoref::Run(argc, argv);
  } catch (const kgcoref::Error& e) {
    std::cerr << "error [" << e.module() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
