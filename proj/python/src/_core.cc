// Python bindings for the main kgcoref operations. Structured results cross
// the boundary as JSON-compatible Python objects.

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kgcoref/checkpoint.h"
#include "kgcoref/config.h"
#include "kgcoref/corpus.h"
#include "kgcoref/error.h"
#include "kgcoref/eval.h"
#include "kgcoref/kg.h"
#include "kgcoref/model.h"
#include "kgcoref/synth.h"
#include "kgcoref/train.h"

namespace py = pybind11;

namespace kgcoref {
namespace {

py::object ToPython(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json FromPython(const py::object& obj) {
  if (obj.is_none()) return nlohmann::json::object();
  const std::string text = py::str(py::module_::import("json").attr("dumps")(obj));
  return nlohmann::json::parse(text);
}

using TripletTuple = std::tuple<std::string, std::string, std::string, double, std::string>;

TripletTuple ToTuple(const Triplet& t) {
  return {NormalizePhrase(t.head), t.relation, NormalizePhrase(t.tail), t.confidence,
          SourceName(t.source)};
}

std::vector<TripletTuple> ToTuples(const std::vector<Triplet>& triplets) {
  std::vector<TripletTuple> out;
  out.reserve(triplets.size());
  for (const Triplet& t : triplets) out.push_back(ToTuple(t));
  return out;
}

DepRelation RelationFromName(const std::string& name) {
  if (name == "nsubj") return DepRelation::kNsubj;
  if (name == "dobj") return DepRelation::kDobj;
  throw ValidationError("kg", "unknown relation '" + name + "'");
}

std::vector<DepEdge> EdgesFromTuples(
    const std::vector<std::tuple<std::string, std::string, std::string, int64_t>>& edges) {
  std::vector<DepEdge> out;
  out.reserve(edges.size());
  for (const auto& [pred, arg, rel, count] : edges) {
    out.push_back({pred, arg, RelationFromName(rel), count});
  }
  return out;
}

std::vector<Document> ParseCorpusLines(const std::vector<std::string>& lines) {
  std::vector<Document> docs;
  docs.reserve(lines.size());
  for (const std::string& line : lines) docs.push_back(ParseDocument(line));
  return docs;
}

struct Corpus {
  std::vector<Document> docs;
};

py::list DocsToJson(const std::vector<Document>& docs) {
  py::list out;
  for (const Document& d : docs) out.append(ToPython(nlohmann::json::parse(DocumentToJson(d))));
  return out;
}

py::dict TrainLogEntry(const EpochLog& e) {
  py::dict d;
  d["epoch"] = e.epoch;
  d["mean_loss"] = e.mean_loss;
  d["dev_f1"] = e.dev_f1 < 0 ? py::object(py::none()) : py::object(py::float_(e.dev_f1));
  d["wall_seconds"] = e.wall_seconds;
  return d;
}

}  // namespace
}  // namespace kgcoref

PYBIND11_MODULE(_core, m) {
  using namespace kgcoref;
  m.doc() = "Knowledge-aware pronoun coreference";

  static py::exception<Error> error(m, "Error");
  static py::exception<ParseError> parse_error(m, "ParseError", error.ptr());
  static py::exception<ValidationError> validation_error(m, "ValidationError", error.ptr());
  static py::exception<LookupError> lookup_error(m, "LookupError", error.ptr());
  static py::exception<CoverageError> coverage_error(m, "CoverageError", error.ptr());
  static py::exception<NumericError> numeric_error(m, "NumericError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      parse_error(e.what());
    } catch (const ValidationError& e) {
      validation_error(e.what());
    } catch (const LookupError& e) {
      lookup_error(e.what());
    } catch (const CoverageError& e) {
      coverage_error(e.what());
    } catch (const NumericError& e) {
      numeric_error(e.what());
    } catch (const Error& e) {
      error(e.what());
    } catch (const nlohmann::json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("classify_pronoun", [](const std::string& token) { return PronounTypeName(ClassifyPronoun(token)); },
        py::arg("token"));

  py::class_<Corpus>(m, "Corpus")
      .def("__len__", [](const Corpus& c) { return c.docs.size(); })
      .def_property_readonly("doc_ids",
                             [](const Corpus& c) {
                               std::vector<std::string> ids;
                               for (const Document& d : c.docs) ids.push_back(d.id);
                               return ids;
                             })
      .def("num_pronouns",
           [](const Corpus& c) {
             size_t n = 0;
             for (const Document& d : c.docs) n += d.pronouns.size();
             return n;
           })
      .def("to_json", [](const Corpus& c) { return DocsToJson(c.docs); })
      .def("save", [](const Corpus& c, const std::string& path) { SaveCorpus(c.docs, path); },
           py::arg("path"));

  m.def("load_corpus", [](const std::string& path) { return Corpus{LoadCorpus(path)}; }, py::arg("path"));
  m.def("parse_corpus", [](const std::vector<std::string>& lines) { return Corpus{ParseCorpusLines(lines)}; },
        py::arg("lines"), "Builds a corpus from one JSON document per string.");

  py::class_<KnowledgeGraph>(m, "KnowledgeGraph")
      .def(py::init<>())
      .def("__len__", &KnowledgeGraph::size)
      .def(
          "add",
          [](KnowledgeGraph& g, const std::string& head, const std::string& relation, const std::string& tail,
             double confidence, const std::string& source) {
            const auto src = ParseSource(source);
            if (!src) throw ValidationError("kg", "unknown source '" + source + "'");
            g.Add({SplitWords(head), relation, SplitWords(tail), confidence, *src});
          },
          py::arg("head"), py::arg("relation"), py::arg("tail"), py::arg("confidence") = 1.0,
          py::arg("source") = "other")
      .def("triplets", [](const KnowledgeGraph& g) { return ToTuples(g.triplets()); })
      .def("retrieve", [](const KnowledgeGraph& g, const std::string& phrase) {
        return ToTuples(g.Retrieve(SplitWords(phrase)));
      }, py::arg("phrase"))
      .def("count_by_source",
           [](const KnowledgeGraph& g) {
             std::map<std::string, size_t> out;
             for (const auto& [src, n] : g.CountBySource()) out[SourceName(src)] = n;
             return out;
           })
      .def("without_groups",
           [](const KnowledgeGraph& g, const std::vector<std::string>& groups) {
             std::set<KnowledgeSource> drop;
             for (const std::string& name : groups) {
               const auto s = SourceGroup(name);
               drop.insert(s.begin(), s.end());
             }
             return g.WithoutSources(drop);
           },
           py::arg("groups"))
      .def("save", [](const KnowledgeGraph& g, const std::string& path) { SaveTriplets(g, path); },
           py::arg("path"));

  m.def("load_triplets",
        [](const std::string& path, double min_confidence) { return LoadTriplets(path, min_confidence); },
        py::arg("path"), py::arg("min_confidence") = -std::numeric_limits<double>::infinity());
  m.def("merge_graphs", [](const std::vector<KnowledgeGraph>& graphs) { return MergeGraphs(graphs); },
        py::arg("graphs"));

  m.def(
      "extract_sp",
      [](const std::vector<std::tuple<std::string, std::string, std::string, int64_t>>& edges,
         double prob_threshold, int64_t count_threshold, int threads) {
        const std::vector<DepEdge> parsed = EdgesFromTuples(edges);
        std::vector<Triplet> out;
        {
          py::gil_scoped_release release;
          out = ExtractSp(parsed, prob_threshold, count_threshold, threads);
        }
        return ToTuples(out);
      },
      py::arg("edges"), py::arg("prob_threshold") = 0.1, py::arg("count_threshold") = 10,
      py::arg("threads") = 1,
      "Edges are (predicate, argument, relation, count) with relation 'nsubj' or 'dobj'. Returns "
      "(head, relation, tail, confidence, source) tuples with the argument as head.");

  m.def(
      "build_knowledge_graph",
      [](const KnowledgeGraph& base, const std::vector<std::string>& markup_files,
         const std::vector<std::string>& edge_files, double sp_prob, int64_t sp_count, bool include_pronouns) {
        std::vector<Markup> markups;
        for (const std::string& f : markup_files) {
          auto part = LoadMarkups(f);
          markups.insert(markups.end(), part.begin(), part.end());
        }
        std::vector<DepEdge> edges;
        for (const std::string& f : edge_files) {
          auto part = LoadDepEdges(f);
          edges.insert(edges.end(), part.begin(), part.end());
        }
        return BuildKnowledgeGraph(base, markups, edges, sp_prob, sp_count, include_pronouns);
      },
      py::arg("base"), py::arg("markup_files") = std::vector<std::string>{},
      py::arg("edge_files") = std::vector<std::string>{}, py::arg("sp_prob") = 0.1, py::arg("sp_count") = 10,
      py::arg("include_pronouns") = true);

  py::class_<SynthOutput>(m, "SyntheticData")
      .def_property_readonly("corpus", [](const SynthOutput& s) { return Corpus{s.corpus}; })
      .def_property_readonly("kinds",
                             [](const SynthOutput& s) {
                               std::vector<std::string> kinds;
                               for (const SynthDocInfo& i : s.info) kinds.push_back(i.kind);
                               return kinds;
                             })
      .def("knowledge_graph", [](const SynthOutput& s) { return SynthKnowledgeGraph(s); })
      .def("write", [](const SynthOutput& s, const std::string& dir) { WriteSynthetic(s, dir); }, py::arg("dir"));

  m.def(
      "generate_synthetic",
      [](int n_docs, uint64_t seed, int n_entities, int vocab_size, double knowledge_dependence,
         const std::string& domain_tag, int distractors_per_span, const std::string& style) {
        SynthSpec spec;
        spec.n_docs = n_docs;
        spec.seed = seed;
        spec.n_entities = n_entities;
        spec.vocab_size = vocab_size;
        spec.knowledge_dependence = knowledge_dependence;
        spec.domain_tag = domain_tag;
        spec.distractors_per_span = distractors_per_span;
        spec.style = ParseSynthStyle(style);
        spec.Validate();
        return GenerateSynthetic(spec);
      },
      py::arg("n_docs") = 100, py::arg("seed") = 1, py::arg("n_entities") = 60, py::arg("vocab_size") = 40,
      py::arg("knowledge_dependence") = 1.0, py::arg("domain_tag") = "general",
      py::arg("distractors_per_span") = 0, py::arg("style") = "general");

  py::class_<Model>(m, "Model")
      .def_property_readonly("variant", [](const Model& model) { return VariantName(model.config.variant); })
      .def_property_readonly("config", [](const Model& model) { return ToPython(ModelConfigToJson(model.config)); })
      .def_property_readonly("vocab_size", [](const Model& model) { return model.vocab.size(); })
      .def_property_readonly("num_parameters", [](const Model& model) { return model.params.Flatten().size(); })
      .def(
          "save",
          [](const Model& model, const std::string& path, const py::object& metadata) {
            SaveCheckpoint(path, model, FromPython(metadata));
          },
          py::arg("path"), py::arg("metadata") = py::none())
      .def("to_bytes",
           [](const Model& model, const py::object& metadata) {
             return py::bytes(SerializeCheckpoint(model, FromPython(metadata)));
           },
           py::arg("metadata") = py::none());

  m.def(
      "load_checkpoint",
      [](const std::string& path) {
        Checkpoint c = LoadCheckpoint(path);
        return py::make_tuple(std::move(c.model), ToPython(c.metadata));
      },
      py::arg("path"), "Returns (model, metadata).");

  m.def(
      "train",
      [](const Corpus& train, const KnowledgeGraph& graph, const Corpus* dev, const py::object& model_config,
         const py::object& train_config) {
        ModelConfig mc;
        ApplyModelConfig(FromPython(model_config), &mc);
        TrainConfig tc;
        ApplyTrainConfig(FromPython(train_config), &tc);
        std::optional<TrainResult> result;
        {
          py::gil_scoped_release release;
          result.emplace(Train(train.docs, dev ? &dev->docs : nullptr, graph, mc, tc));
        }
        py::list log;
        for (const EpochLog& e : result->log) log.append(TrainLogEntry(e));
        return py::make_tuple(std::move(result->model), log);
      },
      py::arg("train"), py::arg("graph"), py::arg("dev") = nullptr, py::arg("model_config") = py::none(),
      py::arg("train_config") = py::none(),
      "Config dicts use the same keys as the JSON config file. Returns (model, epoch_log).");

  m.def(
      "evaluate",
      [](const Model& model, const Corpus& corpus, const KnowledgeGraph& graph, double threshold, bool gold_mode,
         int threads) {
        MetricReport report;
        {
          py::gil_scoped_release release;
          report = Evaluate(model, corpus.docs, graph, threshold, gold_mode, threads);
        }
        return ToPython(ReportToJson(report));
      },
      py::arg("model"), py::arg("corpus"), py::arg("graph"), py::arg("threshold") = 1e-2,
      py::arg("gold_mode") = false, py::arg("threads") = 1);

  m.def(
      "threshold_sweep",
      [](const Model& model, const Corpus& corpus, const KnowledgeGraph& graph, const std::vector<double>& grid,
         bool gold_mode, int threads) {
        std::vector<SweepPoint> sweep;
        {
          py::gil_scoped_release release;
          sweep = ThresholdSweep(model, corpus.docs, graph, grid, gold_mode, threads);
        }
        py::list out;
        for (const SweepPoint& p : sweep) {
          py::dict d = ToPython(ReportToJson(p.report));
          d["threshold"] = p.threshold;
          d["max_normalization_error"] = p.max_normalization_error;
          out.append(d);
        }
        return out;
      },
      py::arg("model"), py::arg("corpus"), py::arg("graph"), py::arg("grid"), py::arg("gold_mode") = false,
      py::arg("threads") = 1);

  m.def(
      "predict",
      [](const Model& model, const Corpus& corpus, const KnowledgeGraph& graph, double threshold, bool gold_mode) {
        std::vector<PredictionResult> results;
        {
          py::gil_scoped_release release;
          results = Predict(model, corpus.docs, graph, threshold, gold_mode);
        }
        std::map<std::string, const Document*> by_id;
        for (const Document& d : corpus.docs) by_id[d.id] = &d;
        py::list out;
        for (const PredictionResult& r : results) {
          out.append(ToPython(nlohmann::json::parse(PredictionToJson(r, *by_id.at(r.doc_id)))));
        }
        return out;
      },
      py::arg("model"), py::arg("corpus"), py::arg("graph"), py::arg("threshold") = 1e-2,
      py::arg("gold_mode") = false);
}
