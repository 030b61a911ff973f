#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqa/composer.hpp"
#include "sqa/corpus.hpp"
#include "sqa/eval.hpp"
#include "sqa/executor.hpp"
#include "sqa/llm.hpp"
#include "sqa/resolver.hpp"
#include "sqa/visualizer.hpp"

namespace sqa {

struct PipelineOptions {
  std::string utility_profile = "utility_model";
  std::string planner_profile = "planner_model";
  ExecutorOptions executor;
  bool charts = true;
};

struct ModuleSpan {
  std::string name;
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;
};

struct AnswerEnvelope {
  std::string run_id;
  std::string question;
  std::string mode;
  ComposedResponse response;
  std::vector<ChartSpec> charts;
  std::optional<PlotDecision> plot_decision;
  RunTrace trace;
  std::vector<ModuleSpan> spans;
  std::vector<std::string> warnings;  // pipeline-level, plus step and chart warnings

  std::int64_t wall_us() const;
  /// With timings off the output depends only on the inputs.
  nlohmann::json to_json(bool with_timings = true) const;
  /// Human-readable form printed by `sqa ask`.
  std::string to_text() const;
};

class Pipeline {
 public:
  Pipeline(const Corpus& corpus, const EntityResolver& resolver, Gateway& gateway,
           PipelineOptions options = {});

  /// Error(kInvalidInput) for an empty question or unknown mode and
  /// Error(kProviderUnavailable) when the model cannot be reached. Any other
  /// failure degrades to the no-data answer.
  AnswerEnvelope answer(const std::string& question, const std::string& mode = "workflow");

  /// Hash of question, mode, corpus digest and the provider profiles used.
  std::string run_id(const std::string& question, const std::string& mode) const;

  const Corpus& corpus() const { return corpus_; }
  const EntityResolver& resolver() const { return resolver_; }
  Gateway& gateway() { return gateway_; }
  const PipelineOptions& options() const { return options_; }

 private:
  const Corpus& corpus_;
  const EntityResolver& resolver_;
  Gateway& gateway_;
  PipelineOptions options_;
  LocalToolBackend backend_;
};

/// Completed runs by run id.
class RunStore {
 public:
  void put(const AnswerEnvelope& env);
  std::optional<nlohmann::json> trace(const std::string& run_id) const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, nlohmann::json> traces_;
};

/// Ranked candidates for `q`; all entity types when `type` is empty.
nlohmann::json resolve_entities(const EntityResolver& resolver, const std::string& q,
                                const std::string& type, int k);

/// HTTP front end:
///   POST /v1/answer {question, mode}
///   GET  /v1/runs/<id>/trace
///   GET  /v1/entities/resolve?q=&type=&k=
///   GET  /healthz
class Server {
 public:
  Server(Pipeline& pipeline, RunStore& store);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds to host:port (port 0 picks a free port); returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct EvalOptions {
  std::vector<std::string> jury;
  std::vector<std::string> modes = {"workflow", "baseline"};
  double epsilon = kDefaultEpsilon;
  ReportOptions report;
};

struct EvalRun {
  std::vector<ScoredAnswer> answers;
  nlohmann::json report;
};

/// Answers every question in every mode, judges and pools the answers,
/// flags critical errors against the oracle params, and builds the report.
EvalRun run_evaluation(Pipeline& pipeline, const std::vector<EvalQuestion>& questions,
                       const std::map<std::string, QueryParams>& oracles, const Rubric& rubric,
                       const EvalOptions& options);

}  // namespace sqa
