// sqa: command line front end for the scientometric QA engine.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sqa/corpus.hpp"
#include "sqa/error.hpp"
#include "sqa/eval.hpp"
#include "sqa/llm.hpp"
#include "sqa/resolver.hpp"
#include "sqa/service.hpp"
#include "sqa/visualizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("sqa");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(env_or("SQA_LOG_LEVEL", "warn")));
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw sqa::Error(sqa::ErrorCode::kConfig, "cannot write " + p.string());
  out << body;
}

struct Engine {
  sqa::Corpus corpus;
  sqa::EntityResolver resolver;
  sqa::Gateway gateway;

  Engine(const std::string& corpus_path, const std::string& providers)
      : corpus(sqa::Corpus::load(corpus_path)), resolver(corpus),
        gateway(sqa::load_gateway_config(providers)) {}
};

void require(const std::string& value, const char* what, const char* env) {
  if (value.empty()) {
    throw sqa::Error(sqa::ErrorCode::kConfig,
                     std::string("no ") + what + " given; pass it or set " + env);
  }
}

// Extra rater scores: JSONL {rater, question_id, method, criterion, score}.
sqa::RaterScores load_rater_scores(const fs::path& path) {
  sqa::RaterScores out;
  std::ifstream in(path);
  if (!in) throw sqa::Error(sqa::ErrorCode::kInvalidInput, "cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line);
    auto c = sqa::criterion_from_string(j.at("criterion").get<std::string>());
    if (!c) throw sqa::Error(sqa::ErrorCode::kInvalidInput, "unknown criterion in " + line);
    out[j.at("rater")][{j.at("question_id"), j.at("method"), *c}] = j.at("score").get<int>();
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Scientometric question answering over a local bibliometric corpus"};
  app.require_subcommand(1);

  std::string corpus_path = env_or("SQA_CORPUS", "");
  std::string providers = env_or("SQA_PROVIDERS", "");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load a corpus and print statistics");
  std::string ingest_path;
  ingest->add_option("corpus", ingest_path, "Corpus JSONL")->required();

  // ask
  auto* ask = app.add_subcommand("ask", "Answer one question");
  std::string question, mode = "workflow", charts_fmt, charts_dir = ".";
  bool as_json = false, timings = false, no_charts = false;
  ask->add_option("question", question, "Question text")->required();
  ask->add_option("--mode", mode, "workflow or baseline")->check(CLI::IsMember({"workflow", "baseline"}));
  ask->add_flag("--json", as_json, "Print the answer envelope as JSON");
  ask->add_flag("--timings", timings, "Include timings in JSON output");
  ask->add_option("--charts", charts_fmt, "Render charts to files")->check(CLI::IsMember({"svg"}));
  ask->add_option("--charts-dir", charts_dir, "Directory for rendered charts");
  ask->add_flag("--no-charts", no_charts, "Skip the visualization stage");
  ask->add_option("--corpus", corpus_path, "Corpus JSONL (env SQA_CORPUS)");
  ask->add_option("--providers", providers, "Gateway config JSON (env SQA_PROVIDERS)");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--corpus", corpus_path, "Corpus JSONL (env SQA_CORPUS)");
  serve->add_option("--providers", providers, "Gateway config JSON (env SQA_PROVIDERS)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");

  // eval
  auto* eval = app.add_subcommand("eval", "Run the jury evaluation");
  std::string dataset, rubric_path, oracles_path, judges, out_path = "report.json", modes = "workflow,baseline",
                                                           human_path;
  double epsilon = sqa::kDefaultEpsilon, alpha = 0.05;
  eval->add_option("--dataset", dataset, "Questions JSONL")->required();
  eval->add_option("--rubric", rubric_path, "Rubric JSON")->required();
  eval->add_option("--oracles", oracles_path, "Oracle params JSONL")->required();
  eval->add_option("--judges", judges, "Comma-separated judge profiles")->required();
  eval->add_option("--out", out_path, "Report path");
  eval->add_option("--modes", modes, "Comma-separated modes");
  eval->add_option("--epsilon", epsilon, "Confidence gap for pooling");
  eval->add_option("--alpha", alpha, "Significance level");
  eval->add_option("--human", human_path, "Extra rater scores JSONL");
  eval->add_option("--corpus", corpus_path, "Corpus JSONL (env SQA_CORPUS)");
  eval->add_option("--providers", providers, "Gateway config JSON (env SQA_PROVIDERS)");

  // sample
  auto* sample = app.add_subcommand("sample", "Sample evaluation questions from a DBLP-QuAD file");
  std::string dblp_path, exclude, sample_out;
  int per_category = 10;
  std::uint64_t seed = 1;
  sample->add_option("dblp", dblp_path, "DBLP-QuAD JSON or JSONL")->required();
  sample->add_option("--per-category", per_category, "Questions per category");
  sample->add_option("--seed", seed, "Random seed");
  sample->add_option("--exclude", exclude, "Comma-separated excluded template ids");
  sample->add_option("--out", sample_out, "Output JSONL (stdout when absent)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      auto stats = sqa::ingest_corpus(ingest_path);
      std::cout << json(stats).dump(2) << '\n';
      return 0;
    }
    if (*sample) {
      auto qs = sqa::sample_dataset(dblp_path, per_category, seed, split_csv(exclude));
      std::ostringstream o;
      for (const auto& q : qs) o << json(q).dump() << '\n';
      if (sample_out.empty()) {
        std::cout << o.str();
      } else {
        write_file(sample_out, o.str());
      }
      return 0;
    }

    require(corpus_path, "corpus", "SQA_CORPUS");
    require(providers, "provider config", "SQA_PROVIDERS");
    Engine engine(corpus_path, providers);
    sqa::PipelineOptions opts;
    opts.charts = !no_charts;
    sqa::Pipeline pipeline(engine.corpus, engine.resolver, engine.gateway, opts);

    if (*ask) {
      auto env = pipeline.answer(question, mode);
      if (charts_fmt == "svg") {
        fs::create_directories(charts_dir);
        for (std::size_t i = 0; i < env.charts.size(); ++i) {
          auto p = fs::path(charts_dir) / (env.run_id + "_" + std::to_string(i + 1) + ".svg");
          write_file(p, sqa::render_svg(env.charts[i]));
          spdlog::info("wrote {}", p.string());
        }
      }
      std::cout << (as_json ? env.to_json(timings).dump(2) + "\n" : env.to_text());
      return 0;
    }
    if (*serve) {
      sqa::RunStore store;
      sqa::Server server(pipeline, store);
      int bound = server.bind(host, port);
      std::cerr << "listening on " << host << ':' << bound << '\n';
      server.listen();
      return 0;
    }
    if (*eval) {
      sqa::EvalOptions eo;
      eo.jury = split_csv(judges);
      eo.modes = split_csv(modes);
      eo.epsilon = epsilon;
      eo.report.alpha = alpha;
      if (!human_path.empty()) eo.report.extra_raters = load_rater_scores(human_path);
      auto run = sqa::run_evaluation(pipeline, sqa::load_questions(dataset), sqa::load_oracles(oracles_path),
                                     sqa::load_rubric(rubric_path), eo);
      write_file(out_path, run.report.dump(2) + "\n");
      const auto& crit = run.report["critical_errors"];
      for (auto it = crit.begin(); it != crit.end(); ++it) {
        std::cout << it.key() << ": critical errors " << it.value()["count"] << '/' << it.value()["total"] << '\n';
      }
      std::cout << "report written to " << out_path << '\n';
      return 0;
    }
  } catch (const sqa::Error& e) {
    std::cerr << "error [" << sqa::to_string(e.code()) << "]: " << e.what() << '\n';
    return e.code() == sqa::ErrorCode::kInvalidInput ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
