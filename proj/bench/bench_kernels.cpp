// Serial reference vs OpenMP kernels on a synthetic corpus.
// SQA_BENCH_ARTICLES sets the corpus size (default 50000).

#include <cstdlib>
#include <random>
#include <sstream>

#include <benchmark/benchmark.h>
#include <nlohmann/json.hpp>

#include "sqa/corpus.hpp"
#include "sqa/kernels.hpp"
#include "sqa/query.hpp"
#include "sqa/resolver.hpp"

namespace {

using nlohmann::json;

json ref(const char* prefix, int i, const char* name) {
  return {{"id", std::string(prefix) + std::to_string(i)}, {"name", std::string(name) + " " + std::to_string(i)}};
}

std::string synthetic_corpus(int n) {
  std::mt19937_64 rng(1);
  auto pick = [&](int hi) { return static_cast<int>(rng() % static_cast<unsigned>(hi)); };
  std::ostringstream o;
  for (int i = 0; i < n; ++i) {
    json a = {{"id", "P" + std::to_string(i)},
              {"title", "Paper " + std::to_string(i)},
              {"year", 2000 + pick(25)},
              {"citation_count", pick(200)},
              {"venue", ref("V", pick(300), "Venue")},
              {"references", json::array()}};
    json authors = json::array(), inst = json::array(), topics = json::array();
    for (int k = 0, m = 1 + pick(5); k < m; ++k) authors.push_back(ref("A", pick(n / 4 + 1), "Author"));
    for (int k = 0, m = 1 + pick(2); k < m; ++k) inst.push_back(ref("I", pick(400), "Institute"));
    for (int k = 0, m = pick(3); k < m; ++k) topics.push_back(ref("T", pick(150), "Topic"));
    a["authors"] = authors;
    a["institutions"] = inst;
    a["topics"] = topics;
    a["subject_areas"] = json::array({ref("S", pick(25), "Area")});
    a["sdgs"] = json::array();
    o << a.dump() << '\n';
  }
  return o.str();
}

const sqa::Corpus& corpus() {
  static const sqa::Corpus c = [] {
    const char* env = std::getenv("SQA_BENCH_ARTICLES");
    int n = env ? std::atoi(env) : 50000;
    return sqa::Corpus::parse(synthetic_corpus(n), "synthetic");
  }();
  return c;
}

const sqa::EntityResolver& resolver() {
  static const sqa::EntityResolver r(corpus());
  return r;
}

sqa::kernels::Predicate predicate() {
  using sqa::QueryAst;
  auto ast = QueryAst::disjunction({QueryAst::conjunction({QueryAst::entity(sqa::EntityType::kSubjectArea, "S3"),
                                                           QueryAst::year(2010, 2020)}),
                                    QueryAst::negation(QueryAst::entity(sqa::EntityType::kInstitution, "I7"))});
  return sqa::kernels::Predicate::compile(sqa::canonicalize(ast), corpus());
}

void BM_MatchSerial(benchmark::State& s) {
  auto p = predicate();
  for (auto _ : s) benchmark::DoNotOptimize(sqa::kernels::match_serial(corpus(), p));
}
void BM_MatchParallel(benchmark::State& s) {
  auto p = predicate();
  for (auto _ : s) benchmark::DoNotOptimize(sqa::kernels::match_parallel(corpus(), p));
}

void BM_FacetSerial(benchmark::State& s) {
  auto m = sqa::kernels::match_parallel(corpus(), predicate());
  for (auto _ : s) benchmark::DoNotOptimize(sqa::kernels::facet_tally_serial(corpus(), m, sqa::EntityType::kAuthor));
}
void BM_FacetParallel(benchmark::State& s) {
  auto m = sqa::kernels::match_parallel(corpus(), predicate());
  for (auto _ : s) benchmark::DoNotOptimize(sqa::kernels::facet_tally_parallel(corpus(), m, sqa::EntityType::kAuthor));
}

void BM_ScoreSerial(benchmark::State& s) {
  auto q = sqa::make_name_key("Author 1234");
  for (auto _ : s) {
    benchmark::DoNotOptimize(sqa::kernels::score_entities_serial(resolver(), sqa::EntityType::kAuthor, q));
  }
}
void BM_ScoreParallel(benchmark::State& s) {
  auto q = sqa::make_name_key("Author 1234");
  for (auto _ : s) {
    benchmark::DoNotOptimize(sqa::kernels::score_entities_parallel(resolver(), sqa::EntityType::kAuthor, q));
  }
}

void BM_MetricsSerial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(sqa::kernels::compute_metrics_serial(corpus()));
}
void BM_MetricsParallel(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(sqa::kernels::compute_metrics_parallel(corpus()));
}

}  // namespace

BENCHMARK(BM_MatchSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MatchParallel)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_FacetSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FacetParallel)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_ScoreSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ScoreParallel)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_MetricsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MetricsParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
