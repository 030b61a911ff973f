#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqa/corpus.hpp"
#include "sqa/executor.hpp"
#include "sqa/llm.hpp"
#include "sqa/query.hpp"

namespace sqa {

enum class Criterion { kCoverage, kCoherence, kVerifiability, kValidity };
inline constexpr std::array<Criterion, 4> kAllCriteria = {
    Criterion::kCoverage, Criterion::kCoherence, Criterion::kVerifiability, Criterion::kValidity};

std::string_view to_string(Criterion c);
std::optional<Criterion> criterion_from_string(std::string_view s);

/// Five level descriptions per criterion, index 0 is score 1.
struct Rubric {
  std::array<std::array<std::string, 5>, 4> levels;

  const std::array<std::string, 5>& of(Criterion c) const {
    return levels[static_cast<std::size_t>(c)];
  }
};

/// {"criteria": {"Coverage": [5 strings], ...}} with exactly the four
/// criteria. Error(kInvalidInput) otherwise.
Rubric rubric_from_json(const nlohmann::json& j);
Rubric load_rubric(const std::filesystem::path& path);

struct JudgeVerdict {
  std::string judge;
  Criterion criterion = Criterion::kCoverage;
  int score = 0;
  double confidence = 0.0;
};

struct Abstention {
  std::string judge;
  Criterion criterion = Criterion::kCoverage;
  std::string reason;
};

enum class PoolMethod { kConfidenceWeighted, kMajorityFallback };
std::string_view to_string(PoolMethod m);

struct PooledScore {
  Criterion criterion = Criterion::kCoverage;
  int score = 0;
  PoolMethod method = PoolMethod::kConfidenceWeighted;
  std::map<int, double> mean_confidence;  // per distinct score
  std::map<int, int> votes;
};

inline constexpr double kDefaultEpsilon = 0.05;

/// Mean confidence per distinct score. If the best mean leads the runner-up
/// by at least epsilon the best score wins; otherwise the most frequent
/// score wins, ties going to the lower score. Error(kInvalidInput) on an
/// empty list or mixed criteria.
PooledScore pool_jury(const std::vector<JudgeVerdict>& verdicts, double epsilon = kDefaultEpsilon);

struct AgreementResult {
  std::optional<double> kappa;  // undefined when expected disagreement is 0 but observed is not
  double observed = 0.0;        // weighted disagreement, sum w_ij O_ij
  double expected = 0.0;        // sum w_ij E_ij
  int k = 0;
};

/// Quadratic-weighted Cohen's kappa over ratings in 1..k.
AgreementResult weighted_kappa(const std::vector<int>& a, const std::vector<int>& b, int k);

enum class TestMethod { kExact, kNormalApprox };
std::string_view to_string(TestMethod m);

struct StatTestResult {
  double u = 0.0;  // min(u_x, u_y)
  double u_x = 0.0;
  double u_y = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool significant = false;
  TestMethod method = TestMethod::kExact;
};

inline constexpr double kExactLimit = 400.0;  // n1 * n2 at or below: exact

/// Two-tailed Mann-Whitney U test. Exact null distribution when n1*n2 <= 400
/// and there are no ties; otherwise the normal approximation with tie and
/// continuity corrections.
StatTestResult mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y,
                              double alpha = 0.05);
/// Exact two-tailed p for statistic u_x under H0, no ties.
double mann_whitney_exact_p(int n1, int n2, double u_x);
/// Normal-approximation two-tailed p without ties.
double mann_whitney_normal_p(int n1, int n2, double u_x);
bool is_significant(double p_value, double alpha);

struct JudgeOutcome {
  std::vector<JudgeVerdict> verdicts;  // judge order, then criterion order
  std::vector<Abstention> abstentions;
};

/// One chat per (judge profile, criterion), run concurrently. Replies must be
/// {"score": 1..5, "confidence": 0..1}; one repair, then an abstention.
JudgeOutcome judge(const std::string& question, const std::string& answer_markdown,
                   const Rubric& rubric, const std::vector<std::string>& jury, Gateway& gateway,
                   CallLog* log = nullptr);

/// True iff no step returned rows and the oracle query matches at least one
/// article.
bool detect_critical_error(const RunTrace& trace, const QueryParams& oracle, const Corpus& corpus);

enum class QuestionForm { kFactBased, kSingleIntent, kUnion, kMultipleIntent, kComparativeSuperlative };
std::string_view to_string(QuestionForm f);
std::optional<QuestionForm> question_form_from_string(std::string_view s);

struct EvalQuestion {
  std::string id;
  std::string question;
  QuestionForm form = QuestionForm::kFactBased;
  std::string source = "user";  // user | dblp_quad
  std::string category;         // source category label, dblp_quad only
};

void to_json(nlohmann::json& j, const EvalQuestion& q);
EvalQuestion eval_question_from_json(const nlohmann::json& j);
std::vector<EvalQuestion> load_questions(const std::filesystem::path& jsonl);

/// {"filters": [{type, id, negate?, required?}], "year_range": {min, max},
///  "connective": "AND"|"OR", "limit", "metrics"} with ids taken verbatim.
QueryParams query_params_from_json(const nlohmann::json& j);
/// JSONL lines {"id": question id, "params": {...}}.
std::map<std::string, QueryParams> load_oracles(const std::filesystem::path& jsonl);

/// The five sampled source categories, in sampling order.
inline constexpr std::array<const char*, 5> kDblpCategories = {
    "single_fact", "multi_fact", "double_intent", "union", "comparative_superlative"};

/// Category key of a source label, or nullopt when it is not sampled.
std::optional<std::string> dblp_category(std::string_view label);

/// Seeded uniform sample of per_category questions from each category,
/// after dropping questions whose template id is excluded. Accepts a JSON
/// document with a "questions" array or JSONL. Error(kSampling) names a
/// category with too few questions.
std::vector<EvalQuestion> sample_dataset(const std::filesystem::path& path, int per_category,
                                         std::uint64_t seed,
                                         const std::vector<std::string>& excluded_templates = {});

/// One judged answer.
struct ScoredAnswer {
  std::string question_id;
  std::string method;  // workflow | baseline
  JudgeOutcome outcome;
  std::map<Criterion, PooledScore> pooled;
  bool critical_error = false;
};

/// Extra ratings, e.g. from human annotators: rater -> (question id, method,
/// criterion) -> score.
using RaterScores = std::map<std::string, std::map<std::tuple<std::string, std::string, Criterion>, int>>;

struct ReportOptions {
  double alpha = 0.05;
  RaterScores extra_raters;
};

/// Per method and criterion: mean, sd, n and pooling methods; critical error
/// counts; pairwise kappa between judges, the pooled jury and extra raters;
/// U and p per criterion between the first two methods.
nlohmann::json build_report(const std::vector<ScoredAnswer>& answers, const ReportOptions& options);

}  // namespace sqa
