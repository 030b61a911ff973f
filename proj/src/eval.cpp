#include "sqa/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <variant>

#include "sqa/error.hpp"
#include "sqa/prompts.hpp"
#include "sqa/search.hpp"

namespace sqa {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& m) { throw Error(ErrorCode::kInvalidInput, m); }

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      invalid(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::kCoverage: return "Coverage";
    case Criterion::kCoherence: return "Coherence";
    case Criterion::kVerifiability: return "Verifiability";
    case Criterion::kValidity: return "Validity";
  }
  return "?";
}

std::optional<Criterion> criterion_from_string(std::string_view s) {
  for (Criterion c : kAllCriteria) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::string_view to_string(PoolMethod m) {
  return m == PoolMethod::kConfidenceWeighted ? "confidence_weighted" : "majority_fallback";
}

std::string_view to_string(TestMethod m) {
  return m == TestMethod::kExact ? "exact" : "normal_approx";
}

Rubric rubric_from_json(const json& j) {
  if (!j.is_object() || !j.contains("criteria") || !j["criteria"].is_object()) {
    invalid("rubric must be an object with a \"criteria\" object");
  }
  const auto& cj = j["criteria"];
  if (cj.size() != 4) invalid("rubric must have exactly 4 criteria, got " + std::to_string(cj.size()));
  Rubric r;
  for (Criterion c : kAllCriteria) {
    auto it = cj.find(std::string(to_string(c)));
    if (it == cj.end()) invalid("rubric is missing criterion " + std::string(to_string(c)));
    if (!it->is_array() || it->size() != 5) {
      invalid("criterion " + std::string(to_string(c)) + " must have exactly 5 levels");
    }
    for (std::size_t i = 0; i < 5; ++i) {
      if (!(*it)[i].is_string() || (*it)[i].get<std::string>().empty()) {
        invalid("criterion " + std::string(to_string(c)) + " level " + std::to_string(i + 1) +
                " must be a non-empty string");
      }
      r.levels[static_cast<std::size_t>(c)][i] = (*it)[i].get<std::string>();
    }
  }
  return r;
}

Rubric load_rubric(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open " + path.string());
  try {
    return rubric_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    invalid(path.string() + ": " + e.what());
  }
}

PooledScore pool_jury(const std::vector<JudgeVerdict>& verdicts, double epsilon) {
  if (verdicts.empty()) invalid("pool_jury needs at least one verdict");
  PooledScore out;
  out.criterion = verdicts.front().criterion;
  std::map<int, double> sum;
  for (const auto& v : verdicts) {
    if (v.criterion != out.criterion) invalid("pool_jury verdicts span several criteria");
    sum[v.score] += v.confidence;
    ++out.votes[v.score];
  }
  for (const auto& [s, total] : sum) out.mean_confidence[s] = total / out.votes[s];

  if (out.mean_confidence.size() == 1) {
    out.score = out.mean_confidence.begin()->first;
    out.method = PoolMethod::kConfidenceWeighted;
    return out;
  }
  std::vector<std::pair<double, int>> ranked;
  for (const auto& [s, m] : out.mean_confidence) ranked.push_back({m, s});
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  // Means such as 0.8 - 0.75 land a rounding error below epsilon.
  if (ranked[0].first - ranked[1].first >= epsilon - 1e-9) {
    out.score = ranked[0].second;
    out.method = PoolMethod::kConfidenceWeighted;
    return out;
  }
  out.method = PoolMethod::kMajorityFallback;
  int best = 0;
  for (const auto& [s, n] : out.votes) {  // ascending score: ties keep the lower
    if (n > best) {
      best = n;
      out.score = s;
    }
  }
  return out;
}

AgreementResult weighted_kappa(const std::vector<int>& a, const std::vector<int>& b, int k) {
  if (a.size() != b.size()) invalid("rating lists differ in length");
  if (a.empty()) invalid("rating lists are empty");
  if (k < 1) invalid("category count must be positive");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 1 || a[i] > k || b[i] < 1 || b[i] > k) {
      invalid("rating out of range 1.." + std::to_string(k) + " at position " + std::to_string(i));
    }
  }
  AgreementResult r;
  r.k = k;
  if (k == 1) {
    r.kappa = 1.0;
    return r;
  }
  const auto K = static_cast<std::size_t>(k);
  const double n = static_cast<double>(a.size());
  std::vector<double> obs(K * K, 0.0), ma(K, 0.0), mb(K, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    obs[(a[i] - 1) * K + (b[i] - 1)] += 1.0 / n;
    ma[a[i] - 1] += 1.0 / n;
    mb[b[i] - 1] += 1.0 / n;
  }
  const double denom = static_cast<double>((k - 1) * (k - 1));
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      double d = static_cast<double>(i) - static_cast<double>(j);
      double w = d * d / denom;
      r.observed += w * obs[i * K + j];
      r.expected += w * ma[i] * mb[j];
    }
  }
  if (r.expected == 0.0) {
    if (r.observed == 0.0) r.kappa = 1.0;
    return r;
  }
  r.kappa = 1.0 - r.observed / r.expected;
  return r;
}

bool is_significant(double p_value, double alpha) { return p_value < alpha; }

double mann_whitney_exact_p(int n1, int n2, double u_x) {
  if (n1 < 1 || n2 < 1) invalid("empty sample");
  // f[m][n][u]: arrangements of m x-values and n y-values with U = u.
  const int umax = n1 * n2;
  std::vector<std::vector<std::vector<double>>> f(
      n1 + 1, std::vector<std::vector<double>>(n2 + 1));
  for (int m = 0; m <= n1; ++m) {
    for (int n = 0; n <= n2; ++n) {
      auto& cur = f[m][n];
      cur.assign(m * n + 1, 0.0);
      if (m == 0 || n == 0) {
        cur[0] = 1.0;
        continue;
      }
      // Largest value is an x (beats all n y's) or a y.
      const auto& a = f[m - 1][n];
      const auto& b = f[m][n - 1];
      for (int u = 0; u <= m * n; ++u) {
        double v = 0.0;
        if (u - n >= 0 && u - n < static_cast<int>(a.size())) v += a[u - n];
        if (u < static_cast<int>(b.size())) v += b[u];
        cur[u] = v;
      }
    }
  }
  const auto& dist = f[n1][n2];
  double total = 0.0, le = 0.0, ge = 0.0;
  for (int u = 0; u <= umax; ++u) {
    total += dist[u];
    if (u <= u_x) le += dist[u];
    if (u >= u_x) ge += dist[u];
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

namespace {

double normal_p(int n1, int n2, double u_x, double tie_term) {
  const double N = n1 + n2;
  const double mu = n1 * static_cast<double>(n2) / 2.0;
  const double var = n1 * static_cast<double>(n2) / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
  if (!(var > 0.0)) return 1.0;
  double z = std::max(0.0, std::abs(u_x - mu) - 0.5) / std::sqrt(var);
  double p = std::erfc(z / std::sqrt(2.0));
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

}  // namespace

double mann_whitney_normal_p(int n1, int n2, double u_x) { return normal_p(n1, n2, u_x, 0.0); }

StatTestResult mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y, double alpha) {
  if (x.empty() || y.empty()) invalid("Mann-Whitney needs two non-empty samples");
  const int n1 = static_cast<int>(x.size()), n2 = static_cast<int>(y.size());
  std::vector<std::pair<double, int>> all;
  for (double v : x) all.push_back({v, 0});
  for (double v : y) all.push_back({v, 1});
  std::sort(all.begin(), all.end());
  double r1 = 0.0, tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    double t = static_cast<double>(j - i);
    double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t q = i; q < j; ++q) {
      if (all[q].second == 0) r1 += midrank;
    }
    if (t > 1) {
      ties = true;
      tie_term += t * t * t - t;
    }
    i = j;
  }
  StatTestResult r;
  r.alpha = alpha;
  r.u_x = r1 - n1 * (n1 + 1.0) / 2.0;
  r.u_y = n1 * static_cast<double>(n2) - r.u_x;
  r.u = std::min(r.u_x, r.u_y);
  if (!ties && static_cast<double>(n1) * n2 <= kExactLimit) {
    r.method = TestMethod::kExact;
    r.p_value = mann_whitney_exact_p(n1, n2, r.u_x);
  } else {
    r.method = TestMethod::kNormalApprox;
    r.p_value = normal_p(n1, n2, r.u_x, tie_term);
  }
  r.significant = is_significant(r.p_value, alpha);
  return r;
}

namespace {

std::optional<JudgeVerdict> parse_verdict(const std::string& text, std::string* err) {
  auto j = extract_json_object(text);
  if (!j) {
    *err = "reply is not a JSON object";
    return std::nullopt;
  }
  auto s = j->find("score");
  auto c = j->find("confidence");
  if (s == j->end() || !s->is_number()) {
    *err = "score must be a number";
    return std::nullopt;
  }
  double sv = s->get<double>();
  if (sv != std::floor(sv) || sv < 1 || sv > 5) {
    *err = "score must be an integer from 1 to 5";
    return std::nullopt;
  }
  if (c == j->end() || !c->is_number()) {
    *err = "confidence must be a number";
    return std::nullopt;
  }
  double cv = c->get<double>();
  if (!(cv >= 0.0 && cv <= 1.0)) {
    *err = "confidence must be between 0 and 1";
    return std::nullopt;
  }
  JudgeVerdict v;
  v.score = static_cast<int>(sv);
  v.confidence = cv;
  return v;
}

}  // namespace

JudgeOutcome judge(const std::string& question, const std::string& answer, const Rubric& rubric,
                   const std::vector<std::string>& jury, Gateway& gateway, CallLog* log) {
  if (jury.empty()) invalid("jury is empty");
  using Result = std::variant<JudgeVerdict, Abstention>;
  std::vector<std::future<Result>> futures;
  for (const auto& profile : jury) {
    for (Criterion crit : kAllCriteria) {
      futures.push_back(std::async(std::launch::async, [&, profile, crit]() -> Result {
        ChatRequest req;
        req.purpose = "judge." + std::string(to_string(crit));
        req.system_prompt = prompts::judge_system();
        req.response_format = ResponseFormat::kJsonObject;
        std::string levels;
        for (int i = 0; i < 5; ++i) {
          levels += std::to_string(i + 1) + ": " + rubric.of(crit)[i] + "\n";
        }
        req.messages.push_back({Role::kUser, "Question: " + question + "\nAnswer:\n" + answer +
                                                 "\nCriterion: " + std::string(to_string(crit)) +
                                                 "\nLevels:\n" + levels});
        std::string err;
        for (int round = 0; round < 2; ++round) {
          std::string text;
          try {
            text = gateway.chat(profile, req, log).text;
          } catch (const Error& e) {
            if (e.code() == ErrorCode::kProviderUnavailable) return Abstention{profile, crit, e.what()};
            err = e.what();
          }
          if (!text.empty()) {
            if (auto v = parse_verdict(text, &err)) {
              v->judge = profile;
              v->criterion = crit;
              return *v;
            }
          }
          req.messages.push_back({Role::kAssistant, text});
          req.messages.push_back({Role::kUser, "Your reply was rejected: " + err +
                                                   ". Reply again with the JSON object only."});
        }
        return Abstention{profile, crit, err};
      }));
    }
  }
  JudgeOutcome out;
  for (auto& f : futures) {
    auto r = f.get();
    if (auto* v = std::get_if<JudgeVerdict>(&r)) {
      out.verdicts.push_back(*v);
    } else {
      out.abstentions.push_back(std::get<Abstention>(r));
    }
  }
  return out;
}

bool detect_critical_error(const RunTrace& trace, const QueryParams& oracle, const Corpus& corpus) {
  if (trace.ok_steps() > 0) return false;
  return article_search(corpus, build_query(oracle), 1, {}).total_matches >= 1;
}

std::string_view to_string(QuestionForm f) {
  switch (f) {
    case QuestionForm::kFactBased: return "FACT_BASED";
    case QuestionForm::kSingleIntent: return "SINGLE_INTENT";
    case QuestionForm::kUnion: return "UNION";
    case QuestionForm::kMultipleIntent: return "MULTIPLE_INTENT";
    case QuestionForm::kComparativeSuperlative: return "COMPARATIVE_SUPERLATIVE";
  }
  return "?";
}

std::optional<QuestionForm> question_form_from_string(std::string_view s) {
  for (auto f : {QuestionForm::kFactBased, QuestionForm::kSingleIntent, QuestionForm::kUnion,
                 QuestionForm::kMultipleIntent, QuestionForm::kComparativeSuperlative}) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

void to_json(json& j, const EvalQuestion& q) {
  j = {{"id", q.id}, {"question", q.question}, {"form", to_string(q.form)}, {"source", q.source}};
  if (!q.category.empty()) j["category"] = q.category;
}

EvalQuestion eval_question_from_json(const json& j) {
  if (!j.is_object()) invalid("question entry must be an object");
  EvalQuestion q;
  if (!j.contains("id") || !j.contains("question") || !j["question"].is_string()) {
    invalid("question entry needs \"id\" and \"question\": " + j.dump());
  }
  q.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
  q.question = j["question"];
  if (q.question.empty()) invalid("question " + q.id + " is empty");
  auto form = question_form_from_string(j.value("form", "FACT_BASED"));
  if (!form) invalid("question " + q.id + " has an unknown form");
  q.form = *form;
  q.source = j.value("source", "user");
  if (q.source != "user" && q.source != "dblp_quad") invalid("question " + q.id + " has an unknown source");
  q.category = j.value("category", "");
  return q;
}

std::vector<EvalQuestion> load_questions(const std::filesystem::path& path) {
  std::vector<EvalQuestion> out;
  for (const auto& j : read_jsonl(path)) out.push_back(eval_question_from_json(j));
  return out;
}

QueryParams query_params_from_json(const json& j) {
  if (!j.is_object()) invalid("query params must be an object");
  QueryParams p;
  for (const auto& f : j.value("filters", json::array())) {
    EntityFilter ef;
    auto t = entity_type_from_string(f.at("type").get<std::string>());
    if (!t) invalid("unknown entity type in " + f.dump());
    ef.type = *t;
    ef.id = f.at("id").get<std::string>();
    ef.negate = f.value("negate", false);
    ef.required = f.value("required", false);
    p.entity_filters.push_back(std::move(ef));
  }
  if (j.contains("year_range") && !j["year_range"].is_null()) {
    p.year_range = YearRange{j["year_range"].at("min").get<int>(), j["year_range"].at("max").get<int>()};
  }
  std::string conn = j.value("connective", "AND");
  if (conn != "AND" && conn != "OR") invalid("connective must be AND or OR");
  p.connective = conn == "AND" ? Connective::kAnd : Connective::kOr;
  p.limit = j.value("limit", 10);
  for (const auto& m : j.value("metrics", json::array())) {
    auto am = article_metric_from_string(m.get<std::string>());
    if (!am) invalid("unknown article metric " + m.dump());
    p.metrics.push_back(*am);
  }
  for (const auto& a : j.value("article_ids", json::array())) p.article_ids.push_back(a.get<std::string>());
  return p;
}

std::map<std::string, QueryParams> load_oracles(const std::filesystem::path& path) {
  std::map<std::string, QueryParams> out;
  for (const auto& j : read_jsonl(path)) {
    if (!j.contains("id") || !j.contains("params")) invalid("oracle entry needs \"id\" and \"params\"");
    std::string id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    out[id] = query_params_from_json(j["params"]);
  }
  return out;
}

std::optional<std::string> dblp_category(std::string_view label) {
  std::string norm;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      norm += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    } else if (!norm.empty() && norm.back() != '_') {
      norm += '_';
    }
  }
  while (!norm.empty() && norm.back() == '_') norm.pop_back();
  if (norm == "SINGLE_FACT") return "single_fact";
  if (norm == "MULTI_FACT") return "multi_fact";
  if (norm == "DOUBLE_INTENT") return "double_intent";
  if (norm == "UNION") return "union";
  if (norm.find("COMPARATIVE") != std::string::npos || norm.find("SUPERLATIVE") != std::string::npos) {
    return "comparative_superlative";
  }
  return std::nullopt;
}

namespace {

QuestionForm form_of_category(const std::string& cat) {
  if (cat == "single_fact" || cat == "multi_fact") return QuestionForm::kFactBased;
  if (cat == "double_intent") return QuestionForm::kMultipleIntent;
  if (cat == "union") return QuestionForm::kUnion;
  return QuestionForm::kComparativeSuperlative;
}

std::string text_of(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_object() && v.contains("string") && v["string"].is_string()) return v["string"];
  return {};
}

std::vector<json> read_dblp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kSampling, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string body = ss.str();
  auto first = body.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && body[first] == '{') {
    try {
      json doc = json::parse(body);
      if (doc.contains("questions") && doc["questions"].is_array()) {
        return doc["questions"].get<std::vector<json>>();
      }
    } catch (const json::parse_error&) {
      // fall through to JSONL
    }
  }
  return read_jsonl(path);
}

}  // namespace

std::vector<EvalQuestion> sample_dataset(const std::filesystem::path& path, int per_category,
                                         std::uint64_t seed,
                                         const std::vector<std::string>& excluded_templates) {
  if (per_category < 0) throw Error(ErrorCode::kSampling, "per_category must be non-negative");
  if (per_category == 0) return {};
  std::set<std::string> excluded(excluded_templates.begin(), excluded_templates.end());
  std::map<std::string, std::vector<EvalQuestion>> pool;
  for (const auto& j : read_dblp(path)) {
    if (!j.is_object()) continue;
    std::string label = j.contains("query_type") ? text_of(j["query_type"]) : text_of(j.value("category", json()));
    auto cat = dblp_category(label);
    if (!cat) continue;
    if (j.contains("template_id")) {
      const auto& t = j["template_id"];
      if (excluded.count(t.is_string() ? t.get<std::string>() : t.dump())) continue;
    }
    EvalQuestion q;
    q.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump()) : "";
    q.question = j.contains("question") ? text_of(j["question"]) : "";
    if (q.id.empty() || q.question.empty()) continue;
    q.form = form_of_category(*cat);
    q.source = "dblp_quad";
    q.category = *cat;
    pool[*cat].push_back(std::move(q));
  }
  std::mt19937_64 rng(seed);
  std::vector<EvalQuestion> out;
  for (const char* cat : kDblpCategories) {
    auto& qs = pool[cat];
    if (static_cast<int>(qs.size()) < per_category) {
      throw Error(ErrorCode::kSampling, "category " + std::string(cat) + " has " +
                                            std::to_string(qs.size()) + " questions, " +
                                            std::to_string(per_category) + " requested");
    }
    std::sort(qs.begin(), qs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (int i = 0; i < per_category; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, qs.size() - 1);
      std::swap(qs[i], qs[pick(rng)]);
      out.push_back(qs[i]);
    }
  }
  return out;
}

namespace {

json mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {{"n", 0}, {"mean", nullptr}, {"sd", nullptr}};
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return {{"n", v.size()}, {"mean", mean}, {"sd", sd}};
}

}  // namespace

json build_report(const std::vector<ScoredAnswer>& answers, const ReportOptions& options) {
  std::vector<std::string> methods;
  for (const auto& a : answers) {
    if (std::find(methods.begin(), methods.end(), a.method) == methods.end()) methods.push_back(a.method);
  }
  // Prefer the workflow-vs-baseline ordering when both are present.
  std::stable_sort(methods.begin(), methods.end(), [](const auto& a, const auto& b) {
    auto rank = [](const std::string& m) { return m == "workflow" ? 0 : m == "baseline" ? 1 : 2; };
    return rank(a) < rank(b);
  });

  json report;
  report["answers"] = answers.size();
  json scores = json::object();
  json critical = json::object();
  for (const auto& m : methods) {
    json per = json::object();
    for (Criterion c : kAllCriteria) {
      std::vector<double> v;
      std::map<std::string, int> how;
      int abstentions = 0;
      for (const auto& a : answers) {
        if (a.method != m) continue;
        for (const auto& ab : a.outcome.abstentions) abstentions += ab.criterion == c;
        auto it = a.pooled.find(c);
        if (it == a.pooled.end()) continue;
        v.push_back(it->second.score);
        ++how[std::string(to_string(it->second.method))];
      }
      json e = mean_sd(v);
      e["pooling"] = how;
      e["abstentions"] = abstentions;
      per[std::string(to_string(c))] = e;
    }
    scores[m] = per;
    int count = 0, total = 0;
    for (const auto& a : answers) {
      if (a.method != m) continue;
      ++total;
      count += a.critical_error;
    }
    critical[m] = {{"count", count}, {"total", total}};
  }
  report["scores"] = scores;
  report["critical_errors"] = critical;

  // Raters: each judge, the pooled jury and any extra raters.
  RaterScores raters = options.extra_raters;
  for (const auto& a : answers) {
    for (const auto& v : a.outcome.verdicts) raters[v.judge][{a.question_id, a.method, v.criterion}] = v.score;
    for (const auto& [c, p] : a.pooled) raters["jury"][{a.question_id, a.method, c}] = p.score;
  }
  json kappa = json::object();
  for (Criterion c : kAllCriteria) {
    json rows = json::array();
    for (auto i = raters.begin(); i != raters.end(); ++i) {
      for (auto j = std::next(i); j != raters.end(); ++j) {
        std::vector<int> ra, rb;
        for (const auto& [key, s] : i->second) {
          if (std::get<2>(key) != c) continue;
          auto o = j->second.find(key);
          if (o == j->second.end()) continue;
          ra.push_back(s);
          rb.push_back(o->second);
        }
        json row{{"a", i->first}, {"b", j->first}, {"n", ra.size()}, {"kappa", nullptr}};
        if (!ra.empty()) {
          auto r = weighted_kappa(ra, rb, 5);
          if (r.kappa) row["kappa"] = *r.kappa;
        }
        rows.push_back(row);
      }
    }
    kappa[std::string(to_string(c))] = rows;
  }
  report["kappa"] = kappa;

  json sig = json::object();
  if (methods.size() >= 2) {
    sig["x"] = methods[0];
    sig["y"] = methods[1];
    for (Criterion c : kAllCriteria) {
      std::vector<double> x, y;
      for (const auto& a : answers) {
        auto it = a.pooled.find(c);
        if (it == a.pooled.end()) continue;
        if (a.method == methods[0]) x.push_back(it->second.score);
        if (a.method == methods[1]) y.push_back(it->second.score);
      }
      if (x.empty() || y.empty()) {
        sig[std::string(to_string(c))] = nullptr;
        continue;
      }
      auto r = mann_whitney_u(x, y, options.alpha);
      sig[std::string(to_string(c))] = {{"U", r.u},         {"p", r.p_value},
                                        {"alpha", r.alpha}, {"significant", r.significant},
                                        {"method", to_string(r.method)}, {"n_x", x.size()},
                                        {"n_y", y.size()}};
    }
  }
  report["significance"] = sig;
  return report;
}

}  // namespace sqa
