#include "sqa/service.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "sqa/error.hpp"
#include "sqa/planner.hpp"

namespace sqa {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::int64_t AnswerEnvelope::wall_us() const {
  std::int64_t hi = 0;
  for (const auto& s : spans) hi = std::max(hi, s.end_us);
  return hi;
}

json AnswerEnvelope::to_json(bool with_timings) const {
  json refs = json::array();
  for (const auto& l : response.references) refs.push_back({{"text", l.text}, {"type", l.type}, {"id", l.id}});
  json charts_j = json::array();
  for (const auto& c : charts) charts_j.push_back(c);

  std::size_t ok = 0, empty = 0, failed = 0;
  for (const auto& [id, s] : trace.steps) {
    ok += s.status == StepStatus::kOk;
    empty += s.status == StepStatus::kEmpty;
    failed += s.status == StepStatus::kFailed;
  }
  auto totals = trace.calls.totals();
  json summary{{"steps", {{"ok", ok}, {"empty", empty}, {"failed", failed}}},
               {"model_calls", trace.calls.records().size()},
               {"tokens",
                {{"prompt", totals.prompt_tokens},
                 {"completion", totals.completion_tokens},
                 {"total", totals.prompt_tokens + totals.completion_tokens}}},
               {"has_plan", trace.plan.has_value()},
               {"warnings", warnings}};
  if (with_timings) {
    summary["wall_ms"] = static_cast<double>(wall_us()) / 1000.0;
    json mods = json::array();
    for (const auto& s : spans) {
      mods.push_back({{"name", s.name}, {"ms", static_cast<double>(s.end_us - s.start_us) / 1000.0}});
    }
    summary["modules"] = mods;
  }
  json j{{"run_id", run_id},
         {"question", question},
         {"mode", mode},
         {"answer", response.markdown},
         {"references", refs},
         {"audit", response.audit},
         {"no_data", response.no_data},
         {"charts", charts_j},
         {"trace_summary", summary}};
  if (plot_decision) j["plot_decision"] = *plot_decision;
  return j;
}

std::string AnswerEnvelope::to_text() const {
  std::ostringstream o;
  o << response.markdown;
  if (!response.markdown.empty() && response.markdown.back() != '\n') o << '\n';
  if (!charts.empty()) {
    o << "\nCharts:\n";
    for (const auto& c : charts) o << "- " << c.title << " (" << c.chart_type << ")\n";
  }
  if (!warnings.empty()) {
    o << "\nWarnings:\n";
    for (const auto& w : warnings) o << "- " << w << '\n';
  }
  auto totals = trace.calls.totals();
  o << "\nrun " << run_id << " | mode " << mode << " | steps " << trace.steps.size() << " ok "
    << trace.ok_steps() << " | tokens " << totals.prompt_tokens + totals.completion_tokens
    << " | links " << response.audit.resolved_refs << '/' << response.audit.total_refs << '\n';
  return o.str();
}

Pipeline::Pipeline(const Corpus& corpus, const EntityResolver& resolver, Gateway& gateway,
                   PipelineOptions options)
    : corpus_(corpus), resolver_(resolver), gateway_(gateway), options_(std::move(options)),
      backend_(corpus) {}

std::string Pipeline::run_id(const std::string& question, const std::string& mode) const {
  std::string key = question + '\x1f' + mode + '\x1f' + corpus_.digest();
  for (const auto& name : {options_.utility_profile, options_.planner_profile}) {
    key += '\x1f' + name;
    auto it = gateway_.config().profiles.find(name);
    if (it != gateway_.config().profiles.end()) {
      key += ':' + it->second.kind + ':' + it->second.model_id + ':' + it->second.script.string();
    }
  }
  return fnv1a_hex(key);
}

namespace {

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

AnswerEnvelope Pipeline::answer(const std::string& question, const std::string& mode) {
  if (blank(question)) throw Error(ErrorCode::kInvalidInput, "question is empty");
  if (mode != "workflow" && mode != "baseline") {
    throw Error(ErrorCode::kInvalidInput, "mode must be workflow or baseline");
  }
  AnswerEnvelope env;
  env.question = question;
  env.mode = mode;
  env.run_id = run_id(question, mode);

  const auto t0 = Clock::now();
  auto since = [&] {
    return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count();
  };
  auto span = [&](const std::string& name, auto&& body) {
    ModuleSpan s{name, since(), 0};
    body();
    s.end_us = since();
    env.spans.push_back(s);
  };
  auto degrade = [&](const std::string& stage, const Error& e) {
    if (e.code() == ErrorCode::kProviderUnavailable) throw e;
    env.warnings.push_back(stage + " failed: " + e.what());
  };

  RunTrace& trace = env.trace;
  trace.mode = mode;
  trace.question = question;

  if (mode == "baseline") {
    span("execute", [&] {
      trace = run_baseline(question, gateway_, backend_, nullptr, options_.utility_profile);
    });
  } else {
    CallLog planning;
    std::optional<Plan> plan;
    span("plan", [&] {
      try {
        HlpmResult h = hlpm(question, gateway_, resolver_, &planning, options_.utility_profile);
        for (const auto& w : h.tagged.warnings) env.warnings.push_back(w);
        plan = dpm(h, gateway_, corpus_, &planning, options_.planner_profile);
      } catch (const Error& e) {
        degrade("planning", e);
      }
    });
    span("execute", [&] {
      if (plan) {
        Executor ex(corpus_, resolver_, backend_, &gateway_, options_.executor);
        trace = ex.execute(*plan, nullptr);
      }
      trace.mode = mode;
      trace.question = question;
      trace.calls.merge(planning);
    });
  }
  for (const auto& [id, s] : trace.steps) {
    if (s.status == StepStatus::kFailed) {
      env.warnings.push_back("step " + std::to_string(id) + " failed: " + s.error);
    }
    for (const auto& w : s.warnings) env.warnings.push_back("step " + std::to_string(id) + ": " + w);
  }
  for (const auto& w : trace.warnings) env.warnings.push_back(w);

  span("compose", [&] {
    try {
      env.response = compose(question, trace, gateway_, corpus_, &trace.calls, options_.utility_profile);
    } catch (const Error& e) {
      degrade("composition", e);
      env.response = {};
      env.response.markdown = no_data_markdown(question);
      env.response.no_data = true;
    }
  });

  if (mode == "workflow" && options_.charts && !env.response.no_data) {
    span("visualize", [&] {
      env.plot_decision = decide_plots(question, env.response.markdown, trace, gateway_, &trace.calls,
                                       &env.warnings, options_.utility_profile);
      ChartRun cr = generate_charts(*env.plot_decision, question, trace, gateway_, &trace.calls,
                                    options_.utility_profile);
      env.charts = std::move(cr.charts);
      for (auto& w : cr.warnings) env.warnings.push_back(std::move(w));
    });
  }
  trace.wall_us = env.wall_us();
  spdlog::debug("run {} mode {} steps {} ok {} in {} us", env.run_id, mode, trace.steps.size(),
               trace.ok_steps(), env.wall_us());
  return env;
}

void RunStore::put(const AnswerEnvelope& env) {
  json j = env.trace.to_json(true);
  j["run_id"] = env.run_id;
  j["envelope"] = env.to_json(true);
  std::lock_guard lock(mu_);
  traces_[env.run_id] = std::move(j);
}

std::optional<json> RunStore::trace(const std::string& run_id) const {
  std::lock_guard lock(mu_);
  auto it = traces_.find(run_id);
  if (it == traces_.end()) return std::nullopt;
  return std::optional<json>(std::in_place, it->second);
}

std::size_t RunStore::size() const {
  std::lock_guard lock(mu_);
  return traces_.size();
}

json resolve_entities(const EntityResolver& resolver, const std::string& q, const std::string& type, int k) {
  std::vector<EntityType> types;
  if (type.empty()) {
    types.assign(kAllEntityTypes.begin(), kAllEntityTypes.end());
  } else {
    auto t = entity_type_from_string(type);
    if (!t) throw Error(ErrorCode::kInvalidInput, "unknown entity type " + type);
    types.push_back(*t);
  }
  if (k < 1) throw Error(ErrorCode::kInvalidInput, "k must be positive");
  std::vector<Candidate> all;
  for (EntityType t : types) {
    auto r = resolver.resolve(q, t, k);
    all.insert(all.end(), r.candidates.begin(), r.candidates.end());
  }
  std::stable_sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.entity.type != b.entity.type) return a.entity.type < b.entity.type;
    return a.entity.id < b.entity.id;
  });
  if (static_cast<int>(all.size()) > k) all.resize(k);
  json cands = json::array();
  for (const auto& c : all) {
    cands.push_back({{"id", c.entity.id},
                     {"type", to_string(c.entity.type)},
                     {"name", c.entity.name},
                     {"score", c.score},
                     {"exact", c.exact},
                     {"link", std::string(link_prefix(c.entity.type)) + "/" + c.entity.id}});
  }
  return {{"query", q}, {"candidates", cands}};
}

struct Server::Impl {
  Pipeline& pipeline;
  RunStore& store;
  httplib::Server http;

  Impl(Pipeline& p, RunStore& s) : pipeline(p), store(s) {}
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& msg) {
  send_json(res, status, {{"error", {{"code", code}, {"message", msg}}}});
}

int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInvalidInput: return 400;
    case ErrorCode::kProviderUnavailable: return 503;
    default: return 500;
  }
}

}  // namespace

Server::Server(Pipeline& pipeline, RunStore& store) : impl_(std::make_unique<Impl>(pipeline, store)) {
  auto& http = impl_->http;
  Impl* self = impl_.get();

  http.Get("/healthz", [self](const httplib::Request&, httplib::Response& res) {
    const auto& c = self->pipeline.corpus();
    send_json(res, 200, {{"status", "ok"}, {"articles", c.stats().articles}, {"corpus_digest", c.digest()},
                         {"runs", self->store.size()}});
  });

  http.Post("/v1/answer", [self](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      return send_error(res, 400, std::string(to_string(ErrorCode::kInvalidInput)), std::string("body is not JSON: ") + e.what());
    }
    if (!body.is_object() || !body.contains("question") || !body["question"].is_string()) {
      return send_error(res, 400, std::string(to_string(ErrorCode::kInvalidInput)), "body needs a string \"question\"");
    }
    std::string mode = "workflow";
    if (body.contains("mode")) {
      if (!body["mode"].is_string()) return send_error(res, 400, std::string(to_string(ErrorCode::kInvalidInput)), "mode must be a string");
      mode = body["mode"];
    }
    try {
      AnswerEnvelope env = self->pipeline.answer(body["question"], mode);
      self->store.put(env);
      send_json(res, 200, env.to_json(true));
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), std::string(to_string(e.code())), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  });

  http.Get(R"(/v1/runs/([0-9a-f]+)/trace)", [self](const httplib::Request& req, httplib::Response& res) {
    auto t = self->store.trace(req.matches[1]);
    if (!t) return send_error(res, 404, "not-found", "no run " + std::string(req.matches[1]));
    send_json(res, 200, *t);
  });

  http.Get("/v1/entities/resolve", [self](const httplib::Request& req, httplib::Response& res) {
    std::string q = req.get_param_value("q");
    if (blank(q)) return send_error(res, 400, std::string(to_string(ErrorCode::kInvalidInput)), "parameter q is required");
    int k = 5;
    if (req.has_param("k")) {
      try {
        k = std::stoi(req.get_param_value("k"));
      } catch (const std::exception&) {
        return send_error(res, 400, std::string(to_string(ErrorCode::kInvalidInput)), "k must be an integer");
      }
    }
    try {
      send_json(res, 200, resolve_entities(self->pipeline.resolver(), q, req.get_param_value("type"), k));
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), std::string(to_string(e.code())), e.what());
    }
  });
}

Server::~Server() = default;

int Server::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  if (!impl_->http.bind_to_port(host, port)) {
    throw Error(ErrorCode::kConfig, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void Server::listen() { impl_->http.listen_after_bind(); }

void Server::stop() { impl_->http.stop(); }

EvalRun run_evaluation(Pipeline& pipeline, const std::vector<EvalQuestion>& questions,
                       const std::map<std::string, QueryParams>& oracles, const Rubric& rubric,
                       const EvalOptions& options) {
  if (options.jury.empty()) throw Error(ErrorCode::kInvalidInput, "jury is empty");
  EvalRun run;
  for (const auto& q : questions) {
    for (const auto& mode : options.modes) {
      AnswerEnvelope env = pipeline.answer(q.question, mode);
      ScoredAnswer a;
      a.question_id = q.id;
      a.method = mode;
      a.outcome = judge(q.question, env.response.markdown, rubric, options.jury, pipeline.gateway());
      for (Criterion c : kAllCriteria) {
        std::vector<JudgeVerdict> vs;
        for (const auto& v : a.outcome.verdicts) {
          if (v.criterion == c) vs.push_back(v);
        }
        if (!vs.empty()) a.pooled[c] = pool_jury(vs, options.epsilon);
      }
      if (auto it = oracles.find(q.id); it != oracles.end()) {
        a.critical_error = detect_critical_error(env.trace, it->second, pipeline.corpus());
      }
      run.answers.push_back(std::move(a));
    }
  }
  run.report = build_report(run.answers, options.report);
  run.report["epsilon"] = options.epsilon;
  run.report["jury"] = options.jury;
  return run;
}

}  // namespace sqa
