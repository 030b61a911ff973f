#include "sqa/executor.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <random>
#include <regex>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "sqa/error.hpp"
#include "sqa/prompts.hpp"
#include "sqa/schema.hpp"

namespace sqa {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string_view to_string(StepStatus s) {
  switch (s) {
    case StepStatus::kOk: return "ok";
    case StepStatus::kEmpty: return "empty";
    case StepStatus::kFailed: return "failed";
  }
  return "failed";
}

std::size_t StepPayload::rows() const {
  if (articles) return articles->rows.size();
  if (facets) return facets->rows.size();
  return 0;
}

json StepPayload::to_json() const {
  if (articles) return json(*articles);
  if (facets) return json(*facets);
  return nullptr;
}

json StepResult::to_json(bool with_timings) const {
  json j{{"id", step_id},
         {"tool", tool},
         {"subtask", subtask},
         {"depends_on", depends_on},
         {"status", to_string(status)},
         {"params", params},
         {"assembled_query", assembled_query},
         {"llm_inferred", llm_inferred},
         {"warnings", warnings}};
  if (payload.has_value()) j["payload"] = payload.to_json();
  if (!error.empty()) j["error"] = error;
  if (!cause_chain.empty()) j["cause_chain"] = cause_chain;
  if (with_timings) {
    j["timing"] = {{"start_ms", start_us / 1000},
                   {"end_ms", end_us / 1000},
                   {"duration_ms", (end_us - start_us) / 1000}};
  }
  return j;
}

std::size_t RunTrace::ok_steps() const {
  return static_cast<std::size_t>(std::count_if(
      steps.begin(), steps.end(), [](const auto& kv) { return kv.second.status == StepStatus::kOk; }));
}

json RunTrace::to_json(bool with_timings) const {
  json j{{"mode", mode}, {"question", question}};
  j["plan"] = plan ? sqa::to_json(*plan) : json(nullptr);
  j["steps"] = json::array();
  for (const auto& [id, s] : steps) j["steps"].push_back(s.to_json(with_timings));
  j["usage"] = calls.to_json(with_timings);
  j["warnings"] = warnings;
  if (with_timings) j["wall_ms"] = wall_us / 1000;
  return j;
}

StepPayload LocalToolBackend::invoke(const std::string& tool, const AssembledQuery& q) {
  StepPayload p;
  if (tool == prompts::kArticleSearch) {
    p.articles = article_search(corpus_, q.ast, q.params.limit, q.params.metrics);
  } else if (tool == prompts::kFacetedSearch) {
    if (!q.facet) throw Error(ErrorCode::kInvalidFacet, "faceted search without a facet");
    p.facets = faceted_article_search(corpus_, q.ast, *q.facet);
  } else {
    throw Error(ErrorCode::kInvalidTool, "unknown tool \"" + tool + "\"");
  }
  return p;
}

// ---------------------------------------------------------------------------
// Placeholders

namespace {

json resolve_path(int k, const std::string& path, const std::map<int, StepResult>& prior) {
  auto it = prior.find(k);
  if (it == prior.end()) throw InferenceNeeded("step " + std::to_string(k) + " has no result");
  const StepResult& r = it->second;
  if (r.status == StepStatus::kFailed) {
    throw Error(ErrorCode::kEmptyDependency, "dependency " + std::to_string(k) + " failed");
  }
  const StepPayload& p = r.payload;
  bool known = (p.facets && (path == "top_entity_id" || path == "entity_ids")) ||
               (p.articles && (path == "top_article_id" || path == "article_ids"));
  if (!known) {
    throw InferenceNeeded("$step" + std::to_string(k) + "." + path + " is not a payload field");
  }
  if (p.rows() == 0) {
    throw Error(ErrorCode::kEmptyDependency,
                "$step" + std::to_string(k) + "." + path + ": step " + std::to_string(k) + " returned no rows");
  }
  if (path == "top_entity_id") return p.facets->rows[0].id;
  if (path == "top_article_id") return p.articles->rows[0].id;
  json ids = json::array();
  if (p.facets) {
    for (const auto& row : p.facets->rows) ids.push_back(row.id);
  } else {
    for (const auto& row : p.articles->rows) ids.push_back(row.id);
  }
  return ids;
}

json substitute(const json& v, const std::map<int, StepResult>& prior) {
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (!is_placeholder(s)) return v;
    auto dot = s.find('.');
    int k = std::stoi(s.substr(5, dot - 5));
    return resolve_path(k, s.substr(dot + 1), prior);
  }
  if (v.is_array()) {
    json out = json::array();
    for (const auto& x : v) {
      json y = substitute(x, prior);
      // A list placeholder inside a list is spliced in.
      if (y.is_array() && x.is_string()) {
        for (auto& z : y) out.push_back(std::move(z));
      } else {
        out.push_back(std::move(y));
      }
    }
    return out;
  }
  if (v.is_object()) {
    json out = json::object();
    for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = substitute(it.value(), prior);
    return out;
  }
  return v;
}

}  // namespace

json substitute_placeholders(const PlanStep& step, const std::map<int, StepResult>& prior) {
  json params = substitute(step.params, prior);
  if (params.contains("filters") && params["filters"].is_array()) {
    json expanded = json::array();
    for (const auto& f : params["filters"]) {
      if (f.is_object() && f.contains("id") && f["id"].is_array()) {
        for (const auto& id : f["id"]) {
          json g = f;
          g["id"] = id;
          expanded.push_back(std::move(g));
        }
      } else {
        expanded.push_back(f);
      }
    }
    params["filters"] = std::move(expanded);
  }
  return params;
}

// ---------------------------------------------------------------------------
// Executor

Executor::Executor(const Corpus& corpus, const EntityResolver& resolver, ToolBackend& backend,
                   Gateway* gateway, ExecutorOptions options)
    : corpus_(corpus), resolver_(resolver), backend_(backend), gateway_(gateway), options_(std::move(options)) {
  if (options_.max_concurrency < 1) throw Error(ErrorCode::kInvalidInput, "max_concurrency must be positive");
}

namespace {

json digest(const StepResult& r) {
  json rows = json::array();
  json payload = r.payload.to_json();
  if (payload.is_object() && payload.contains("rows")) {
    for (std::size_t i = 0; i < payload["rows"].size() && i < 20; ++i) rows.push_back(payload["rows"][i]);
  }
  return {{"step", r.step_id}, {"tool", r.tool}, {"query", r.assembled_query}, {"rows", rows}};
}

}  // namespace

StepResult Executor::run_step(const PlanStep& step, const std::map<int, StepResult>& prior,
                              CallLog* log) const {
  StepResult res;
  res.step_id = step.id;
  res.tool = step.tool;
  res.subtask = step.subtask;
  res.depends_on = step.depends_on;
  res.params = step.params;
  const bool facet = step.tool == prompts::kFacetedSearch;
  try {
    if (prompts::find_tool(step.tool) == nullptr) {
      throw Error(ErrorCode::kInvalidTool, "unknown tool \"" + step.tool + "\"");
    }
    try {
      res.params = substitute_placeholders(step, prior);
    } catch (const InferenceNeeded& need) {
      if (gateway_ == nullptr) throw Error(ErrorCode::kProviderUnavailable, std::string(need.what()) + "; no model configured");
      res.warnings.push_back(std::string(need.what()) + "; parameters inferred by the model");
      json context = json::array();
      for (int d : step.depends_on) {
        if (auto it = prior.find(d); it != prior.end()) context.push_back(digest(it->second));
      }
      ChatRequest req;
      req.purpose = "step" + std::to_string(step.id) + ".tool_call";
      req.system_prompt = prompts::dependent_step_system();
      req.messages.push_back({Role::kUser, "Step " + std::to_string(step.id) + ": " + step.subtask +
                                               "\nTool: " + step.tool +
                                               "\nDraft parameters: " + step.params.dump() +
                                               "\nResults of earlier steps:\n" + context.dump()});
      req.tool_schemas.push_back(*prompts::find_tool(step.tool));
      ToolInvocation inv = gateway_->tool_call(options_.profile, req, log);
      res.params = inv.arguments;
      res.llm_inferred = true;
    }
    AssembledQuery q = build_query(res.params, corpus_, resolver_, facet);
    res.assembled_query = q.query_string;
    for (auto& w : q.repair_log) res.warnings.push_back(std::move(w));
    res.payload = backend_.invoke(step.tool, q);
    res.status = res.payload.rows() == 0 ? StepStatus::kEmpty : StepStatus::kOk;
  } catch (const std::exception& e) {
    res.status = StepStatus::kFailed;
    res.error = e.what();
    res.payload = {};
  }
  return res;
}

RunTrace Executor::execute(const Plan& plan, CallLog* log) const {
  RunTrace trace;
  trace.mode = "workflow";
  trace.plan = plan;
  const auto t0 = Clock::now();
  auto now_us = [&] {
    return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count();
  };

  const std::size_t n = plan.steps.size();
  std::map<int, std::size_t> pos;
  for (std::size_t i = 0; i < n; ++i) pos.emplace(plan.steps[i].id, i);

  std::mutex mu;
  std::condition_variable cv;
  std::vector<int> state(n, 0);  // 0 waiting, 1 queued/running, 2 done
  std::deque<std::size_t> ready;
  std::size_t finished = 0;
  std::size_t running = 0;
  std::map<int, StepResult>& results = trace.steps;
  std::mt19937_64 pick_rng(options_.jitter_seed.value_or(0));

  auto fail_unrunnable = [&](std::size_t i, std::string error, std::vector<std::string> chain) {
    StepResult r;
    const PlanStep& s = plan.steps[i];
    r.step_id = s.id;
    r.tool = s.tool;
    r.subtask = s.subtask;
    r.depends_on = s.depends_on;
    r.params = s.params;
    r.error = std::move(error);
    r.cause_chain = std::move(chain);
    r.start_us = r.end_us = now_us();
    results[s.id] = std::move(r);
    state[i] = 2;
    ++finished;
  };

  // Called with `mu` held: queue steps whose dependencies are all final and
  // fail those behind a failed dependency, until nothing changes.
  auto promote = [&] {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (state[i] != 0) continue;
        const PlanStep& s = plan.steps[i];
        bool all_done = true;
        std::optional<int> failed_dep;
        std::optional<int> missing;
        for (int d : s.depends_on) {
          auto p = pos.find(d);
          if (p == pos.end() || d == s.id) {
            missing = d;
            break;
          }
          if (state[p->second] != 2) {
            all_done = false;
            continue;
          }
          if (results[d].status == StepStatus::kFailed && !failed_dep) failed_dep = d;
        }
        if (missing) {
          fail_unrunnable(i, "dependency " + std::to_string(*missing) + " does not exist", {});
          changed = true;
        } else if (failed_dep) {
          const StepResult& up = results[*failed_dep];
          std::vector<std::string> chain{up.error};
          chain.insert(chain.end(), up.cause_chain.begin(), up.cause_chain.end());
          fail_unrunnable(i, "dependency " + std::to_string(*failed_dep) + " failed", std::move(chain));
          changed = true;
        } else if (all_done) {
          state[i] = 1;
          ready.push_back(i);
          changed = true;
        }
      }
    }
  };

  {
    std::lock_guard lock(mu);
    promote();
  }

  auto worker = [&] {
    std::unique_lock lock(mu);
    while (true) {
      cv.wait(lock, [&] { return !ready.empty() || finished == n || running == 0; });
      if (finished == n) return;
      if (ready.empty()) {
        // Nothing running and nothing ready: whatever is left can never run.
        for (std::size_t k = 0; k < n; ++k) {
          if (state[k] == 0) fail_unrunnable(k, "step could not be scheduled", {});
        }
        cv.notify_all();
        return;
      }
      std::size_t i;
      if (options_.jitter_seed) {
        std::uniform_int_distribution<std::size_t> d(0, ready.size() - 1);
        auto k = d(pick_rng);
        i = ready[k];
        ready.erase(ready.begin() + static_cast<std::ptrdiff_t>(k));
      } else {
        i = ready.front();
        ready.pop_front();
      }
      ++running;
      const PlanStep& s = plan.steps[i];
      std::map<int, StepResult> prior;
      for (int d : s.depends_on) prior.emplace(d, results.at(d));
      lock.unlock();

      if (options_.jitter_seed) {
        std::mt19937_64 rng(*options_.jitter_seed ^ (static_cast<std::uint64_t>(s.id) * 0x9e3779b97f4a7c15ULL));
        std::uniform_int_distribution<int> d(0, options_.max_jitter_us);
        std::this_thread::sleep_for(std::chrono::microseconds(d(rng)));
      }
      auto start = now_us();
      StepResult r = run_step(s, prior, &trace.calls);
      r.start_us = start;
      r.end_us = now_us();
      spdlog::debug("step {} {} in {} us", s.id, to_string(r.status), r.end_us - r.start_us);

      lock.lock();
      results[s.id] = std::move(r);
      state[i] = 2;
      ++finished;
      --running;
      promote();
      cv.notify_all();
    }
  };

  // Steps on a cycle never become ready; fail them up front.
  {
    std::lock_guard lock(mu);
    auto report = validate_plan(plan);
    std::set<int> cyclic;
    for (const auto& v : report.violations) {
      if (v.rule == rules::kCycle) cyclic.insert(v.step);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i] == 0 && cyclic.count(plan.steps[i].id)) {
        fail_unrunnable(i, "step is part of a dependency cycle", {});
      }
    }
    promote();
  }

  const int threads = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(options_.max_concurrency)));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  trace.wall_us = now_us();
  if (log) log->merge(trace.calls);
  return trace;
}

// ---------------------------------------------------------------------------
// Baseline

RunTrace run_baseline(const std::string& question, Gateway& gateway, ToolBackend& backend,
                      CallLog* log, const std::string& profile) {
  if (question.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::kInvalidInput, "question is empty");
  }
  RunTrace trace;
  trace.mode = "baseline";
  trace.question = question;
  const auto t0 = Clock::now();
  auto now_us = [&] {
    return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count();
  };

  StepResult s;
  s.step_id = 1;
  s.subtask = question;
  s.start_us = now_us();
  try {
    ChatRequest req;
    req.purpose = "baseline";
    req.system_prompt = prompts::baseline_system();
    req.messages.push_back({Role::kUser, "Question: " + question});
    req.tool_schemas = prompts::planning_tools();
    ToolInvocation inv = gateway.tool_call(profile, req, &trace.calls);
    s.tool = inv.name;
    s.params = inv.arguments;
    AssembledQuery q = build_query_raw(inv.arguments, inv.name == prompts::kFacetedSearch);
    s.assembled_query = q.query_string;
    s.payload = backend.invoke(inv.name, q);
    s.status = s.payload.rows() == 0 ? StepStatus::kEmpty : StepStatus::kOk;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kProviderUnavailable) throw;
    s.status = StepStatus::kFailed;
    s.error = e.what();
    s.payload = {};
  } catch (const std::exception& e) {
    s.status = StepStatus::kFailed;
    s.error = e.what();
    s.payload = {};
  }
  s.end_us = now_us();
  trace.steps[1] = std::move(s);
  trace.wall_us = now_us();
  if (log) log->merge(trace.calls);
  return trace;
}

}  // namespace sqa
