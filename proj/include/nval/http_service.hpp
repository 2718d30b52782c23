#pragma once

#include <thread>

#include <httplib.h>

#include "nval/orchestrator.hpp"

namespace nval {

// REST front end over an Engine:
//   POST /requests                  -> 201 {"experiment_id":..} (async run)
//   GET  /requests/{id}             -> experiment record
//   GET  /requests/{id}/log         -> activity log (application/jsonl)
//   GET  /actions                   -> registered action descriptors
//   POST /requests/{id}/teardown    -> 202
class HttpService {
 public:
  explicit HttpService(Engine& engine) : engine_(engine) { route(); }

  ~HttpService() { stop(); }

  httplib::Server& server() { return server_; }

  // Binds to an ephemeral port and serves on a background thread; returns the
  // port. Used by tests and `serve` when port 0 is requested.
  int start_async(const std::string& host = "127.0.0.1", int port = 0) {
    int bound = port == 0 ? server_.bind_to_any_port(host)
                          : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw IoError("cannot bind HTTP service to " + host);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return bound;
  }

  bool listen(const std::string& host, int port) {
    return server_.listen(host, port);
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
    for (auto& w : workers_)
      if (w.joinable()) w.join();
    workers_.clear();
  }

 private:
  void route() {
    server_.Post("/requests", [this](const httplib::Request& req,
                                     httplib::Response& res) {
      Json doc;
      try {
        doc = Json::parse(req.body);
      } catch (const Json::parse_error&) {
        fail(res, 400, "request body is not valid JSON");
        return;
      }
      ExperimentRecord record;
      try {
        Request parsed = parse_request(doc);
        auto report = validate_structure(parsed.model);
        if (report.verdict() == Verdict::Errors) {
          fail(res, 400, "model fails structural validation: " +
                             report.findings.front().message);
          return;
        }
        std::lock_guard lock(mutex_);
        record = engine_.create_experiment(doc);
      } catch (const Error& e) {
        fail(res, 400, e.what());
        return;
      }
      std::string id = record.experiment_id;
      workers_.emplace_back([this, id, doc] {
        try {
          std::lock_guard lock(mutex_);
          run_created(id, doc);
        } catch (...) {
          // failures land in the stored record
        }
      });
      res.status = 201;
      res.set_content(Json{{"experiment_id", id}}.dump(), "application/json");
    });

    server_.Get(R"(/requests/([A-Za-z0-9-]+))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  auto id = req.matches[1].str();
                  if (!engine_.workspace().has_record(id)) {
                    fail(res, 404, "unknown experiment '" + id + "'");
                    return;
                  }
                  res.set_content(
                      engine_.workspace().load_record(id).to_json().dump(2),
                      "application/json");
                });

    server_.Get(R"(/requests/([A-Za-z0-9-]+)/log)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  auto id = req.matches[1].str();
                  if (!engine_.workspace().has_record(id)) {
                    fail(res, 404, "unknown experiment '" + id + "'");
                    return;
                  }
                  std::string log;
                  try {
                    log = engine_.workspace().read_log(id);
                  } catch (const IoError&) {
                    // record exists but nothing logged yet
                  }
                  res.set_content(log, "application/jsonl");
                });

    server_.Get("/actions", [this](const httplib::Request&,
                                   httplib::Response& res) {
      Json j = Json::array();
      for (const auto& e : engine_.registry().entries())
        j.push_back(e.desc.to_json());
      res.set_content(j.dump(2), "application/json");
    });

    server_.Post(R"(/requests/([A-Za-z0-9-]+)/teardown)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   auto id = req.matches[1].str();
                   if (!engine_.workspace().has_record(id)) {
                     fail(res, 404, "unknown experiment '" + id + "'");
                     return;
                   }
                   workers_.emplace_back([this, id] {
                     try {
                       std::lock_guard lock(mutex_);
                       engine_.teardown_by_id(id);
                     } catch (...) {
                     }
                   });
                   res.status = 202;
                   res.set_content(Json{{"experiment_id", id}}.dump(),
                                   "application/json");
                 });
  }

  // Continues a request whose record already exists (POST handler created it
  // so the 201 can return the id before execution finishes).
  void run_created(const std::string& id, const Json& doc) {
    Request request = parse_request(doc);
    RunResult result;
    result.record = engine_.workspace().load_record(id);

    auto t0 = detail::epoch_ms();
    size_t n = 0;
    auto components = build_components(request, &n);
    result.planning = plan_components(components, n, engine_.registry(),
                                      engine_.options().match);
    engine_.workspace().append_log(
        {id, "PLANNING-OVERHEADS", t0, detail::epoch_ms(), ""});
    result.record.plan = plan_to_json(result.planning);
    if (!result.planning.satisfiable) {
      result.record.status = ExperimentStatus::Unsatisfiable;
      result.record.diagnostics = "no execution plan under the current action pool";
      auto s0 = detail::epoch_ms();
      engine_.workspace().save_record(result.record);
      engine_.workspace().append_log(
          {id, "STORE-EXP-RECORD", s0, detail::epoch_ms(), ""});
      return;
    }
    engine_.execute(result, request, components, n);
  }

  static void fail(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(Json{{"error", message}}.dump(), "application/json");
  }

  Engine& engine_;
  httplib::Server server_;
  std::thread thread_;
  std::vector<std::thread> workers_;
  std::mutex mutex_;  // serializes engine access across worker threads
};

}  // namespace nval
