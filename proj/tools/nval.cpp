#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nval/http_service.hpp"
#include "nval/orchestrator.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUnsatisfiable = 1;
constexpr int kValidationError = 2;
constexpr int kExecutionFailure = 3;
constexpr int kUsageError = 4;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw nval::IoError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nval::Json parse_json_file(const std::string& path) {
  try {
    return nval::Json::parse(slurp(path));
  } catch (const nval::Json::parse_error& e) {
    throw nval::SyntaxError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Composable deployment and evaluation of blockchain networks"};
  app.require_subcommand(1);

  nval::EngineOptions opts;
  if (const char* env = std::getenv("NETFORGE_WORKSPACE")) opts.workspace = env;
  std::string registry_path;
  app.add_option("--workspace", opts.workspace, "Workspace directory")
      ->envname("NETFORGE_WORKSPACE");
  app.add_option("--registry", registry_path,
                 "Registry manifest (default: built-in action pool)");
  app.add_flag("--teardown", opts.teardown_after,
               "Tear deployments down after each run");
  bool keep_going = false;
  app.add_flag("--keep-going", keep_going,
               "Continue past failed calls (skips dependent evaluations)");
  app.add_option("--seed", opts.seed, "Seed for synthetic datasets");
  app.add_flag("--simulate-latency", opts.sim.simulate_latency,
               "Draw realistic deploy durations (slow)");

  std::string model_path, request_path, experiment_id;
  std::string bundle_dir = "bundles/case-study";
  if (const char* env = std::getenv("NVAL_BUNDLE_DIR")) bundle_dir = env;
  int rounds = 1;
  std::string bind = "127.0.0.1:8080";

  auto* validate = app.add_subcommand("validate", "Structurally validate a model");
  validate->add_option("model", model_path, "BND-JSON model file")->required();

  auto* plan_cmd = app.add_subcommand("plan", "Plan a request without executing");
  plan_cmd->add_option("request", request_path, "Request JSON file")->required();

  auto* run = app.add_subcommand("run", "Plan and execute a request");
  run->add_option("request", request_path, "Request JSON file")->required();

  auto* actions = app.add_subcommand("actions", "Action registry commands");
  actions->require_subcommand(1);
  actions->add_subcommand("list", "Print registered action descriptors");

  auto* replay = app.add_subcommand("replay-case-study",
                                    "Run the bundled experiment set");
  replay->add_option("--rounds", rounds, "Rounds over the 13 experiments");
  replay->add_option("--bundles", bundle_dir, "Case-study bundle directory");

  auto* teardown = app.add_subcommand("teardown", "Tear down an experiment");
  teardown->add_option("experiment", experiment_id, "Experiment id")->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--bind", bind, "host:port (port 0 = ephemeral)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsageError;
  }

  opts.fail_fast = !keep_going;
  if (!registry_path.empty()) opts.registry_manifest = registry_path;

  try {
    if (validate->parsed()) {
      auto model = nval::parse_bnd(slurp(model_path));
      auto report = nval::validate_structure(model);
      std::cout << report.to_json().dump(2) << "\n";
      return report.verdict() == nval::Verdict::Errors ? kValidationError : kOk;
    }

    nval::Engine engine(opts);

    if (plan_cmd->parsed()) {
      auto request = nval::parse_request(parse_json_file(request_path));
      auto report = nval::validate_structure(request.model);
      if (report.verdict() == nval::Verdict::Errors) {
        std::cerr << report.to_json().dump(2) << "\n";
        return kValidationError;
      }
      auto outcome = nval::plan(request, engine.registry(), opts.match);
      std::cout << nval::plan_to_json(outcome).dump(2) << "\n";
      return outcome.satisfiable ? kOk : kUnsatisfiable;
    }

    if (run->parsed()) {
      auto result = engine.run_request(parse_json_file(request_path));
      const auto& record = result.record;
      std::cout << "experiment " << record.experiment_id << ": "
                << to_string(record.status) << "\n";
      for (const auto& [channel, urls] : record.endpoints) {
        std::cout << "  " << channel << ":\n";
        for (const auto& u : urls) std::cout << "    " << u << "\n";
      }
      for (const auto& d : record.datasets) std::cout << "  dataset " << d << "\n";
      if (!record.diagnostics.empty())
        std::cerr << record.diagnostics << "\n";
      switch (record.status) {
        case nval::ExperimentStatus::Succeeded: return kOk;
        case nval::ExperimentStatus::Unsatisfiable: return kUnsatisfiable;
        default: return kExecutionFailure;
      }
    }

    if (actions->parsed()) {
      nval::Json j = nval::Json::array();
      for (const auto& e : engine.registry().entries())
        j.push_back(e.desc.to_json());
      std::cout << j.dump(2) << "\n";
      return kOk;
    }

    if (replay->parsed()) {
      auto summary = engine.replay_case_study(bundle_dir, rounds);
      std::cout << summary.to_json().dump(2) << "\n";
      if (summary.unsatisfiable > 0) return kUnsatisfiable;
      return summary.successes == summary.experiments ? kOk : kExecutionFailure;
    }

    if (teardown->parsed()) {
      engine.teardown_by_id(experiment_id);
      std::cout << "experiment " << experiment_id << ": torn down\n";
      return kOk;
    }

    if (serve->parsed()) {
      auto colon = bind.rfind(':');
      if (colon == std::string::npos) {
        std::cerr << "--bind expects host:port\n";
        return kUsageError;
      }
      std::string host = bind.substr(0, colon);
      int port = std::stoi(bind.substr(colon + 1));
      nval::HttpService service(engine);
      if (port == 0) {
        int bound = service.start_async(host, 0);
        std::cout << "listening on " << host << ":" << bound << "\n";
        std::string line;
        std::getline(std::cin, line);  // serve until stdin closes
        service.stop();
        return kOk;
      }
      std::cout << "listening on " << host << ":" << port << "\n";
      return service.listen(host, port) ? kOk : kExecutionFailure;
    }
  } catch (const nval::SyntaxError& e) {
    std::cerr << e.what() << "\n";
    return kValidationError;
  } catch (const nval::SchemaError& e) {
    std::cerr << e.what() << "\n";
    return kValidationError;
  } catch (const nval::DanglingEdgeError& e) {
    std::cerr << e.what() << "\n";
    return kValidationError;
  } catch (const nval::UnknownChannelError& e) {
    std::cerr << e.what() << "\n";
    return kValidationError;
  } catch (const nval::Error& e) {
    std::cerr << e.what() << "\n";
    return kExecutionFailure;
  }
  return kUsageError;
}
