#include "changegpt/cli.hpp"

#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "changegpt/agent.hpp"
#include "changegpt/error.hpp"
#include "changegpt/gateway.hpp"
#include "changegpt/text.hpp"

namespace changegpt {

namespace {

struct CommonOptions {
  std::string fixtures;
  std::vector<std::string> remotes;  // tool=url
  std::string backend;
  std::size_t max_steps = AgentConfig{}.max_steps;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--fixtures", o.fixtures, "Directory of stub tool fixtures");
  cmd->add_option("--remote", o.remotes, "Back a tool by a remote service: tool=url (repeatable)");
  cmd->add_option("--max-steps", o.max_steps, "Reasoning step limit")->check(CLI::PositiveNumber);
}

ToolkitConfig toolkit_config(const CommonOptions& o) {
  ToolkitConfig cfg;
  cfg.fixtures_dir = o.fixtures;
  for (const auto& r : o.remotes) {
    const auto eq = r.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == r.size()) {
      throw Error(ErrorCode::BadInput, "--remote expects tool=url, got '" + r + "'");
    }
    cfg.remote_endpoints[std::string(trim(r.substr(0, eq)))] = std::string(trim(r.substr(eq + 1)));
  }
  return cfg;
}

CropRegion parse_crop(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4) throw Error(ErrorCode::BadInput, "--crop expects x,y,w,h");
  int v[4];
  for (int i = 0; i < 4; ++i) {
    try {
      std::size_t used = 0;
      const std::string s(trim(parts[i]));
      v[i] = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadInput, "--crop expects integers x,y,w,h, got '" + text + "'");
    }
  }
  return {v[0], v[1], v[2], v[3]};
}

struct AskOptions {
  CommonOptions common;
  std::string pre;
  std::string cur;
  std::string question;
  std::string crop;
  std::string crop_parent = "pre";
  std::string pair_id;
  std::string trace = "trace.json";
  std::string record;
};

int cmd_ask(const AskOptions& o, std::ostream& out, std::ostream& err) {
  std::unique_ptr<ToolRegistry> registry;
  std::unique_ptr<CompletionBackend> backend;
  Question q;
  try {
    registry = std::make_unique<ToolRegistry>(make_default_registry(toolkit_config(o.common)));
    BackendFactory factory(BackendSelector::parse(o.common.backend.empty() ? "http" : o.common.backend));
    backend = factory.create("ask");
    if (!o.record.empty()) backend = std::make_unique<RecordingBackend>(std::move(backend), o.record);
    q.id = "ask";
    q.text = o.question;
    q.pre = o.pre;
    q.cur = o.cur;
    if (!o.pair_id.empty()) q.pair_id = o.pair_id;
    if (!o.crop.empty()) {
      CropSpec spec;
      spec.region = parse_crop(o.crop);
      if (o.crop_parent == "pre") {
        spec.parent = CropParent::Pre;
      } else if (o.crop_parent == "cur") {
        spec.parent = CropParent::Cur;
      } else {
        spec.parent = CropParent::Both;
      }
      q.crop = spec;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadArgs;
  }

  const bool scripted = BackendSelector::parse(o.common.backend.empty() ? "http" : o.common.backend).kind ==
                        BackendSelector::Kind::Scripted;
  std::unique_ptr<Session> session =
      scripted ? make_replay_session("ask")
               : std::make_unique<Session>("ask", nullptr, std::make_unique<SystemClock>());
  try {
    prepare_session(*session, q);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::OutOfBounds || e.code() == ErrorCode::BadInput ? kExitBadArgs
                                                                                  : kExitImageError;
  }

  AgentConfig config;
  config.max_steps = o.common.max_steps;
  const auto outcome = run_query(*session, q.text, *backend, *registry, config);
  write_text_file(o.trace, trace_to_json(outcome.trace).dump(2) + "\n");
  out << outcome.answer << "\n";
  out << "trace: " << o.trace << "\n";
  switch (outcome.trace.status) {
    case QueryStatus::Answered: return kExitOk;
    case QueryStatus::BackendError:
      err << "error: " << outcome.trace.error << "\n";
      return kExitBackendError;
    default:
      err << "error: " << outcome.trace.error << "\n";
      return kExitFailure;
  }
}

struct EvalOptions {
  CommonOptions common;
  std::string dataset;
  std::string report;
  std::string format;
  std::string traces;
};

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  std::vector<Question> dataset;
  try {
    dataset = load_dataset(o.dataset);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDatasetError;
  }
  const auto base = std::filesystem::path(o.dataset).parent_path();

  CommonOptions common = o.common;
  if (common.fixtures.empty() && std::filesystem::is_directory(base / "tools")) {
    common.fixtures = (base / "tools").string();
  }
  if (common.backend.empty()) {
    common.backend = std::filesystem::is_directory(base / "scripts")
                         ? "scripted:" + (base / "scripts").string()
                         : "http";
  }
  std::string format = o.format;
  if (format.empty()) format = std::filesystem::path(o.report).extension() == ".md" ? "md" : "json";

  std::unique_ptr<ToolRegistry> registry;
  std::unique_ptr<BackendFactory> factory;
  try {
    registry = std::make_unique<ToolRegistry>(make_default_registry(toolkit_config(common)));
    factory = std::make_unique<BackendFactory>(BackendSelector::parse(common.backend));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadArgs;
  }

  AgentConfig config;
  config.max_steps = common.max_steps;
  std::vector<nlohmann::json> traces;
  EvalReport report;
  try {
    report = run_eval(dataset, make_agent_runner(*registry, *factory, config), registry.get(), &traces);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::DatasetError ? kExitDatasetError : kExitFailure;
  }

  if (!o.report.empty()) {
    write_text_file(o.report, format == "md" ? report_to_markdown(report)
                                             : report_to_json(report).dump(2) + "\n");
  }
  if (!o.traces.empty()) {
    for (const auto& t : traces) {
      write_text_file(std::filesystem::path(o.traces) / (t.at("question_id").get<std::string>() + ".json"),
                      t.dump(2) + "\n");
    }
  }
  out << summary_line(report) << "\n";
  return kExitOk;
}

struct ServeOptions {
  CommonOptions common;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string store;
  std::string static_dir;
  bool deterministic = false;
};

Gateway* g_running_gateway = nullptr;

int cmd_serve(const ServeOptions& o, std::ostream& out, std::ostream& err) {
  std::unique_ptr<ToolRegistry> registry;
  std::unique_ptr<BackendFactory> factory;
  try {
    registry = std::make_unique<ToolRegistry>(make_default_registry(toolkit_config(o.common)));
    factory = std::make_unique<BackendFactory>(
        BackendSelector::parse(o.common.backend.empty() ? "http" : o.common.backend));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadArgs;
  }
  GatewayConfig config;
  config.agent.max_steps = o.common.max_steps;
  config.deterministic = o.deterministic;
  if (!o.store.empty()) config.store_dir = o.store;
  if (!o.static_dir.empty()) config.static_dir = o.static_dir;
  Gateway gateway(*registry, *factory, config);
  g_running_gateway = &gateway;
  std::signal(SIGINT, [](int) {
    if (g_running_gateway != nullptr) g_running_gateway->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_running_gateway != nullptr) g_running_gateway->stop();
  });
  out << fmt::format("listening on http://{}:{}", o.host, o.port) << std::endl;
  const bool ok = gateway.listen(o.host, o.port);
  g_running_gateway = nullptr;
  if (!ok) {
    err << "error: cannot listen on " << o.host << ":" << o.port << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_tools_list(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const auto registry = make_default_registry(toolkit_config(o));
    for (const auto* t : registry.list()) {
      out << t->name << " [" << to_string(t->backing.kind) << "]: " << t->description << "\n";
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadArgs;
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Agent for bi-temporal remote sensing change analysis"};
  app.require_subcommand(1);

  AskOptions ask;
  auto* ask_cmd = app.add_subcommand("ask", "Answer one question about an image pair");
  add_common(ask_cmd, ask.common);
  ask_cmd->add_option("--backend", ask.common.backend, "http or scripted:<path>")->default_str("http");
  ask_cmd->add_option("--pre", ask.pre, "Previous image (PNG)")->required();
  ask_cmd->add_option("--cur", ask.cur, "Current image (PNG)")->required();
  ask_cmd->add_option("-q,--question,question", ask.question, "The question")->required();
  ask_cmd->add_option("--crop", ask.crop, "Crop region x,y,w,h");
  ask_cmd->add_option("--crop-parent", ask.crop_parent, "Image to crop")
      ->check(CLI::IsMember({"pre", "cur", "both"}));
  ask_cmd->add_option("--pair-id", ask.pair_id, "Pair id (6 hex chars) used for fixtures");
  ask_cmd->add_option("--trace", ask.trace, "Where to write the trace JSON")->capture_default_str();
  ask_cmd->add_option("--record", ask.record, "Record completions to a replayable script");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Run a question dataset and score it");
  add_common(eval_cmd, eval.common);
  eval_cmd->add_option("--backend", eval.common.backend,
                       "http or scripted:<path> (default: scripts/ next to the dataset)");
  eval_cmd->add_option("dataset", eval.dataset, "Dataset (JSON Lines)")->required();
  eval_cmd->add_option("--report", eval.report, "Where to write the report");
  eval_cmd->add_option("--format", eval.format, "Report format")->check(CLI::IsMember({"json", "md"}));
  eval_cmd->add_option("--traces", eval.traces, "Directory for per-question traces");

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  add_common(serve_cmd, serve.common);
  serve_cmd->add_option("--backend", serve.common.backend, "http or scripted:<path>")->default_str("http");
  serve_cmd->add_option("--host", serve.host)->capture_default_str();
  serve_cmd->add_option("--port", serve.port)->capture_default_str()->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--store", serve.store, "Persist sessions in this directory");
  serve_cmd->add_option("--static", serve.static_dir, "Serve static UI assets from this directory");
  serve_cmd->add_flag("--deterministic", serve.deterministic,
                      "Per-session id sequence and logical clock (replayable traces)");

  CommonOptions tools_opts;
  auto* tools_cmd = app.add_subcommand("tools", "Inspect the toolkit");
  tools_cmd->require_subcommand(1);
  auto* list_cmd = tools_cmd->add_subcommand("list", "List registered tools");
  add_common(list_cmd, tools_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitBadArgs;
  }

  try {
    if (*ask_cmd) return cmd_ask(ask, out, err);
    if (*eval_cmd) return cmd_eval(eval, out, err);
    if (*serve_cmd) return cmd_serve(serve, out, err);
    if (*list_cmd) return cmd_tools_list(tools_opts, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitBadArgs;
}

}  // namespace changegpt
