// Python extension. Structured results cross the boundary as JSON text; the
// package's __init__ decodes them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>
#include <thread>

#include "changegpt/agent.hpp"
#include "changegpt/cli.hpp"
#include "changegpt/error.hpp"
#include "changegpt/gateway.hpp"

namespace py = pybind11;
using namespace changegpt;
using nlohmann::json;

namespace {

PyObject* g_error_type = nullptr;

ToolRegistry registry_for(const std::string& fixtures, const std::map<std::string, std::string>& remotes) {
  ToolkitConfig cfg;
  cfg.fixtures_dir = fixtures;
  cfg.remote_endpoints = remotes;
  return make_default_registry(cfg);
}

std::string ask(const std::string& pre, const std::string& cur, const std::string& question,
                const std::string& backend, const std::string& fixtures, const std::optional<std::string>& pair_id,
                const std::optional<std::array<int, 4>>& crop, const std::string& crop_parent,
                std::size_t max_steps, const std::map<std::string, std::string>& remotes,
                const std::optional<std::filesystem::path>& export_dir) {
  const auto selector = BackendSelector::parse(backend);
  const auto registry = registry_for(fixtures, remotes);
  auto model = BackendFactory(selector).create("ask");
  Question q;
  q.id = "ask";
  q.text = question;
  q.pre = pre;
  q.cur = cur;
  q.pair_id = pair_id;
  if (crop) {
    CropSpec spec;
    spec.region = {(*crop)[0], (*crop)[1], (*crop)[2], (*crop)[3]};
    if (crop_parent == "pre") {
      spec.parent = CropParent::Pre;
    } else if (crop_parent == "cur") {
      spec.parent = CropParent::Cur;
    } else if (crop_parent == "both") {
      spec.parent = CropParent::Both;
    } else {
      throw Error(ErrorCode::BadInput, "crop_parent must be pre, cur or both");
    }
    q.crop = spec;
  }
  auto session = selector.kind == BackendSelector::Kind::Scripted
                     ? make_replay_session("ask")
                     : std::make_unique<Session>("ask", nullptr, std::make_unique<SystemClock>());
  prepare_session(*session, q);
  AgentConfig config;
  config.max_steps = max_steps;
  const auto outcome = run_query(*session, question, *model, registry, config);
  if (export_dir) session->export_to(*export_dir);
  return json{{"answer", outcome.answer},
              {"status", std::string(to_string(outcome.trace.status))},
              {"tools_used", outcome.trace.tools_used()},
              {"trace", trace_to_json(outcome.trace)}}
      .dump();
}

std::string evaluate(const std::string& dataset_path, const std::string& backend, const std::string& fixtures,
                     std::size_t max_steps) {
  const auto dataset = load_dataset(dataset_path);
  const auto registry = registry_for(fixtures, {});
  const BackendFactory factory(BackendSelector::parse(backend));
  AgentConfig config;
  config.max_steps = max_steps;
  std::vector<json> traces;
  const auto report = run_eval(dataset, make_agent_runner(registry, factory, config), &registry, &traces);
  return json{{"report", report_to_json(report)}, {"summary", summary_line(report)}, {"traces", traces}}.dump();
}

std::string list_tools(const std::string& fixtures) {
  const auto registry = registry_for(fixtures, {});
  json out = json::array();
  for (const auto* t : registry.list()) {
    out.push_back({{"name", t->name},
                   {"description", t->description},
                   {"arguments", t->arg_grammar},
                   {"backing", std::string(to_string(t->backing.kind))}});
  }
  return out.dump();
}

std::string parse_completion(const std::string& text) {
  const auto registry = registry_for("", {});
  const auto step = parse_step(text, registry);
  json out = {{"thought", step.thought}};
  if (step.is_final()) {
    out["final_answer"] = step.final_body().final_answer;
  } else {
    out["action"] = step.action().action;
    out["action_input"] = step.action().action_input;
  }
  return out.dump();
}

std::string mcnemar_test(std::uint64_t b, std::uint64_t c) {
  const auto r = mcnemar(b, c);
  json out = {{"statistic", r.statistic}, {"p_value", r.p_value}, {"exact_p_value", nullptr}};
  if (r.exact_p_value) out["exact_p_value"] = *r.exact_p_value;
  return out.dump();
}

std::string segmentation_scores(const std::string& pred_png, const std::string& gt_png) {
  const auto s = segmentation_metrics(decode_label_mask(read_file(pred_png)), decode_label_mask(read_file(gt_png)));
  json iou = json::object();
  json f1 = json::object();
  for (const auto& [cls, v] : s.per_class_iou) iou[std::string(class_name(cls))] = v;
  for (const auto& [cls, v] : s.per_class_f1) f1[std::string(class_name(cls))] = v;
  return json{{"overall_accuracy", s.overall_accuracy}, {"mean_iou", s.mean_iou},
              {"mean_f1", s.mean_f1},                   {"per_class_iou", iou},
              {"per_class_f1", f1}}
      .dump();
}

/// The HTTP gateway on an ephemeral local port, served from a background thread.
class Server {
 public:
  Server(const std::string& backend, const std::string& fixtures, bool deterministic,
         const std::optional<std::filesystem::path>& store)
      : registry_(registry_for(fixtures, {})), backends_(BackendSelector::parse(backend)) {
    GatewayConfig cfg;
    cfg.deterministic = deterministic;
    cfg.store_dir = store;
    gateway_ = std::make_unique<Gateway>(registry_, backends_, cfg);
    port_ = gateway_->bind_any_port("127.0.0.1");
    if (port_ < 0) throw Error(ErrorCode::IoError, "cannot bind a local port");
    thread_ = std::thread([this] { gateway_->listen_after_bind(); });
  }
  ~Server() { close(); }
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  void close() {
    if (!thread_.joinable()) return;
    gateway_->stop();
    thread_.join();
  }
  [[nodiscard]] int port() const { return port_; }

 private:
  ToolRegistry registry_;
  BackendFactory backends_;
  std::unique_ptr<Gateway> gateway_;
  int port_ = -1;
  std::thread thread_;
};

py::tuple cli_main(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"changegpt"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_changegpt, m) {
  m.doc() = "Agent engine for bi-temporal remote sensing change analysis";

  g_error_type = PyErr_NewException("changegpt.Error", PyExc_RuntimeError, nullptr);
  m.add_object("Error", py::handle(g_error_type));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(g_error_type)(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(g_error_type, inst.ptr());
    }
  });

  m.def("ask", &ask, py::arg("pre"), py::arg("cur"), py::arg("question"), py::arg("backend") = "http",
        py::arg("fixtures") = "", py::arg("pair_id") = std::nullopt, py::arg("crop") = std::nullopt,
        py::arg("crop_parent") = "pre", py::arg("max_steps") = AgentConfig{}.max_steps,
        py::arg("remotes") = std::map<std::string, std::string>{}, py::arg("export_dir") = std::nullopt,
        py::call_guard<py::gil_scoped_release>());
  m.def("evaluate", &evaluate, py::arg("dataset"), py::arg("backend"), py::arg("fixtures") = "",
        py::arg("max_steps") = AgentConfig{}.max_steps, py::call_guard<py::gil_scoped_release>());
  m.def("list_tools", &list_tools, py::arg("fixtures") = "");
  m.def("parse_completion", &parse_completion, py::arg("text"));
  m.def("cli", &cli_main, py::arg("args"));

  py::class_<Server>(m, "Server")
      .def(py::init<const std::string&, const std::string&, bool, const std::optional<std::filesystem::path>&>(),
           py::arg("backend"), py::arg("fixtures") = "", py::arg("deterministic") = false,
           py::arg("store") = std::nullopt)
      .def_property_readonly("port", &Server::port)
      .def("close", &Server::close, py::call_guard<py::gil_scoped_release>())
      .def("__enter__", [](Server& s) -> Server& { return s; }, py::return_value_policy::reference)
      .def("__exit__", [](Server& s, const py::args&) {
        py::gil_scoped_release release;
        s.close();
      });

  m.def("precision", &precision, py::arg("used"), py::arg("required"));
  m.def("recall", &recall, py::arg("used"), py::arg("required"));
  m.def(
      "classify_error",
      [](double p, double r, bool correct) -> std::optional<std::string> {
        const auto c = classify_error(p, r, correct);
        if (!c) return std::nullopt;
        return std::string(to_string(*c));
      },
      py::arg("precision"), py::arg("recall"), py::arg("correct"));
  m.def("mcnemar", &mcnemar_test, py::arg("b"), py::arg("c"));
  m.def(
      "estimate_latency",
      [](int tools, std::pair<double, double> tool_ms, std::pair<double, double> api_s) {
        const auto e = estimate_latency(tools, {tool_ms.first, tool_ms.second}, {api_s.first, api_s.second});
        return py::make_tuple(e.rounds, e.total_s.lo, e.total_s.hi);
      },
      py::arg("tools"), py::arg("tool_ms"), py::arg("api_s"));

  m.def(
      "format_filename",
      [](const std::string& self_id, const std::string& link_id, const std::string& token) {
        return format_filename(self_id, link_id, ImageRole::from_token(token));
      },
      py::arg("self_id"), py::arg("link_id"), py::arg("role"));
  m.def(
      "parse_filename",
      [](const std::string& name) -> std::optional<py::tuple> {
        const auto p = parse_filename(name);
        if (!p) return std::nullopt;
        return py::make_tuple(p->self_id, p->link_id, p->role_token);
      },
      py::arg("filename"));

  m.def(
      "changed_pixels", [](const std::filesystem::path& png) { return count_changed_pixels(decode_change_mask(read_file(png))); },
      py::arg("change_png"));
  m.def(
      "class_pixels",
      [](const std::filesystem::path& png, const std::string& cls) {
        const auto idx = class_from_name(cls);
        if (!idx) throw Error(ErrorCode::BadClass, "unknown class '" + cls + "'");
        return count_class_pixels(decode_label_mask(read_file(png)), *idx);
      },
      py::arg("label_png"), py::arg("class_name"));
  m.def(
      "difference_fraction",
      [](const std::filesystem::path& pre, const std::filesystem::path& cur, int tolerance) {
        return changed_fraction(difference_mask(decode_rgb(read_file(pre)), decode_rgb(read_file(cur)), tolerance));
      },
      py::arg("pre_png"), py::arg("cur_png"), py::arg("tolerance") = 0);
  m.def("segmentation_scores", &segmentation_scores, py::arg("pred_png"), py::arg("gt_png"));
}
