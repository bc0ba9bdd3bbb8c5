#include "docintel/service/cli.hpp"

#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "docintel/error.hpp"
#include "docintel/ingest.hpp"
#include "docintel/io.hpp"
#include "docintel/pipelines/templates.hpp"
#include "docintel/service/config.hpp"
#include "docintel/service/runtime.hpp"
#include "docintel/service/service.hpp"

namespace docintel::service {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUserError = 1;
constexpr int kInternalError = 2;

int exit_code_for(int status) {
  if (status < 400) return 0;
  return status == 500 ? kInternalError : kUserError;
}

json read_json_file(const fs::path& path) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, path.string() + ": not valid JSON: " + e.what());
  }
}

// Accepts a JSON array or JSON lines.
json read_records(const fs::path& path) {
  const auto text = io::read_file(path);
  try {
    auto j = json::parse(text);
    if (j.is_array()) return j;
  } catch (const json::exception&) {
  }
  json out = json::array();
  std::size_t line_no = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception&) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + std::to_string(line_no) + ": not valid JSON");
    }
  }
  return out;
}

struct Globals {
  std::string config_path;
  std::string store_dir;
  bool as_json = false;
};

class Runner {
 public:
  Runner(const Globals& globals, std::ostream& out, std::ostream& err)
      : globals_(globals), out_(out), err_(err) {}

  Config config() const {
    Config c = globals_.config_path.empty() ? Config{} : load_config(globals_.config_path);
    if (!globals_.store_dir.empty()) c.store_dir = globals_.store_dir;
    c.validate();
    return c;
  }

  // Runs one request through an in-process service; prints either the wire
  // object or the text rendering.
  int call(const Config& c, ApiRequest request, const std::function<void(const json&)>& render,
           bool need_store = true, const std::function<void(const json&)>& after = {}) {
    if (need_store && !store::Store::exists(c.store_dir)) {
      throw Error(ErrorCode::kNotFound,
                  "no store at " + c.store_dir.string() + "; run 'docintel init' first");
    }
    Service svc(c, make_embedder(c), make_backend(c));
    const auto res = svc.handle(request);
    if (res.status >= 400) return fail(res.status, res.body);
    if (after) after(res.body);
    if (globals_.as_json) {
      out_ << res.body.dump(2, ' ', false, json::error_handler_t::replace) << '\n';
    } else {
      render(res.body);
    }
    return 0;
  }

  int fail(int status, const json& body) {
    if (globals_.as_json) {
      err_ << body.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    } else {
      err_ << "error: " << body.value("message", "") << " [" << body.value("code", "") << "]\n";
    }
    return exit_code_for(status);
  }

  std::ostream& out() { return out_; }
  const Globals& globals() const { return globals_; }

 private:
  const Globals& globals_;
  std::ostream& out_;
  std::ostream& err_;
};

ApiRequest post(const std::string& path, const json& body) {
  return {"POST", path, {}, body.dump()};
}

void render_report(std::ostream& out, const json& r) {
  out << "files seen: " << r.value("files_seen", 0) << ", ingested: "
      << r.value("files_ingested", 0) << ", unchanged: " << r.value("files_skipped_unchanged", 0)
      << ", chunks added: " << r.value("chunks_added", 0) << '\n';
  if (r.contains("errors")) {
    for (const auto& e : r["errors"]) out << "  failed: " << e.dump() << '\n';
  }
}

std::atomic<Service*> g_serving{nullptr};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Local document intelligence: ingest, search, ask, extract, summarize, classify"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Config file");
  app.add_option("--store", g.store_dir, "Store directory (overrides store.dir)");
  app.add_flag("--json", g.as_json, "Print service wire objects as JSON");
  app.set_version_flag("--version", std::string(kVersion));

  auto* init = app.add_subcommand("init", "Create an empty store");
  std::string init_kind;
  init->add_option("--kind", init_kind, "sparse, dense or dual")
      ->check(CLI::IsMember({"sparse", "dense", "dual"}));

  auto* ingest_cmd = app.add_subcommand("ingest", "Ingest a folder (incremental)");
  std::string ingest_dir;
  ingest_cmd->add_option("dir", ingest_dir)->required();

  auto* search = app.add_subcommand("search", "Search the store");
  std::string query, mode = "keyword";
  std::size_t page = 1, page_size = 10;
  search->add_option("query", query)->required();
  search->add_option("--mode", mode)->check(CLI::IsMember({"keyword", "semantic", "hybrid"}));
  search->add_option("--page", page);
  search->add_option("--page-size", page_size);

  auto* ask = app.add_subcommand("ask", "Answer a question from the store");
  std::string question;
  std::size_t k = 4;
  ask->add_option("question", question)->required();
  ask->add_option("--k", k);

  auto* extract = app.add_subcommand("extract", "Structured extraction over document units");
  std::string ex_source, ex_units_file, ex_unit = "passage", ex_schema, ex_template, ex_out;
  std::size_t ex_retries = 2;
  auto* ex_src_opt = extract->add_option("--source", ex_source, "source_path of an ingested file");
  extract->add_option("--units-file", ex_units_file, "Text file, one unit per line")
      ->excludes(ex_src_opt);
  extract->add_option("--unit", ex_unit)->check(CLI::IsMember({"sentence", "paragraph", "passage"}));
  extract->add_option("--schema", ex_schema, "Schema JSON file")->required();
  extract->add_option("--template", ex_template, "Prompt template file with a {unit} slot");
  extract->add_option("--max-retries", ex_retries);
  extract->add_option("--out", ex_out, "Copy the CSV export here");

  auto* summarize = app.add_subcommand("summarize", "Summarize a document");
  std::string su_source, su_text_file, su_concept;
  auto* su_src_opt = summarize->add_option("--source", su_source);
  summarize->add_option("--text-file", su_text_file)->excludes(su_src_opt);
  summarize->add_option("--concept", su_concept, "Summarize only passages about this concept");

  auto* classify = app.add_subcommand("classify", "Train or apply a text classifier");
  classify->require_subcommand(1);
  auto* train = classify->add_subcommand("train", "Train a model from labeled examples");
  std::string tr_kind = "tfidf_linear", tr_data;
  std::size_t tr_epochs = 100;
  double tr_lr = 0.1;
  train->add_option("--kind", tr_kind)->check(CLI::IsMember({"centroid_fewshot", "tfidf_linear"}));
  train->add_option("--data", tr_data, "JSON array or JSON lines of {text, label}")->required();
  train->add_option("--epochs", tr_epochs);
  train->add_option("--learning-rate", tr_lr);
  auto* predict = classify->add_subcommand("predict", "Predict a label");
  std::string pr_model, pr_text;
  predict->add_option("--model-id", pr_model)->required();
  predict->add_option("text", pr_text)->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::optional<int> serve_port;
  serve->add_option("--port", serve_port);

  auto* config_cmd = app.add_subcommand("config", "Inspect configuration");
  config_cmd->require_subcommand(1);
  auto* config_print = config_cmd->add_subcommand("print", "Print the effective config");
  auto* print_templates =
      config_cmd->add_subcommand("print-templates", "Print the shipped prompt templates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kUserError;
  }

  Runner run(g, out, err);
  try {
    if (print_templates->parsed()) {
      for (const auto& name : pipelines::default_template_names()) {
        out << "### " << name << " (template version " << pipelines::kTemplateVersion << ")\n"
            << pipelines::default_template_text(name) << "\n\n";
      }
      return 0;
    }
    Config c = run.config();
    if (config_print->parsed()) {
      if (g.as_json) {
        out << c.to_json().dump(2) << '\n';
      } else {
        out << serialize_config(c);
      }
      return 0;
    }
    if (init->parsed()) {
      if (!init_kind.empty()) c.store_kind = *store::parse_store_kind(init_kind);
      if (store::Store::exists(c.store_dir)) {
        throw Error(ErrorCode::kInvalidArgument, "store already exists at " + c.store_dir.string());
      }
      auto s = store::Store::create(c.store_dir, store_options(c), make_embedder(c));
      out << "initialized " << store::store_kind_name(s.kind()) << " store at "
          << c.store_dir.string() << '\n';
      return 0;
    }
    if (ingest_cmd->parsed()) {
      return run.call(c, post("/ingest", {{"path", ingest_dir}}),
                      [&](const json& r) { render_report(out, r); }, false);
    }
    if (search->parsed()) {
      ApiRequest r{"GET", "/search", {}, ""};
      r.params = {{"q", query},
                  {"mode", mode},
                  {"page", std::to_string(page)},
                  {"page_size", std::to_string(page_size)}};
      return run.call(c, r, [&](const json& p) {
        out << p["total_hits"].get<std::size_t>() << " hits, page " << p["page"] << '\n';
        for (const auto& h : p["hits"]) {
          out << h["score"].get<double>() << '\t' << h["source_path"].get<std::string>() << '\t'
              << h["chunk_id"].get<std::string>() << "\n    " << h["snippet"].get<std::string>()
              << '\n';
        }
      });
    }
    if (ask->parsed()) {
      return run.call(c, post("/ask", {{"question", question}, {"k", k}}), [&](const json& a) {
        out << a["answer_text"].get<std::string>() << '\n';
        if (!a["sources"].empty()) out << "\nSources:\n";
        std::size_t n = 1;
        for (const auto& s : a["sources"]) {
          out << "  [" << n++ << "] " << s["source_path"].get<std::string>() << " ("
              << s["chunk_id"].get<std::string>() << ")\n";
        }
      });
    }
    if (extract->parsed()) {
      json body = {{"schema", read_json_file(ex_schema)}, {"max_retries", ex_retries}};
      if (!ex_template.empty()) body["template"] = io::read_file(ex_template);
      if (!ex_units_file.empty()) {
        json units = json::array();
        std::istringstream in(io::read_file(ex_units_file));
        for (std::string line; std::getline(in, line);) {
          if (line.find_first_not_of(" \t\r") != std::string::npos) units.push_back(line);
        }
        body["units"] = units;
      } else if (!ex_source.empty()) {
        body["source_path"] = ex_source;
        body["unit"] = ex_unit;
      } else {
        throw Error(ErrorCode::kInvalidArgument, "give --source or --units-file");
      }
      return run.call(c, post("/extract", body), [&](const json& r) {
        out << r["ok"] << " ok, " << r["failed"] << " failed\n";
        out << "csv: " << r["csv_path"].get<std::string>() << '\n';
      }, ex_units_file.empty(), [&](const json& r) {
        if (!ex_out.empty()) {
          io::write_file_atomic(ex_out, io::read_file(r["csv_path"].get<std::string>()));
        }
      });
    }
    if (summarize->parsed()) {
      json body = json::object();
      if (!su_source.empty()) {
        body["source_path"] = su_source;
      } else if (!su_text_file.empty()) {
        body["text"] = io::read_file(su_text_file);
      } else {
        throw Error(ErrorCode::kInvalidArgument, "give --source or --text-file");
      }
      body["strategy"] = su_concept.empty() ? "map_reduce" : "concept_focused";
      if (!su_concept.empty()) body["concept"] = su_concept;
      return run.call(c, post("/summarize", body),
                      [&](const json& s) { out << s["text"].get<std::string>() << '\n'; },
                      su_text_file.empty());
    }
    if (train->parsed()) {
      json body = {{"kind", tr_kind},
                   {"examples", read_records(tr_data)},
                   {"epochs", tr_epochs},
                   {"learning_rate", tr_lr}};
      return run.call(c, post("/classify/train", body),
                      [&](const json& r) { out << r["model_id"].get<std::string>() << '\n'; });
    }
    if (predict->parsed()) {
      return run.call(c, post("/classify/predict", {{"model_id", pr_model}, {"text", pr_text}}),
                      [&](const json& r) { out << r["label"].get<std::string>() << '\n'; });
    }
    if (serve->parsed()) {
      if (serve_port) c.server.port = *serve_port;
      c.validate();
      Logger logger(std::cerr);
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      Service svc(c, make_embedder(c), make_backend(c), &logger);
      svc.bind();
      g_serving = &svc;
      std::thread waiter([&set] {
        int sig = 0;
        sigwait(&set, &sig);
        if (Service* s = g_serving.load()) s->stop();
      });
      svc.listen();
      g_serving = nullptr;
      pthread_kill(waiter.native_handle(), SIGTERM);
      waiter.join();
      logger.info("stopped");
      return 0;
    }
  } catch (const Error& e) {
    return run.fail(http_status(e.code()),
                    api_error(std::string(error_code_name(e.code())), e.what(), e.detail()));
  } catch (const std::exception& e) {
    return run.fail(500, api_error("internal", e.what()));
  }
  return kUserError;
}

}  // namespace docintel::service
