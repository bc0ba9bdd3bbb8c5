#include "docintel/service/service.hpp"

#include <chrono>
#include <filesystem>
#include <regex>

#include <httplib.h>

#include "docintel/ingest.hpp"
#include "docintel/io.hpp"
#include "docintel/llm/structured.hpp"
#include "docintel/pipelines/ask.hpp"
#include "docintel/pipelines/classify.hpp"
#include "docintel/pipelines/extract.hpp"
#include "docintel/pipelines/summarize.hpp"
#include "docintel/pipelines/templates.hpp"
#include "docintel/pipelines/units.hpp"
#include "docintel/sparse/query.hpp"

namespace docintel::service {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kMaxK = 200;

Error bad_field(const std::string& field, const std::string& message) {
  return Error(ErrorCode::kInvalidArgument, field + ": " + message, json{{"field", field}});
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("request body is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "request body must be a JSON object");
  return j;
}

std::optional<std::string> opt_string(const json& body, const std::string& key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw bad_field(key, "expected a string");
  return it->get<std::string>();
}

std::string req_string(const json& body, const std::string& key) {
  auto v = opt_string(body, key);
  if (!v) throw bad_field(key, "required");
  return *v;
}

std::optional<std::size_t> opt_size(const json& body, const std::string& key, std::size_t lo,
                                    std::size_t hi) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer() && !it->is_number_unsigned()) {
    throw bad_field(key, "expected an integer");
  }
  const auto v = it->get<std::int64_t>();
  if (v < static_cast<std::int64_t>(lo) || v > static_cast<std::int64_t>(hi)) {
    throw bad_field(key, "out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<std::size_t>(v);
}

std::optional<double> opt_double(const json& body, const std::string& key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw bad_field(key, "expected a number");
  return it->get<double>();
}

std::size_t param_size(const ApiRequest& request, const std::string& key, std::size_t fallback,
                       std::size_t lo, std::size_t hi) {
  auto it = request.params.find(key);
  if (it == request.params.end() || it->second.empty()) return fallback;
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(it->second, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != it->second.size()) throw bad_field(key, "expected an integer");
  if (v < static_cast<long long>(lo) || v > static_cast<long long>(hi)) {
    throw bad_field(key, "out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<std::size_t>(v);
}

llm::CompletionRequest base_request(const json& body) {
  llm::CompletionRequest base;
  if (auto hint = opt_string(body, "backend")) {
    auto kind = llm::parse_backend_kind(*hint);
    if (!kind) throw bad_field("backend", "expected stub or http");
    base.backend_hint = kind;
  }
  if (auto t = opt_size(body, "max_tokens", 1, 1 << 20)) base.max_tokens = *t;
  return base;
}

std::vector<pipelines::LabeledText> labeled_examples(const json& body) {
  const json* list = nullptr;
  for (const char* key : {"examples", "dataset"}) {
    auto it = body.find(key);
    if (it != body.end() && !it->is_null()) {
      if (list) throw bad_field(key, "give either examples or dataset, not both");
      list = &*it;
    }
  }
  if (!list) throw bad_field("examples", "required");
  if (!list->is_array()) throw bad_field("examples", "expected an array");
  std::vector<pipelines::LabeledText> out;
  for (const auto& e : *list) {
    if (!e.is_object()) throw bad_field("examples", "items must be {text, label} objects");
    out.push_back({req_string(e, "text"), req_string(e, "label")});
  }
  return out;
}

bool is_model_id(const std::string& id) {
  static const std::regex kPattern("^[0-9a-f]{32}$");
  return std::regex_match(id, kPattern);
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kIngestInProgress:
    case ErrorCode::kStoreEmpty:
      return 409;
    case ErrorCode::kNetworkError:
    case ErrorCode::kHttpStatusError:
    case ErrorCode::kStructuredFailure:
      return 502;
    case ErrorCode::kBackendUnavailable:
      return 503;
    case ErrorCode::kIoError:
    case ErrorCode::kCorruptStore:
    case ErrorCode::kPartialWriteRollback:
    case ErrorCode::kStoreClosed:
    case ErrorCode::kInternal:
      return 500;
    default:
      return 400;
  }
}

json api_error(const std::string& code, const std::string& message, const json& detail) {
  json j = {{"code", code}, {"message", message}};
  if (!detail.is_null()) j["detail"] = detail;
  return j;
}

Service::Service(Config config, std::shared_ptr<const dense::Embedder> embedder,
                 std::shared_ptr<llm::Backend> backend, Logger* logger)
    : config_(std::move(config)),
      embedder_(std::move(embedder)),
      backend_(std::move(backend)),
      logger_(logger) {
  config_.validate();
  store_ = std::make_shared<const store::Store>(
      store::Store::open_or_create(config_.store_dir, store_options(config_), embedder_));
}

Service::~Service() = default;

std::shared_ptr<const store::Store> Service::snapshot() const {
  std::lock_guard lock(store_mutex_);
  return store_;
}

ApiResponse Service::handle(const ApiRequest& request) {
  const auto started = std::chrono::steady_clock::now();
  ApiResponse response;
  try {
    const auto& p = request.path;
    const bool get = request.method == "GET";
    const bool post = request.method == "POST";
    auto route = [&](bool method_ok) {
      if (!method_ok) {
        response.status = 405;
        response.body = api_error("method_not_allowed", request.method + " " + p + " is not allowed");
        return false;
      }
      return true;
    };
    if (p == "/health") {
      if (route(get)) response.body = health();
    } else if (p == "/search") {
      if (route(get)) response.body = search(request);
    } else if (p == "/config") {
      if (route(get)) response.body = config_.to_json();
    } else if (p == "/ingest") {
      if (route(post)) response.body = ingest(parse_body(request.body));
    } else if (p == "/ask") {
      if (route(post)) response.body = ask(parse_body(request.body));
    } else if (p == "/extract") {
      if (route(post)) response.body = extract(parse_body(request.body));
    } else if (p == "/summarize") {
      if (route(post)) response.body = summarize(parse_body(request.body));
    } else if (p == "/classify/train") {
      if (route(post)) response.body = classify_train(parse_body(request.body));
    } else if (p == "/classify/predict") {
      if (route(post)) response.body = classify_predict(parse_body(request.body));
    } else {
      response.status = 404;
      response.body = api_error("not_found", "no route for " + p);
    }
  } catch (const Error& e) {
    response.status = http_status(e.code());
    response.body = api_error(std::string(error_code_name(e.code())), e.what(), e.detail());
  } catch (const std::exception& e) {
    response.status = 500;
    response.body = api_error("internal", e.what());
  }
  if (logger_) {
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              started)
                        .count();
    json fields = {{"method", request.method},
                   {"path", request.path},
                   {"status", response.status},
                   {"ms", ms}};
    if (response.status >= 400) fields["code"] = response.body.value("code", "");
    logger_->log(response.status >= 500 ? Logger::Level::kError : Logger::Level::kInfo,
                 "request", std::move(fields));
  }
  return response;
}

json Service::health() const {
  const auto s = snapshot();
  return {{"status", "ok"},
          {"version", kVersion},
          {"store_kind", store::store_kind_name(s->kind())},
          {"chunks", s->chunk_count()},
          {"generation", s->manifest().generation}};
}

json Service::ingest(const json& body) {
  const fs::path root = req_string(body, "path");
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::kInvalidArgument, "not a directory: " + root.string(),
                json{{"field", "path"}});
  }
  std::unique_lock busy(ingest_mutex_, std::try_to_lock);
  if (!busy.owns_lock()) {
    throw Error(ErrorCode::kIngestInProgress, "ingestion in progress");
  }
  store::StoreLock lock(config_.store_dir);
  // Reopen under the lock so a commit by another process is not lost.
  auto working = store::Store::open(config_.store_dir, store_options(config_), embedder_);
  const auto report = ingest::ingest_folder(root, working, config_.chunking);
  {
    std::lock_guard guard(store_mutex_);
    store_ = std::make_shared<const store::Store>(std::move(working));
  }
  if (logger_) logger_->info("ingest", report.to_json());
  return report.to_json();
}

json Service::search(const ApiRequest& request) const {
  auto q = request.params.find("q");
  if (q == request.params.end()) throw bad_field("q", "required");
  auto mode = store::SearchMode::kKeyword;
  if (auto m = request.params.find("mode"); m != request.params.end() && !m->second.empty()) {
    auto parsed = store::parse_search_mode(m->second);
    if (!parsed) throw bad_field("mode", "expected keyword, semantic or hybrid");
    mode = *parsed;
  }
  const auto page = param_size(request, "page", 1, 1, 1000000);
  const auto page_size = param_size(request, "page_size", 10, 1, 1000);
  // Syntax errors are reported before anything else, also on an empty store.
  if (mode != store::SearchMode::kSemantic) sparse::parse_query(q->second);
  const auto s = snapshot();
  if (s->empty()) throw Error(ErrorCode::kStoreEmpty, "the store has no documents; ingest first");
  return s->search(mode, q->second, page, page_size).to_json();
}

json Service::ask(const json& body) const {
  const auto question = req_string(body, "question");
  const auto k = opt_size(body, "k", 1, kMaxK).value_or(4);
  const auto s = snapshot();
  return pipelines::ask(question, *s, *backend_, k, std::nullopt, base_request(body)).to_json();
}

std::string Service::document_or_404(const std::string& source_path) const {
  const auto s = snapshot();
  auto text = s->document_text(source_path);
  if (!text && !source_path.empty()) {
    // Sources are recorded by absolute path; accept relative spellings too.
    std::error_code ec;
    const auto absolute = fs::absolute(source_path, ec).lexically_normal();
    if (!ec) text = s->document_text(absolute.string());
  }
  if (!text) {
    throw Error(ErrorCode::kNotFound, "unknown source: " + source_path,
                json{{"source_path", source_path}});
  }
  return *text;
}

json Service::extract(const json& body) const {
  if (!body.contains("schema")) throw bad_field("schema", "required");
  llm::ExtractionSchema schema;
  try {
    schema = llm::ExtractionSchema::from_json(body.at("schema"));
  } catch (const Error& e) {
    throw Error(e.code(), std::string("schema: ") + e.what(), json{{"field", "schema"}});
  }
  const auto tpl_text = opt_string(body, "template");
  const llm::PromptTemplate prompt =
      tpl_text ? llm::PromptTemplate(*tpl_text) : pipelines::default_template("extract");
  const auto max_retries = opt_size(body, "max_retries", 0, 10).value_or(2);

  std::vector<pipelines::UnitRef> units;
  const auto source = opt_string(body, "source_path");
  const bool has_units = body.contains("units") && !body.at("units").is_null();
  if (has_units == source.has_value()) {
    throw bad_field("units", "give exactly one of units or source_path");
  }
  if (has_units) {
    const auto& list = body.at("units");
    if (!list.is_array()) throw bad_field("units", "expected an array of strings");
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!list[i].is_string()) throw bad_field("units", "expected an array of strings");
      units.push_back({"", i, list[i].get<std::string>()});
    }
  } else {
    const auto kind_name = opt_string(body, "unit").value_or("passage");
    const auto kind = pipelines::parse_unit_kind(kind_name);
    if (!kind) throw bad_field("unit", "expected sentence, paragraph or passage");
    for (auto& u : pipelines::split_units(document_or_404(*source), *kind, config_.chunking)) {
      units.push_back({*source, u.index, std::move(u.text)});
    }
  }

  const auto records =
      pipelines::extract(units, prompt, schema, *backend_, max_retries, base_request(body));
  json out = {{"records", json::array()}, {"ok", 0}, {"failed", 0}};
  for (const auto& r : records) {
    out["records"].push_back(r.to_json());
    out[r.status == pipelines::RecordStatus::kOk ? "ok" : "failed"] =
        out[r.status == pipelines::RecordStatus::kOk ? "ok" : "failed"].get<int>() + 1;
  }
  const json key = {{"units", out["records"]}, {"schema", schema.to_json()}, {"template", prompt.text()}};
  const fs::path csv = fs::absolute(config_.store_dir / "exports" /
                                    ("extract-" + content_id(key) + ".csv"));
  fs::create_directories(csv.parent_path());
  pipelines::export_csv(records, schema, csv);
  out["csv_path"] = csv.string();
  return out;
}

json Service::summarize(const json& body) const {
  const auto source = opt_string(body, "source_path");
  const auto text = opt_string(body, "text");
  if (source.has_value() == text.has_value()) {
    throw bad_field("source_path", "give exactly one of source_path or text");
  }
  const std::string doc = source ? document_or_404(*source) : *text;
  const auto strategy = opt_string(body, "strategy").value_or("map_reduce");

  pipelines::MapReduceOptions mr;
  mr.unit_params = config_.chunking;
  mr.base = base_request(body);
  if (auto m = opt_size(body, "max_reduce_chars", 100, 10000000)) mr.max_reduce_chars = *m;

  if (strategy == "map_reduce") {
    return pipelines::summarize_map_reduce(doc, *backend_,
                                           pipelines::default_template("summarize_map"),
                                           pipelines::default_template("summarize_reduce"), mr)
        .to_json();
  }
  if (strategy == "concept_focused" || strategy == "concept") {
    pipelines::ConceptOptions opts;
    opts.map_reduce = mr;
    if (auto t = opt_double(body, "sim_threshold")) opts.sim_threshold = *t;
    if (auto m = opt_size(body, "max_units", 1, 10000)) opts.max_units = *m;
    const auto concept_text = req_string(body, "concept");
    return pipelines::summarize_concept(doc, concept_text, *embedder_, *backend_, opts).to_json();
  }
  throw bad_field("strategy", "expected map_reduce or concept_focused");
}

json Service::classify_train(const json& body) const {
  const auto kind_name = opt_string(body, "kind").value_or("tfidf_linear");
  const auto kind = pipelines::parse_model_kind(kind_name);
  if (!kind) throw bad_field("kind", "expected centroid_fewshot or tfidf_linear");
  const auto examples = labeled_examples(body);
  pipelines::TrainingMeta meta;
  if (auto e = opt_size(body, "epochs", 1, 100000)) meta.epochs = *e;
  if (auto lr = opt_double(body, "learning_rate")) meta.learning_rate = *lr;
  if (auto s = opt_size(body, "seed", 0, std::numeric_limits<std::int64_t>::max())) meta.seed = *s;

  const auto model = *kind == pipelines::ModelKind::kCentroidFewshot
                         ? pipelines::train_fewshot(examples, *embedder_)
                         : pipelines::train_tfidf_linear(examples, meta);

  json inputs = json::array();
  for (const auto& e : examples) inputs.push_back({e.text, e.label});
  json key = {{"kind", kind_name},
              {"examples", inputs},
              {"training_meta", model.to_json()["training_meta"]}};
  if (*kind == pipelines::ModelKind::kCentroidFewshot) key["embedder"] = embedder_->fingerprint();
  const auto id = content_id(key);
  const fs::path path = config_.store_dir / "models" / (id + ".json");
  fs::create_directories(path.parent_path());
  io::write_file_atomic(path, model.to_json().dump());
  return {{"model_id", id}, {"kind", kind_name}, {"classes", model.classes}};
}

json Service::classify_predict(const json& body) const {
  const auto id = req_string(body, "model_id");
  const auto text = req_string(body, "text");
  const fs::path path = config_.store_dir / "models" / (id + ".json");
  std::error_code ec;
  if (!is_model_id(id) || !fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kNotFound, "unknown model_id: " + id, json{{"model_id", id}});
  }
  json stored;
  try {
    stored = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptStore, "model file is not valid JSON: " + path.string());
  }
  const auto model = pipelines::LinearTextModel::from_json(stored);
  auto out = pipelines::predict(model, text, embedder_.get()).to_json();
  out["model_id"] = id;
  return out;
}

int Service::bind() {
  server_ = std::make_unique<httplib::Server>();
  auto& srv = *server_;
  const auto threads = std::max<std::size_t>(config_.server.max_in_flight, 2) + 2;
  srv.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  auto adapt = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.params.emplace(k, v);
    const auto out = handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(-1, ' ', false, json::error_handler_t::replace),
                    "application/json");
  };
  srv.Get(R"(/.*)", adapt);
  srv.Post(R"(/.*)", adapt);
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                               std::exception_ptr) {
    res.status = 500;
    res.set_content(api_error("internal", "unhandled server error").dump(), "application/json");
  });
  // Requests with other methods never reach a handler; give them an ApiError.
  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string code = res.status == 404 ? "not_found"
                             : res.status == 405 ? "method_not_allowed"
                                                 : "invalid_argument";
    res.set_content(api_error(code, "request rejected: " + req.method + " " + req.path).dump(),
                    "application/json");
  });
  const auto& host = config_.server.bind_addr;
  int port = config_.server.port;
  if (port == 0) {
    port = srv.bind_to_any_port(host);
  } else if (!srv.bind_to_port(host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error(ErrorCode::kIoError, "cannot bind " + host + ":" + std::to_string(config_.server.port));
  }
  if (logger_) logger_->info("listening", {{"bind_addr", host}, {"port", port}});
  return port;
}

void Service::listen() {
  if (!server_) bind();
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
}

}  // namespace docintel::service
