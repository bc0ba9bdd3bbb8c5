#include <doctest.h>

#include <cstdlib>
#include <future>
#include <sstream>

#include <httplib.h>

#include "docintel/service/runtime.hpp"
#include "docintel/service/service.hpp"
#include "embedders.hpp"
#include "fixtures.hpp"

using namespace docintel;
using namespace docintel::service;
using nlohmann::json;

namespace {

struct Harness {
  testing::TempDir dir;
  testing::TempDir docs;
  Config config;
  std::ostringstream log_text;
  Logger logger{log_text};
  std::unique_ptr<Service> service;

  explicit Harness(std::shared_ptr<const dense::Embedder> embedder = nullptr,
                   const std::string& config_text = "") {
    config = parse_config(config_text);
    config.store_dir = dir / "store";
    config.embedder.dim = 64;
    if (!embedder) embedder = make_embedder(config);
    service = std::make_unique<Service>(config, embedder, make_backend(config), &logger);
    testing::write_five_file_fixture(docs.path());
  }

  ApiResponse get(const std::string& path, std::map<std::string, std::string> params = {}) {
    return service->handle({"GET", path, std::move(params), ""});
  }
  ApiResponse post(const std::string& path, const json& body) {
    return service->handle({"POST", path, {}, body.dump()});
  }
  void ingest() { REQUIRE(post("/ingest", {{"path", docs.path().string()}}).status == 200); }
};

void check_api_error(const ApiResponse& r, int status, const std::string& code) {
  CHECK(r.status == status);
  CHECK(r.body["code"] == code);
  CHECK(r.body["message"].is_string());
  for (const auto& [k, v] : r.body.items()) {
    CHECK((k == "code" || k == "message" || k == "detail"));
  }
}

}  // namespace

TEST_CASE("health") {
  Harness h;
  const auto r = h.get("/health");
  CHECK(r.status == 200);
  CHECK(r.body["status"] == "ok");
  CHECK(r.body["version"] == kVersion);
  CHECK(r.body["chunks"] == 0);
}

TEST_CASE("search errors") {
  Harness h;
  const auto bad = h.get("/search", {{"q", "zebra AND ("}});
  check_api_error(bad, 400, "parse_error");
  CHECK(bad.body["detail"]["position"] == 11);
  check_api_error(h.get("/search", {{"q", "okapi"}}), 409, "store_empty");
  check_api_error(h.get("/search", {}), 400, "invalid_argument");
  check_api_error(h.get("/search", {{"q", ""}}), 400, "empty_query");
  h.ingest();
  check_api_error(h.get("/search", {{"q", "NOT okapi"}}), 400, "pure_negation_query");
  check_api_error(h.get("/search", {{"q", "x"}, {"page", "0"}}), 400, "invalid_argument");
  check_api_error(h.get("/search", {{"q", "x"}, {"page_size", "abc"}}), 400, "invalid_argument");
  check_api_error(h.get("/search", {{"q", "x"}, {"mode", "fuzzy"}}), 400, "invalid_argument");
}

TEST_CASE("ingest then search and ask") {
  Harness h;
  const auto report = h.post("/ingest", {{"path", h.docs.path().string()}});
  REQUIRE(report.status == 200);
  CHECK(report.body["files_ingested"] == 5);
  CHECK(report.body["chunks_added"].get<int>() > 0);
  CHECK(h.get("/health").body["chunks"].get<int>() > 0);

  const auto page = h.get("/search", {{"q", "okapi"}, {"page_size", "5"}});
  REQUIRE(page.status == 200);
  CHECK(page.body["total_hits"] == 1);
  CHECK(page.body["hits"][0]["snippet"].get<std::string>().find("**okapi**") != std::string::npos);
  for (const char* mode : {"semantic", "hybrid", "keyword"}) {
    CHECK(h.get("/search", {{"q", "okapi"}, {"mode", mode}}).status == 200);
  }

  const auto answer = h.post("/ask", {{"question", "Where does the okapi live?"}, {"k", 3}});
  REQUIRE(answer.status == 200);
  bool found = false;
  for (const auto& s : answer.body["sources"]) {
    found = found || s["source_path"].get<std::string>().ends_with("animals.txt");
  }
  CHECK(found);
  CHECK(answer.body["answer_text"].get<std::string>().rfind("STUB:", 0) == 0);
  check_api_error(h.post("/ask", {{"question", " "}}), 400, "empty_question");
  check_api_error(h.post("/ask", {{"question", "x"}, {"k", 0}}), 400, "invalid_argument");
  check_api_error(h.post("/ask", {{"question", "x"}, {"backend", "http"}}), 503, "backend_unavailable");
  check_api_error(h.post("/ingest", {{"path", "/nonexistent/dir"}}), 400, "invalid_argument");
}

TEST_CASE("routing and body errors are ApiErrors") {
  Harness h;
  check_api_error(h.get("/nope"), 404, "not_found");
  check_api_error(h.get("/ask"), 405, "method_not_allowed");
  check_api_error(h.service->handle({"POST", "/ask", {}, "{bad json"}), 400, "invalid_argument");
  check_api_error(h.service->handle({"POST", "/ask", {}, "[1,2]"}), 400, "invalid_argument");
  check_api_error(h.post("/ask", {{"question", 5}}), 400, "invalid_argument");
}

TEST_CASE("extract over inline units and a stored source") {
  Harness h;
  const json schema = json::array({{{"name", "name"}, {"type", "string"}}});
  const auto r = h.post("/extract", {{"units", {"a", "b"}}, {"schema", schema}, {"max_retries", 0}});
  REQUIRE(r.status == 200);
  CHECK(r.body["records"].size() == 2);
  CHECK(r.body["failed"] == 2);  // echo output has no JSON
  const std::filesystem::path csv = r.body["csv_path"].get<std::string>();
  CHECK(std::filesystem::exists(csv));
  CHECK(csv.parent_path().filename() == "exports");

  h.ingest();
  const auto animals = (h.docs / "animals.txt").string();
  const auto src = h.post("/extract", {{"source_path", animals}, {"unit", "sentence"}, {"schema", schema},
                                       {"template", "Give JSON for: {unit}"}, {"max_retries", 0}});
  REQUIRE(src.status == 200);
  CHECK(src.body["records"].size() == 2);
  CHECK(src.body["records"][1]["unit_ref"]["unit_index"] == 1);
  check_api_error(h.post("/extract", {{"source_path", "/missing.txt"}, {"schema", schema}}), 404, "not_found");
  check_api_error(h.post("/extract", {{"units", {"a"}}}), 400, "invalid_argument");
  check_api_error(h.post("/extract", {{"units", {"a"}}, {"schema", schema}, {"template", "{x}"}}), 400,
                  "invalid_argument");
  check_api_error(h.post("/extract", {{"units", {"a"}}, {"source_path", animals}, {"schema", schema}}), 400,
                  "invalid_argument");
}

TEST_CASE("summarize") {
  Harness h;
  const auto r = h.post("/summarize", {{"text", "One. Two."}});
  REQUIRE(r.status == 200);
  CHECK(r.body["strategy"] == "map_reduce");
  CHECK(r.body["llm_calls"] == 1);
  h.ingest();
  const auto c = h.post("/summarize", {{"source_path", (h.docs / "animals.txt").string()},
                                       {"strategy", "concept_focused"},
                                       {"concept", "okapi rainforest"},
                                       {"sim_threshold", 0.1}});
  REQUIRE(c.status == 200);
  CHECK(c.body["strategy"] == "concept_focused");
  check_api_error(h.post("/summarize", {{"text", "x"}, {"strategy", "concept_focused"}}), 400, "invalid_argument");
  check_api_error(h.post("/summarize", {{"source_path", "/nope.txt"}}), 404, "not_found");
  check_api_error(h.post("/summarize", {{"text", "x"}, {"strategy", "abstractive"}}), 400, "invalid_argument");
}

TEST_CASE("classify train and predict") {
  Harness h;
  const json examples = json::array({{{"text", "apple banana"}, {"label", "fruit"}},
                                     {{"text", "banana mango"}, {"label", "fruit"}},
                                     {{"text", "hammer drill"}, {"label", "tool"}},
                                     {{"text", "saw hammer"}, {"label", "tool"}}});
  const auto t1 = h.post("/classify/train", {{"kind", "tfidf_linear"}, {"dataset", examples}});
  REQUIRE(t1.status == 200);
  const auto id = t1.body["model_id"].get<std::string>();
  CHECK(h.post("/classify/train", {{"kind", "tfidf_linear"}, {"dataset", examples}}).body["model_id"] == id);
  CHECK(std::filesystem::exists(h.config.store_dir / "models" / (id + ".json")));
  const auto p = h.post("/classify/predict", {{"model_id", id}, {"text", "drill"}});
  REQUIRE(p.status == 200);
  CHECK(p.body["label"] == "tool");

  const auto t2 = h.post("/classify/train", {{"kind", "centroid_fewshot"}, {"examples", examples}});
  REQUIRE(t2.status == 200);
  CHECK(t2.body["model_id"] != id);
  CHECK(h.post("/classify/predict", {{"model_id", t2.body["model_id"]}, {"text", "apple"}}).body["label"] == "fruit");

  check_api_error(h.post("/classify/predict", {{"model_id", "0123456789abcdef0123456789abcdef"}, {"text", "x"}}),
                  404, "not_found");
  check_api_error(h.post("/classify/predict", {{"model_id", "../../etc/passwd"}, {"text", "x"}}), 404, "not_found");
  check_api_error(h.post("/classify/train", {{"examples", json::array({{{"text", "a"}, {"label", "x"}}})}}),
                  400, "single_class");
  check_api_error(h.post("/classify/train", {{"kind", "svm"}, {"examples", examples}}), 400, "invalid_argument");
}

TEST_CASE("config and logs never contain key material") {
  const std::string secret = "sk-test-aaaabbbbccccdddd";
  setenv("DOCINTEL_TEST_SECRET", secret.c_str(), 1);
  Harness h(nullptr,
            "[llm]\nbackend = http\nendpoint = http://127.0.0.1:1/v1\nmodel = m\n"
            "api_key_env = DOCINTEL_TEST_SECRET\ntimeout_ms = 2000\n");
  h.ingest();
  const auto cfg = h.get("/config");
  REQUIRE(cfg.status == 200);
  CHECK(cfg.body["llm"]["api_key_env"] == "DOCINTEL_TEST_SECRET");
  CHECK(cfg.body.dump().find(secret) == std::string::npos);
  const auto r = h.post("/ask", {{"question", "okapi?"}});
  check_api_error(r, 502, "network_error");
  CHECK(r.body.dump().find(secret) == std::string::npos);
  CHECK(h.log_text.str().find("\"event\":\"request\"") != std::string::npos);
  CHECK(h.log_text.str().find(secret) == std::string::npos);
  unsetenv("DOCINTEL_TEST_SECRET");
}

TEST_CASE("a second concurrent ingest gets 409") {
  auto slow = std::make_shared<testing::FaultyEmbedder>(64, "", std::chrono::milliseconds(150));
  Harness h(slow);
  auto first = std::async(std::launch::async, [&] {
    return h.post("/ingest", {{"path", h.docs.path().string()}});
  });
  while (slow->calls() == 0) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  const auto second = h.post("/ingest", {{"path", h.docs.path().string()}});
  check_api_error(second, 409, "ingest_in_progress");
  const auto done = first.get();
  CHECK(done.status == 200);
  // Reads kept working and the store is consistent afterwards.
  const auto s = h.service->snapshot();
  CHECK(s->dual()->sparse().doc_count() == s->dual()->dense().chunk_count());
  CHECK(h.post("/ingest", {{"path", h.docs.path().string()}}).body["files_skipped_unchanged"] == 5);
}

TEST_CASE("another process holding the store lock gives 409") {
  Harness h;
  store::StoreLock lock(h.config.store_dir);
  check_api_error(h.post("/ingest", {{"path", h.docs.path().string()}}), 409, "ingest_in_progress");
}

TEST_CASE("http transport") {
  Harness h;
  h.config.server.port = 0;
  Service svc(h.config, make_embedder(h.config), make_backend(h.config));
  const int port = svc.bind();
  std::thread t([&] { svc.listen(); });
  httplib::Client cli("127.0.0.1", port);
  for (int i = 0; i < 100 && !cli.Get("/health"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  auto r = cli.Get("/health");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(json::parse(r->body)["status"] == "ok");
  r = cli.Get("/search?q=%22unbalanced");
  REQUIRE(r);
  CHECK(r->status == 400);
  CHECK(json::parse(r->body)["detail"]["position"] == 0);
  r = cli.Post("/ingest", json{{"path", h.docs.path().string()}}.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  r = cli.Get("/search?q=okapi&mode=hybrid&page=1&page_size=2");
  REQUIRE(r);
  CHECK(json::parse(r->body)["hits"].size() == 2);
  r = cli.Delete("/health");
  REQUIRE(r);
  CHECK(r->status >= 400);
  CHECK(json::parse(r->body).contains("code"));
  r = cli.Post("/ask", "not json", "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);
  svc.stop();
  t.join();
}

TEST_CASE("status mapping") {
  CHECK(http_status(ErrorCode::kParseError) == 400);
  CHECK(http_status(ErrorCode::kNotFound) == 404);
  CHECK(http_status(ErrorCode::kIngestInProgress) == 409);
  CHECK(http_status(ErrorCode::kBackendUnavailable) == 503);
  CHECK(http_status(ErrorCode::kNetworkError) == 502);
  CHECK(http_status(ErrorCode::kInternal) == 500);
}
