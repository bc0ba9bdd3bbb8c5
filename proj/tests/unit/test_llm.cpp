#include <doctest.h>

#include <atomic>

#include "docintel/error.hpp"
#include "docintel/llm/backend.hpp"
#include "docintel/llm/structured.hpp"
#include "docintel/llm/template.hpp"
#include "mock_server.hpp"

using namespace docintel;
using namespace docintel::llm;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

ExtractionSchema name_schema() {
  return ExtractionSchema::from_json(nlohmann::json::parse(
      R"([{"name":"name","type":"string"},{"name":"age","type":"integer","required":false}])"));
}

}  // namespace

TEST_CASE("prompt templates") {
  PromptTemplate t("Hello {name}, {{literal}} {name}!");
  CHECK(t.required_vars() == std::set<std::string>{"name"});
  CHECK(t.render({{"name", "Ada"}}) == "Hello Ada, {literal} Ada!");
  CHECK(code_of([&] { t.render({}); }) == ErrorCode::kMissingVar);
  CHECK(code_of([&] { t.render({{"name", "a"}, {"x", "b"}}); }) == ErrorCode::kUnknownVar);
  CHECK(code_of([] { PromptTemplate("a { b"); }) == ErrorCode::kTemplateSyntax);
  CHECK(code_of([] { PromptTemplate("a } b"); }) == ErrorCode::kTemplateSyntax);
  CHECK(code_of([] { PromptTemplate("{1x}"); }) == ErrorCode::kTemplateSyntax);
  // Values are not re-expanded.
  CHECK(PromptTemplate("{a}").render({{"a", "{b}"}}) == "{b}");
}

TEST_CASE("stub backend echo and canned modes") {
  StubBackend echo;
  CompletionRequest r;
  r.prompt = "hi";
  CHECK(echo.complete(r).text == "STUB:hi");
  CHECK(echo.call_count() == 1);
  StubBackend canned({"a", "b"});
  CHECK(canned.complete(r).text == "a");
  CHECK(canned.complete(r).text == "b");
  CHECK(canned.complete(r).text == "a");
  CHECK(canned.call_log().size() == 3);
  canned.clear_log();
  CHECK(canned.call_count() == 0);
}

TEST_CASE("completion request validation") {
  CompletionRequest r;
  r.prompt = "x";
  r.stop = {"1", "2", "3", "4", "5"};
  CHECK(code_of([&] { r.validate(); }) == ErrorCode::kInvalidArgument);
  r.stop.clear();
  r.max_tokens = 0;
  CHECK(code_of([&] { r.validate(); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("http backend maps a chat-completions response") {
  testing::MockServer mock;
  nlohmann::json seen;
  std::string auth;
  mock.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"forty two"},"finish_reason":"stop"}],"usage":{"prompt_tokens":5,"completion_tokens":2}})",
                    "application/json");
  });
  mock.start();
  HttpBackend backend({mock.base_url("/v1"), "local-model", "sekret", std::chrono::seconds(5)});
  CompletionRequest r;
  r.prompt = "question";
  r.stop = {"\n\n"};
  const auto c = backend.complete(r);
  CHECK(c.text == "forty two");
  CHECK(c.finish_reason == FinishReason::kStop);
  CHECK(c.usage.prompt_units == 5);
  CHECK(c.usage.output_units == 2);
  CHECK(seen["model"] == "local-model");
  CHECK(seen["messages"][0]["role"] == "user");
  CHECK(seen["messages"][0]["content"] == "question");
  CHECK(seen["temperature"] == 0.0);
  CHECK(seen["stop"][0] == "\n\n");
  CHECK(auth == "Bearer sekret");
}

TEST_CASE("http backend retries 5xx and fails on 4xx") {
  testing::MockServer mock;
  std::atomic<int> calls{0};
  mock.server().Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"ok"},"finish_reason":"length"}]})",
                    "application/json");
  });
  mock.server().Post("/bad/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content("nope", "text/plain");
  });
  mock.server().Post("/junk/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("{not json", "application/json");
  });
  mock.start();
  HttpBackendOptions opts{mock.base_url(), "m", std::nullopt, std::chrono::seconds(5),
                          std::chrono::milliseconds(1), 2.0, 3};
  CompletionRequest r;
  r.prompt = "p";
  const auto c = HttpBackend(opts).complete(r);
  CHECK(calls == 3);
  CHECK(c.finish_reason == FinishReason::kLength);

  opts.endpoint = mock.base_url("/bad");
  CHECK(code_of([&] { HttpBackend(opts).complete(r); }) == ErrorCode::kHttpStatusError);
  opts.endpoint = mock.base_url("/junk");
  const auto junk = HttpBackend(opts).complete(r);
  CHECK(junk.finish_reason == FinishReason::kError);
  CHECK(!junk.error.is_null());
}

TEST_CASE("unreachable endpoint is a network error") {
  HttpBackendOptions opts{"http://127.0.0.1:1", "m", std::nullopt, std::chrono::seconds(2),
                          std::chrono::milliseconds(1), 2.0, 1};
  CompletionRequest r;
  r.prompt = "p";
  CHECK(code_of([&] { HttpBackend(opts).complete(r); }) == ErrorCode::kNetworkError);
}

TEST_CASE("registry routing") {
  auto reg = BackendRegistry::offline();
  CHECK(reg->has(BackendKind::kStub));
  CHECK_FALSE(reg->has(BackendKind::kHttp));
  CompletionRequest r;
  r.prompt = "x";
  CHECK(reg->complete(r).text == "STUB:x");
  r.backend_hint = BackendKind::kHttp;
  CHECK(code_of([&] { reg->complete(r); }) == ErrorCode::kBackendUnavailable);
}

TEST_CASE("first_json_object respects strings") {
  CHECK(first_json_object("noise {\"a\": \"}\"} tail {\"b\":1}") == "{\"a\": \"}\"}");
  CHECK(!first_json_object("no braces").has_value());
  CHECK(!first_json_object("{ unterminated").has_value());
}

TEST_CASE("validate_structured collects every violation") {
  const auto schema = name_schema();
  auto ok = validate_structured(R"(Sure: {"name":"Ada","age":36.0,"extra":1})", schema);
  REQUIRE(ok.ok());
  CHECK((*ok.record)["age"] == 36);
  CHECK(ok.warnings.size() == 1);
  auto bad = validate_structured(R"({"age":"x"})", schema);
  REQUIRE(bad.violations.size() == 2);
  CHECK(bad.violations[0].kind == ViolationKind::kMissing);
  CHECK(bad.violations[1].kind == ViolationKind::kWrongType);
  CHECK(validate_structured("nope", schema).violations[0].kind == ViolationKind::kNoJsonFound);
  CHECK(validate_structured("{\"name\": }", schema).violations[0].kind == ViolationKind::kInvalidJson);
  CHECK(validate_structured(R"({"name":"a","age":1.5})", schema).violations[0].field == "age");
}

TEST_CASE("schema validation") {
  CHECK(code_of([] { ExtractionSchema::from_json(nlohmann::json::parse(R"([{"name":"Bad Name","type":"string"}])")); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(code_of([] { ExtractionSchema::from_json(nlohmann::json::parse(R"([{"name":"a","type":"date"}])")); }) ==
        ErrorCode::kInvalidArgument);
  const auto s = ExtractionSchema::from_json(nlohmann::json::parse(R"({"fields":[{"name":"tags","type":"string_list"}]})"));
  CHECK(ExtractionSchema::from_json(s.to_json()) == s);
}

TEST_CASE("structured completion retry accounting") {
  const auto schema = name_schema();
  {
    StubBackend stub({"nope", R"({"name":"Ada"})"});
    const auto r = complete_structured("extract", schema, stub, 2);
    CHECK(r.attempts == 2);
    CHECK(stub.call_count() == 2);
    CHECK(r.record["name"] == "Ada");
    // The retry prompt carries the violations.
    CHECK(stub.call_log()[1].prompt.find("no_json_found") != std::string::npos);
  }
  {
    StubBackend stub({"nope"});
    try {
      complete_structured("extract", schema, stub, 2);
      FAIL("expected StructuredFailure");
    } catch (const StructuredFailure& e) {
      CHECK(e.attempts() == 3);
      CHECK(e.last_raw() == "nope");
      CHECK(stub.call_count() == 3);
    }
  }
  {
    StubBackend stub({"nope"});
    CHECK_THROWS_AS(complete_structured("extract", schema, stub, 0), StructuredFailure);
    CHECK(stub.call_count() == 1);
  }
}
