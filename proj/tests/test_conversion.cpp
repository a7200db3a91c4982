#include "doctest.h"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include "fhirsculptor/httplib_config.hpp"

#include "fhirsculptor/backend.hpp"
#include "fhirsculptor/conversion.hpp"
#include "support.hpp"

using namespace fhirsculptor;
using nlohmann::json;

namespace {

BackendConfig fast_config(int max_in_flight = 4, int retries = 3) {
  BackendConfig config;
  config.max_in_flight = max_in_flight;
  config.max_retries = retries;
  config.retry_base_delay_ms = 1;
  return config;
}

/// Answers from a fixed per-kind script; optionally tracks the number of
/// simultaneous calls and jitters completion order.
class FakeBackend : public Backend {
 public:
  std::string_view name() const override { return "fake"; }

  CompletionResult complete(const BackendRequest& request) override {
    int now = in_flight_.fetch_add(1) + 1;
    int seen = max_in_flight_.load();
    while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
    }
    if (jitter_) {
      thread_local std::mt19937 rng(std::random_device{}());
      std::this_thread::sleep_for(
          std::chrono::microseconds(rng() % 500));
    }
    ++calls_;
    CompletionResult result = respond(request);
    in_flight_.fetch_sub(1);
    return result;
  }

  virtual CompletionResult respond(const BackendRequest& request) {
    (void)request;
    return CompletionResult::success("{}");
  }

  int max_observed() const { return max_in_flight_.load(); }
  int calls() const { return calls_.load(); }
  void set_jitter(bool jitter) { jitter_ = jitter; }

 private:
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
  std::atomic<int> calls_{0};
  bool jitter_ = false;
};

class ScriptedBackend : public FakeBackend {
 public:
  void set_response(ElementKind kind, std::string text) {
    script_[static_cast<size_t>(kind)] = std::move(text);
  }

  CompletionResult respond(const BackendRequest& request) override {
    return CompletionResult::success(
        script_[static_cast<size_t>(request.kind)]);
  }

 private:
  std::array<std::string, kElementKindCount> script_{"{}", "{}", "{}", "{}",
                                                     "[]"};
};

/// Fails the first `failures` calls per (input, kind) with a retryable
/// error, then succeeds.
class FlakyBackend : public FakeBackend {
 public:
  explicit FlakyBackend(int failures) : failures_(failures) {}

  CompletionResult respond(const BackendRequest& request) override {
    std::string key =
        request.input_text + "#" + std::string(to_string(request.kind));
    int seen;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      seen = attempts_[key]++;
    }
    if (seen < failures_) {
      return CompletionResult::failure("simulated transient failure", true);
    }
    return CompletionResult::success("{}");
  }

 private:
  int failures_;
  std::mutex mutex_;
  std::map<std::string, int> attempts_;
};

}  // namespace

TEST_CASE("extract_json strips fences and prose") {
  auto fenced = extract_json("```json\n{\"text\":\"PO\"}\n```");
  REQUIRE(fenced.has_value());
  CHECK((*fenced)["text"] == "PO");

  auto prefixed = extract_json("Sure! Here is the result: {\"value\":5}");
  REQUIRE(prefixed.has_value());
  CHECK((*prefixed)["value"] == 5);

  CHECK(!extract_json("no json here").has_value());
  CHECK(!extract_json("").has_value());
  CHECK(!extract_json("{unbalanced").has_value());

  auto array = extract_json("reasons: [{\"concept\":{\"text\":\"pain\"}}]");
  REQUIRE(array.has_value());
  CHECK(array->is_array());
}

TEST_CASE("extract_json is idempotent on clean JSON") {
  json clean = json::parse(R"({"value":5.0,"unit":"ML"})");
  auto once = extract_json(clean.dump());
  REQUIRE(once.has_value());
  CHECK(*once == clean);
  auto twice = extract_json(once->dump());
  REQUIRE(twice.has_value());
  CHECK(*twice == clean);
}

TEST_CASE("extract_json skips a broken candidate for a later valid one") {
  auto result = extract_json("{\"a\": nope} and then {\"b\": 1}");
  REQUIRE(result.has_value());
  CHECK((*result)["b"] == 1);
}

TEST_CASE("extract_json survives arbitrary byte noise") {
  std::mt19937 rng(99);
  for (int i = 0; i < 500; ++i) {
    std::string noise;
    size_t length = rng() % 200;
    for (size_t j = 0; j < length; ++j) {
      noise += static_cast<char>(rng() % 256);
    }
    (void)extract_json(noise);  // must not throw
  }
  CHECK(true);
}

TEST_CASE("rule-backend conversion equals the sig-parser round trip") {
  RuleBackend backend(testsupport::sig_parser());
  Converter converter(backend, testsupport::tables(), testsupport::prompts(),
                      fast_config());
  const std::string text = "clonazepam 0.5 mg Tablet PO Q4H for headache";
  ConversionResult result = converter.convert_statement("s1", text);

  REQUIRE(result.has_resource());
  REQUIRE(result.validation.has_value());
  CHECK(result.validation->valid);
  CHECK(result.format_failure_count() == 0);

  ParsedSig sig = testsupport::sig_parser().parse_sig(text);
  MedicationStatement expected =
      merge_fragments(testsupport::sig_parser().to_fragments(sig), text);
  CHECK(structural_equals(*result.resource, expected));

  ConversionResult again = converter.convert_statement("s1", text);
  REQUIRE(again.has_resource());
  CHECK(serialize(*again.resource) == serialize(*result.resource));
}

TEST_CASE("all-empty fragments leave the resource absent") {
  ScriptedBackend backend;  // defaults: {} everywhere, [] for reason
  Converter converter(backend, testsupport::tables(), testsupport::prompts(),
                      fast_config());
  ConversionResult result = converter.convert_statement("s1", "anything");
  CHECK(!result.has_resource());
  CHECK(result.fragments.medication.empty());
  CHECK(result.fragments.route.empty());
  CHECK(result.fragments.schedule.empty());
  CHECK(result.fragments.dose.empty());
  CHECK(result.fragments.reason.empty());
  CHECK(result.format_failure_count() == 0);
}

TEST_CASE("an invented route code survives into validation as oov_code") {
  ScriptedBackend backend;
  backend.set_response(
      ElementKind::route,
      R"({"text":"PO","coding":[{"system":"http://snomed.info/sct","code":"12345678","display":"Oral route"}]})");
  Converter converter(backend, testsupport::tables(), testsupport::prompts(),
                      fast_config());
  ConversionResult result = converter.convert_statement("s1", "take PO");
  REQUIRE(result.has_resource());
  // never silently rewritten
  CHECK(result.resource->dosage[0].route->coding[0].code == "12345678");
  REQUIRE(result.validation.has_value());
  CHECK(!result.validation->valid);
  CHECK(result.validation->has_kind(IssueKind::oov_code));
}

TEST_CASE("malformed responses are format failures, not crashes") {
  ScriptedBackend backend;
  backend.set_response(ElementKind::dosage, "I could not find a dose, sorry!");
  Converter converter(backend, testsupport::tables(), testsupport::prompts(),
                      fast_config());
  ConversionResult result = converter.convert_statement("s1", "x");
  CHECK(result.format_failure[static_cast<size_t>(ElementKind::dosage)]);
  CHECK(result.format_failure_count() == 1);
}

TEST_CASE("shape errors are recorded per kind without killing the result") {
  ScriptedBackend backend;
  backend.set_response(ElementKind::medication,
                       R"({"medicationCode":{"text":"ok"}})");
  backend.set_response(ElementKind::schedule, R"({"repeat":{"period":"four"}})");
  Converter converter(backend, testsupport::tables(), testsupport::prompts(),
                      fast_config());
  ConversionResult result = converter.convert_statement("s1", "x");
  REQUIRE(result.has_resource());  // medication fragment still landed
  CHECK(!result.errors[static_cast<size_t>(ElementKind::schedule)].empty());
  CHECK(result.fragments.schedule.empty());
}

TEST_CASE("run_batch is empty for an empty corpus") {
  ScriptedBackend backend;
  Converter converter(backend, testsupport::tables(), testsupport::prompts(),
                      fast_config());
  CHECK(converter.run_batch({}).empty());
}

TEST_CASE("run_batch preserves order at every concurrency level") {
  for (int limit : {1, 4, 8}) {
    FakeBackend backend;
    backend.set_jitter(true);
    Converter converter(backend, testsupport::tables(), testsupport::prompts(),
                        fast_config(limit));
    std::vector<CorpusInput> corpus;
    for (int i = 0; i < 40; ++i) {
      corpus.push_back({"id-" + std::to_string(i), "text"});
    }
    auto results = converter.run_batch(corpus);
    REQUIRE(results.size() == corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i) {
      CHECK(results[i].input_id == corpus[i].id);
    }
    CHECK(backend.max_observed() <= limit);
  }
}

TEST_CASE("a single-flight backend is never called concurrently") {
  class SingleFlight : public FakeBackend {
   public:
    bool single_flight() const override { return true; }
  };
  SingleFlight backend;
  backend.set_jitter(true);
  Converter converter(backend, testsupport::tables(), testsupport::prompts(),
                      fast_config(8));
  std::vector<CorpusInput> corpus;
  for (int i = 0; i < 10; ++i) {
    corpus.push_back({"id-" + std::to_string(i), "text"});
  }
  converter.run_batch(corpus);
  CHECK(backend.max_observed() == 1);
}

TEST_CASE("three inputs with limit one run strictly sequentially") {
  FakeBackend backend;
  Converter converter(backend, testsupport::tables(), testsupport::prompts(),
                      fast_config(1));
  std::vector<CorpusInput> corpus = {{"a", "x"}, {"b", "x"}, {"c", "x"}};
  auto results = converter.run_batch(corpus);
  CHECK(backend.max_observed() == 1);
  CHECK(results[0].input_id == "a");
  CHECK(results[2].input_id == "c");
}

TEST_CASE("transient failures retry up to the configured maximum") {
  // 2 failures per call site, 3 retries: everything eventually succeeds.
  {
    FlakyBackend backend(2);
    Converter converter(backend, testsupport::tables(), testsupport::prompts(),
                        fast_config(4, 3));
    auto results = converter.run_batch({{"a", "t1"}, {"b", "t2"}});
    for (const auto& result : results) {
      for (const auto& error : result.errors) CHECK(error.empty());
    }
  }
  // 2 failures per call site, 1 retry: errors recorded, batch completes.
  {
    FlakyBackend backend(2);
    Converter converter(backend, testsupport::tables(), testsupport::prompts(),
                        fast_config(4, 1));
    auto results = converter.run_batch({{"a", "t1"}});
    REQUIRE(results.size() == 1);
    bool any_error = false;
    for (const auto& error : results[0].errors) {
      if (!error.empty()) any_error = true;
    }
    CHECK(any_error);
  }
}

TEST_CASE("progress hook fires once per completed input") {
  FakeBackend backend;
  Converter converter(backend, testsupport::tables(), testsupport::prompts(),
                      fast_config(4));
  std::vector<CorpusInput> corpus;
  for (int i = 0; i < 12; ++i) {
    corpus.push_back({"id-" + std::to_string(i), "text"});
  }
  std::atomic<size_t> events{0};
  size_t last_total = 0;
  converter.run_batch(corpus, [&](size_t done, size_t total,
                                  const std::string& id) {
    ++events;
    last_total = total;
    CHECK(done >= 1);
    CHECK(!id.empty());
  });
  CHECK(events.load() == corpus.size());
  CHECK(last_total == corpus.size());
}

TEST_CASE("duplicate ids are rejected before any request") {
  FakeBackend backend;
  Converter converter(backend, testsupport::tables(), testsupport::prompts(),
                      fast_config());
  CHECK_THROWS_AS(converter.run_batch({{"same", "a"}, {"same", "b"}}),
                  std::invalid_argument);
  CHECK(backend.calls() == 0);
}

TEST_CASE("remote backend speaks the chat-completion wire contract") {
  json captured_body;
  std::string captured_auth;
  httplib::Server server;
  server.Post("/v1/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                captured_body = json::parse(req.body);
                captured_auth = req.get_header_value("Authorization");
                json content;
                content["text"] = "PO";
                json reply;
                reply["choices"] = json::array(
                    {json{{"message", json{{"role", "assistant"},
                                           {"content", content.dump()}}}}});
                res.set_content(reply.dump(), "application/json");
              });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("TEST_REMOTE_KEY", "secret-token", 1);
  BackendConfig config = fast_config();
  config.endpoint =
      "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  config.model = "test-model";
  config.credentials_env = "TEST_REMOTE_KEY";
  RemoteBackend backend(config);

  BackendRequest request;
  request.kind = ElementKind::route;
  request.input_text = "take PO daily";
  request.system_instructions = "instructions";
  request.prompt = testsupport::prompts().build_prompt(ElementKind::route,
                                                       "take PO daily");
  CompletionResult result = backend.complete(request);
  REQUIRE(result.ok());
  CHECK(extract_json(*result.text).has_value());

  CHECK(captured_auth == "Bearer secret-token");
  CHECK(captured_body["model"] == "test-model");
  CHECK(captured_body["temperature"] == 0.0);
  REQUIRE(captured_body["messages"].size() == 2);
  CHECK(captured_body["messages"][0]["role"] == "system");
  CHECK(captured_body["messages"][1]["role"] == "user");
  CHECK(captured_body["messages"][1]["content"]
            .get<std::string>()
            .find("take PO daily") != std::string::npos);

  server.stop();
  server_thread.join();
}

TEST_CASE("remote backend classifies HTTP failures") {
  httplib::Server server;
  int hits_500 = 0;
  server.Post("/fail500", [&](const httplib::Request&, httplib::Response& res) {
    ++hits_500;
    res.status = 500;
  });
  server.Post("/fail401", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 401;
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("TEST_REMOTE_KEY", "secret-token", 1);
  BackendConfig config = fast_config();
  config.credentials_env = "TEST_REMOTE_KEY";
  config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/fail500";

  RemoteBackend retryable(config);
  BackendRequest request;
  request.kind = ElementKind::route;
  CompletionResult failure = retryable.complete(request);
  CHECK(!failure.ok());
  CHECK(failure.retryable);

  config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/fail401";
  RemoteBackend denied(config);
  CompletionResult auth_failure = denied.complete(request);
  CHECK(!auth_failure.ok());
  CHECK(!auth_failure.retryable);

  server.stop();
  server_thread.join();
}

TEST_CASE("remote backend fails fast without the credential variable") {
  unsetenv("TEST_MISSING_KEY");
  BackendConfig config;
  config.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  config.credentials_env = "TEST_MISSING_KEY";
  CHECK_THROWS_AS(RemoteBackend{config}, ConfigError);
}
