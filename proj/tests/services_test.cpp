#include <doctest.h>

#include <atomic>
#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

#include "support/http_server.hpp"
#include "support/scripted.hpp"
#include "textrepair/error.hpp"
#include "textrepair/services.hpp"

using namespace textrepair;
using nlohmann::json;

namespace {

HttpOptions fast_options() {
  HttpOptions o;
  o.timeout = std::chrono::milliseconds(2000);
  o.retries = 2;
  o.backoff_base = std::chrono::milliseconds(1);
  o.backoff_cap = std::chrono::milliseconds(4);
  return o;
}

}  // namespace

TEST_CASE("HttpOptions: validation") {
  HttpOptions o;
  CHECK_NOTHROW(o.validate());
  o.retries = -1;
  CHECK_THROWS_AS(o.validate(), ConfigError);
  o = {};
  o.timeout = std::chrono::milliseconds(0);
  CHECK_THROWS_AS(o.validate(), ConfigError);
  o = {};
  o.max_in_flight = 0;
  CHECK_THROWS_AS(o.validate(), ConfigError);
}

TEST_CASE("MockTranslator: empty tables act as the identity") {
  MockTranslator t;
  CHECK(t.translate("Hello there, friend!", "en", "fr") == "Hello there, friend!");
}

TEST_CASE("MockTranslator: token mappings apply per language pair") {
  MockTranslator t;
  t.add_mapping("en", "de", "good", "gut");
  t.add_mapping("de", "en", "gut", "nice");  // drift on the way back
  auto there = t.translate("A good day. Good times!", "en", "de");
  CHECK(there == "A gut day. Gut times!");
  auto back = t.translate(there, "de", "en");
  CHECK(back == "A nice day. Nice times!");
}

TEST_CASE("MockTranslator: punctuation and spacing survive the round trip") {
  MockTranslator t;
  t.add_mapping("en", "xx", "alpha", "beta");
  CHECK(t.translate("alpha,  (alpha)!", "en", "xx") == "beta,  (beta)!");
}

TEST_CASE("MockTranslator: argument validation") {
  MockTranslator t;
  CHECK_THROWS_AS(t.translate("", "en", "fr"), ConfigError);
  CHECK_THROWS_AS(t.translate("x", "en", "en"), ConfigError);
  CHECK_THROWS_AS(t.translate("x", "", "fr"), ConfigError);
  CHECK_THROWS_AS(t.translate("x", "en", ""), ConfigError);
}

TEST_CASE("CountingTranslator tallies calls") {
  MockTranslator inner;
  CountingTranslator counting(inner);
  CHECK(counting.calls() == 0);
  counting.translate("one", "en", "fr");
  counting.translate("two", "en", "fr");
  CHECK(counting.calls() == 2);
  CHECK(counting.total_ms() >= 0.0);
}

TEST_CASE("MemoizingTranslator: repeats hit the backend once") {
  MockTranslator inner;
  CountingTranslator counting(inner);
  MemoizingTranslator memo(counting);
  CHECK(memo.translate("same text", "en", "fr") == "same text");
  CHECK(memo.translate("same text", "en", "fr") == "same text");
  CHECK(counting.calls() == 1);
  // Different language pair is a different key.
  memo.translate("same text", "en", "de");
  CHECK(counting.calls() == 2);
  // Distinct fields never collide even with tricky contents.
  memo.translate("fr same text", "en", "fr");
  CHECK(counting.calls() == 3);
}

TEST_CASE("HttpTranslator: round trip against a live endpoint") {
  trtest::TestServer server;
  server.raw().Post("/v1/translate", [](const httplib::Request& req,
                                        httplib::Response& res) {
    auto body = json::parse(req.body);
    REQUIRE(body.contains("q"));
    REQUIRE(body.contains("from"));
    REQUIRE(body.contains("to"));
    json out = {{"text", "[" + body["to"].get<std::string>() + "] " +
                             body["q"].get<std::string>()}};
    res.set_content(out.dump(), "application/json");
  });
  server.start();

  HttpTranslator t(server.url(), fast_options());
  CHECK(t.translate("hello", "en", "fr") == "[fr] hello");
}

TEST_CASE("HttpTranslator: transient 500s are retried until success") {
  trtest::TestServer server;
  std::atomic<int> hits{0};
  server.raw().Post("/v1/translate", [&](const httplib::Request&,
                                         httplib::Response& res) {
    if (++hits < 3) {
      res.status = 500;
      return;
    }
    res.set_content(R"({"text":"ok"})", "application/json");
  });
  server.start();

  HttpTranslator t(server.url(), fast_options());  // retries=2 -> 3 attempts
  CHECK(t.translate("x", "en", "fr") == "ok");
  CHECK(hits.load() == 3);
}

TEST_CASE("HttpTranslator: persistent 500 exhausts retries with TransportError") {
  trtest::TestServer server;
  std::atomic<int> hits{0};
  server.raw().Post("/v1/translate", [&](const httplib::Request&,
                                         httplib::Response& res) {
    ++hits;
    res.status = 503;
  });
  server.start();

  HttpTranslator t(server.url(), fast_options());
  CHECK_THROWS_AS(t.translate("x", "en", "fr"), TransportError);
  CHECK(hits.load() == 3);  // retries + 1
}

TEST_CASE("HttpTranslator: 4xx is terminal, not retried") {
  trtest::TestServer server;
  std::atomic<int> hits{0};
  server.raw().Post("/v1/translate", [&](const httplib::Request&,
                                         httplib::Response& res) {
    ++hits;
    res.status = 400;
  });
  server.start();

  HttpTranslator t(server.url(), fast_options());
  CHECK_THROWS_AS(t.translate("x", "en", "fr"), TransportError);
  CHECK(hits.load() == 1);
}

TEST_CASE("HttpTranslator: malformed reply is a ProtocolError and not retried") {
  trtest::TestServer server;
  std::atomic<int> hits{0};
  server.raw().Post("/v1/translate", [&](const httplib::Request&,
                                         httplib::Response& res) {
    ++hits;
    res.set_content("this is not json", "application/json");
  });
  server.start();

  HttpTranslator t(server.url(), fast_options());
  CHECK_THROWS_AS(t.translate("x", "en", "fr"), ProtocolError);
  CHECK(hits.load() == 1);
}

TEST_CASE("HttpTranslator: missing or empty text field is a ProtocolError") {
  trtest::TestServer server;
  server.raw().Post("/v1/translate", [](const httplib::Request& req,
                                        httplib::Response& res) {
    auto body = json::parse(req.body);
    if (body["q"] == "give-missing") {
      res.set_content(R"({"result":"nope"})", "application/json");
    } else {
      res.set_content(R"({"text":""})", "application/json");
    }
  });
  server.start();

  HttpTranslator t(server.url(), fast_options());
  CHECK_THROWS_AS(t.translate("give-missing", "en", "fr"), ProtocolError);
  CHECK_THROWS_AS(t.translate("give-empty", "en", "fr"), ProtocolError);
}

TEST_CASE("HttpTranslator: dead endpoint raises TransportError") {
  // Nothing listens on this port (bind-then-close gives us a free one).
  HttpOptions o = fast_options();
  o.timeout = std::chrono::milliseconds(200);
  o.retries = 1;
  HttpTranslator t("http://127.0.0.1:1", o);
  CHECK_THROWS_AS(t.translate("x", "en", "fr"), TransportError);
}

TEST_CASE("classify_remote: batch round trip preserves order") {
  trtest::TestServer server;
  server.raw().Post("/v1/classify", [](const httplib::Request& req,
                                       httplib::Response& res) {
    auto body = json::parse(req.body);
    json probs = json::array();
    for (const auto& t : body["texts"]) {
      if (t.get<std::string>() == "first") {
        probs.push_back({0.9, 0.1});
      } else {
        probs.push_back({0.2, 0.8});
      }
    }
    res.set_content(json{{"probs", probs}}.dump(), "application/json");
  });
  server.start();

  auto names = trtest::ab_labels();
  auto out = classify_remote(server.url(), {"first", "second"}, names, fast_options());
  REQUIRE(out.size() == 2);
  CHECK(out[0][0] == doctest::Approx(0.9));
  CHECK(out[1][1] == doctest::Approx(0.8));
  CHECK(out[0].label_names == names);
}

TEST_CASE("classify_remote: slightly off sums are renormalized") {
  trtest::TestServer server;
  server.raw().Post("/v1/classify", [](const httplib::Request&,
                                       httplib::Response& res) {
    res.set_content(R"({"probs":[[0.5,0.5005]]})", "application/json");
  });
  server.start();

  auto out = classify_remote(server.url(), {"x"}, trtest::ab_labels(), fast_options());
  REQUIRE(out.size() == 1);
  double sum = out[0][0] + out[0][1];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("classify_remote: badly off sums are a ProtocolError") {
  trtest::TestServer server;
  server.raw().Post("/v1/classify", [](const httplib::Request&,
                                       httplib::Response& res) {
    res.set_content(R"({"probs":[[0.5,0.51]]})", "application/json");
  });
  server.start();
  CHECK_THROWS_AS(
      classify_remote(server.url(), {"x"}, trtest::ab_labels(), fast_options()),
      ProtocolError);
}

TEST_CASE("classify_remote: row count mismatch is a ProtocolError") {
  trtest::TestServer server;
  server.raw().Post("/v1/classify", [](const httplib::Request&,
                                       httplib::Response& res) {
    res.set_content(R"({"probs":[[0.5,0.5]]})", "application/json");
  });
  server.start();
  CHECK_THROWS_AS(
      classify_remote(server.url(), {"a", "b"}, trtest::ab_labels(), fast_options()),
      ProtocolError);
}

TEST_CASE("classify_remote: entries outside [0,1] are a ProtocolError") {
  trtest::TestServer server;
  server.raw().Post("/v1/classify", [](const httplib::Request&,
                                       httplib::Response& res) {
    res.set_content(R"({"probs":[[1.4,-0.4]]})", "application/json");
  });
  server.start();
  CHECK_THROWS_AS(
      classify_remote(server.url(), {"x"}, trtest::ab_labels(), fast_options()),
      ProtocolError);
}

TEST_CASE("classify_remote: empty batch is an error in the request, not a call") {
  CHECK_THROWS_AS(classify_remote("http://127.0.0.1:1", {}, trtest::ab_labels(),
                                  fast_options()),
                  ConfigError);
}

TEST_CASE("RemoteClassifier: classify and batched classify against a server") {
  trtest::TestServer server;
  std::atomic<int> posts{0};
  server.raw().Post("/v1/classify", [&](const httplib::Request& req,
                                        httplib::Response& res) {
    ++posts;
    auto body = json::parse(req.body);
    json probs = json::array();
    for (size_t i = 0; i < body["texts"].size(); ++i) probs.push_back({0.75, 0.25});
    res.set_content(json{{"probs", probs}}.dump(), "application/json");
  });
  server.start();

  RemoteClassifier c("remote-f1", server.url(), {"a", "b"}, fast_options());
  auto p = c.classify("text");
  CHECK(p[0] == doctest::Approx(0.75));
  CHECK((*c.label_names())[0] == "a");

  auto batch = c.classify_batch({"t1", "t2", "t3"});
  CHECK(batch.size() == 3);
  CHECK(posts.load() == 2);  // one call for classify, one for the whole batch
}

TEST_CASE("RemoteClassifier: errors name the backend id") {
  RemoteClassifier c("prod-f2", "http://127.0.0.1:1",
                     {"a", "b"},
                     [] {
                       auto o = fast_options();
                       o.timeout = std::chrono::milliseconds(150);
                       o.retries = 0;
                       return o;
                     }());
  try {
    c.classify("x");
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(std::string(e.what()).find("prod-f2") != std::string::npos);
  }
}
