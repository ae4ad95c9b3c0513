#include <gtest/gtest.h>

#include <random>

#include "discoprompt/backends.hpp"
#include "fake_server.hpp"
#include "test_util.hpp"

using namespace discoprompt;
using namespace std::chrono_literals;

namespace {

ScoreRequest request(const std::string& prompt, std::string id = {}) {
  ScoreRequest r;
  r.prompt = prompt;
  r.candidates[Role::top] = {"A", "B", "C", "D"};
  r.candidates[Role::second] = {"a", "b"};
  r.instance_id = std::move(id);
  return r;
}

RemoteOptions fast_options(std::vector<std::string>* log = nullptr) {
  RemoteOptions o;
  o.timeout = 150ms;
  o.retries = 2;
  o.backoff_base = 5ms;
  o.backoff_max = 20ms;
  o.log = [log](const std::string& m) {
    if (log) log->push_back(m);
  };
  return o;
}

BackendFailure failure_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const BackendError& e) {
    return e.failure();
  }
  ADD_FAILURE() << "no BackendError thrown";
  return BackendFailure::malformed_payload;
}

MockTable table() {
  return MockTable::from_json(nlohmann::json::parse(R"({
    "defaults": {"top": [0.25, 0.25, 0.25, 0.25], "second": [0.5, 0.5]},
    "overrides": {"inst-7": {"top": [0, 0, 1, 0]}}})"));
}

}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Mock, DefaultsAndOverrides) {
  MockTable t = table();
  ScoreRequest plain = request("some prompt");
  EXPECT_EQ(mock_score(t, plain).probs.at(Role::top), (std::vector<double>{0.25, 0.25, 0.25, 0.25}));

  ScoreResponse by_id = mock_score(t, request("some prompt", "inst-7"));
  EXPECT_EQ(by_id.probs.at(Role::top), (std::vector<double>{0, 0, 1, 0}));
  EXPECT_EQ(by_id.probs.at(Role::second), (std::vector<double>{0.5, 0.5}));

  // A digest override wins over an id override.
  t.overrides[sha256_hex("some prompt")] = {{Role::top, {1, 0, 0, 0}}};
  EXPECT_EQ(mock_score(t, request("some prompt", "inst-7")).probs.at(Role::top),
            (std::vector<double>{1, 0, 0, 0}));
}

TEST(Mock, DeterministicAndRoundTrips) {
  MockTable t = table();
  ScoreRequest r = request("x y z");
  EXPECT_EQ(mock_score(t, r), mock_score(t, r));
  MockTable again = MockTable::from_json(t.to_json());
  EXPECT_EQ(again.defaults, t.defaults);
  EXPECT_EQ(again.overrides, t.overrides);
}

TEST(Mock, Errors) {
  EXPECT_THROW(MockTable::from_json(nlohmann::json::parse(R"({"defaults": {"top": [0.5, 0.4]}})")),
               ValidationError);
  EXPECT_THROW(MockTable::from_json(nlohmann::json::parse(R"({"defaults": {"bogus": [1]}})")),
               ValidationError);
  EXPECT_THROW(MockTable::from_json(nlohmann::json::parse(R"({"defaults": {"top": ["x"]}})")),
               ValidationError);
  MockTable t = table();
  ScoreRequest r = request("p");
  r.candidates[Role::connective] = {"so"};
  EXPECT_EQ(failure_of([&] { mock_score(t, r); }), BackendFailure::missing_role);
  r = request("p");
  r.candidates[Role::second] = {"a", "b", "c"};
  EXPECT_EQ(failure_of([&] { mock_score(t, r); }), BackendFailure::malformed_payload);
}

TEST(Wire, RequestShape) {
  LabelHierarchy h = testutil::minimal_hierarchy();
  RenderedPrompt rp = render(PromptTemplate::make(Variant::discoprompt, 0), testutil::make_instance("i", "a", "b"), h);
  nlohmann::json w = ScoreRequest::from_rendered(rp, "i").to_wire();
  EXPECT_EQ(w["v"], 1);
  EXPECT_EQ(w["prompt"], rp.text);
  EXPECT_EQ(w["mask_spans"]["connective"][0], rp.mask_spans[0].begin);
  EXPECT_EQ(w["candidates"]["top"], nlohmann::json::array({"A"}));
  EXPECT_EQ(w["soft_tokens"], 0);
  EXPECT_FALSE(w.contains("instance_id"));
}

TEST(Wire, ValidateResponse) {
  ScoreRequest r = request("p");
  auto ok = nlohmann::json::parse(R"({"v": 1, "probs": {"top": [0.1, 0.2, 0.3, 0.4], "second": [1, 0]}})");
  EXPECT_EQ(validate_response(r, ok).probs.at(Role::second), (std::vector<double>{1, 0}));

  // Inside the tolerance the response is renormalized.
  auto near = ok;
  near["probs"]["second"] = {0.5 + 4e-7, 0.5};
  auto v = validate_response(r, near).probs.at(Role::second);
  EXPECT_NEAR(v[0] + v[1], 1.0, 1e-15);

  auto expect = [&](nlohmann::json j, BackendFailure f) {
    EXPECT_EQ(failure_of([&] { validate_response(r, j); }), f) << j.dump();
  };
  auto sum09 = ok;
  sum09["probs"]["top"] = {0.1, 0.2, 0.3, 0.3};
  expect(sum09, BackendFailure::invalid_distribution);
  auto over = ok;
  over["probs"]["second"] = {0.5 + 2e-6, 0.5};
  expect(over, BackendFailure::invalid_distribution);
  auto neg = ok;
  neg["probs"]["second"] = {1.5, -0.5};
  expect(neg, BackendFailure::invalid_distribution);
  auto missing = ok;
  missing["probs"].erase("second");
  expect(missing, BackendFailure::missing_role);
  auto len = ok;
  len["probs"]["second"] = {1};
  expect(len, BackendFailure::malformed_payload);
  auto version = ok;
  version["v"] = 2;
  expect(version, BackendFailure::malformed_payload);
  expect(nlohmann::json::array(), BackendFailure::malformed_payload);
  auto text = ok;
  text["probs"]["second"] = {"x", 1};
  expect(text, BackendFailure::malformed_payload);
}

// Random payloads either validate to proper distributions or raise a
// BackendError; nothing else escapes.
TEST(Wire, ValidatorFuzz) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-0.2, 1.0);
  std::uniform_int_distribution<int> len(0, 5);
  ScoreRequest r = request("p");
  for (int i = 0; i < 2000; ++i) {
    nlohmann::json probs = nlohmann::json::object();
    for (const char* role : {"top", "second"}) {
      std::vector<double> v(len(rng));
      double s = 0;
      for (double& x : v) s += (x = u(rng));
      if (i % 2 && s > 0)
        for (double& x : v) x /= s;
      probs[role] = v;
    }
    nlohmann::json payload{{"v", 1}, {"probs", probs}};
    try {
      ScoreResponse resp = validate_response(r, payload);
      for (const auto& [role, v] : resp.probs) {
        double s = 0;
        for (double x : v) {
          EXPECT_GE(x, 0.0);
          s += x;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
      }
    } catch (const BackendError&) {
    }
  }
}

TEST(Remote, AcceptsValidResponse) {
  testutil::FakeServer server;
  RemoteScorer scorer(server.endpoint(), fast_options());
  ScoreResponse resp = scorer.score(request("ok now"));
  EXPECT_EQ(resp.probs.at(Role::top), (std::vector<double>(4, 0.25)));
  EXPECT_EQ(server.calls(), 1);
}

TEST(Remote, RejectsSumOfPointNine) {
  testutil::FakeServer server;
  RemoteScorer scorer(server.endpoint(), fast_options());
  EXPECT_EQ(failure_of([&] { scorer.score(request("short one")); }), BackendFailure::invalid_distribution);
  EXPECT_EQ(server.calls(), 1);  // invalid content is not retried
}

TEST(Remote, RetriesTimeouts) {
  testutil::FakeServer server;
  std::vector<std::string> log;
  RemoteScorer scorer(server.endpoint(), fast_options(&log));
  EXPECT_EQ(failure_of([&] { scorer.score(request("slow one")); }), BackendFailure::timeout);
  EXPECT_EQ(server.calls_for("slow one"), 3);
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log[0].rfind("retry 1/2", 0), 0u);
  EXPECT_EQ(log[1].rfind("retry 2/2", 0), 0u);
  EXPECT_NE(log[2].find("gave up after 2 retries"), std::string::npos);
}

TEST(Remote, UnreachableEndpoint) {
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  std::vector<std::string> log;
  RemoteScorer scorer("http://127.0.0.1:" + std::to_string(port), fast_options(&log));
  EXPECT_EQ(failure_of([&] { scorer.score(request("ok")); }), BackendFailure::timeout);
  EXPECT_EQ(log.size(), 3u);
}

TEST(Remote, ServerErrorsAndStatuses) {
  testutil::FakeServer server;
  RemoteScorer scorer(server.endpoint(), fast_options());
  EXPECT_EQ(scorer.score(request("flaky one")).probs.at(Role::second), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(server.calls_for("flaky one"), 2);

  EXPECT_EQ(failure_of([&] { scorer.score(request("boom")); }), BackendFailure::http_status);
  EXPECT_EQ(server.calls_for("boom"), 3);
  EXPECT_EQ(failure_of([&] { scorer.score(request("teapot")); }), BackendFailure::http_status);
  EXPECT_EQ(server.calls_for("teapot"), 1);
  EXPECT_EQ(failure_of([&] { scorer.score(request("garbage")); }), BackendFailure::malformed_payload);
  EXPECT_EQ(failure_of([&] { scorer.score(request("norole")); }), BackendFailure::missing_role);
}

TEST(Remote, EndpointParsing) {
  EXPECT_THROW(RemoteScorer("https://example.com"), ValidationError);
  EXPECT_THROW(RemoteScorer("http:///score"), ValidationError);
  EXPECT_NO_THROW(RemoteScorer("http://localhost:9/api/"));
}

TEST(Remote, BackoffGrowsAndCaps) {
  RemoteOptions o;
  o.backoff_base = 100ms;
  o.backoff_max = 300ms;
  o.jitter = 0.25;
  RemoteScorer s("http://localhost:9", o);
  for (int i = 0; i < 20; ++i) {
    auto b1 = s.backoff(1), b2 = s.backoff(2), b5 = s.backoff(5);
    EXPECT_GE(b1.count(), 100);
    EXPECT_LE(b1.count(), 125);
    EXPECT_GE(b2.count(), 200);
    EXPECT_LE(b2.count(), 250);
    EXPECT_GE(b5.count(), 300);
    EXPECT_LE(b5.count(), 375);
  }
}

TEST(Batch, PartialFailuresKeepPositions) {
  testutil::FakeServer server;
  RemoteScorer scorer(server.endpoint(), fast_options());
  std::vector<ScoreRequest> reqs = {request("ok 0"), request("short 1"), request("ok 2"),
                                    request("teapot 3"), request("ok 4"), request("norole 5")};
  for (std::size_t workers : {1u, 4u}) {
    auto items = batch_score(scorer, reqs, workers);
    ASSERT_EQ(items.size(), reqs.size());
    EXPECT_TRUE(items[0].ok());
    EXPECT_EQ(items[1].failure, BackendFailure::invalid_distribution);
    EXPECT_TRUE(items[2].ok());
    EXPECT_EQ(items[3].failure, BackendFailure::http_status);
    EXPECT_TRUE(items[4].ok());
    EXPECT_EQ(items[5].failure, BackendFailure::missing_role);
    EXPECT_FALSE(items[5].error.empty());
  }
}

TEST(Batch, EmptyAndMock) {
  MockScorer mock(table());
  EXPECT_TRUE(batch_score(mock, {}, 4).empty());
  std::vector<ScoreRequest> reqs;
  for (int i = 0; i < 50; ++i) reqs.push_back(request("p" + std::to_string(i), "inst-" + std::to_string(i)));
  auto a = batch_score(mock, reqs, 1);
  auto b = batch_score(mock, reqs, 8);
  for (std::size_t i = 0; i < reqs.size(); ++i) EXPECT_EQ(*a[i].response, *b[i].response);
  EXPECT_EQ(a[7].response->probs.at(Role::top), (std::vector<double>{0, 0, 1, 0}));
}
