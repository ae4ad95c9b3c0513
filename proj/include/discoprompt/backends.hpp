#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <semaphore>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "discoprompt/error.hpp"
#include "discoprompt/prompting.hpp"
#include "discoprompt/role.hpp"
#include "discoprompt/scoring.hpp"

// Mask-scorer contract: a backend turns a rendered prompt into
// candidate-restricted probabilities per mask role.
namespace discoprompt {

inline constexpr int kWireVersion = 1;
inline constexpr double kResponseTolerance = 1e-6;

// Lowercase hex SHA-256.
inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) out << std::setw(2) << static_cast<int>(digest[i]);
  return out.str();
}

struct ScoreRequest {
  std::string prompt;
  std::map<Role, std::pair<std::size_t, std::size_t>> mask_spans;
  std::map<Role, std::vector<std::string>> candidates;
  int soft_tokens = 0;
  std::string instance_id;  // local bookkeeping only; not sent on the wire

  static ScoreRequest from_rendered(const RenderedPrompt& r, std::string instance_id = {}) {
    ScoreRequest req;
    req.prompt = r.text;
    for (const auto& s : r.mask_spans) req.mask_spans[s.role] = {s.begin, s.end};
    req.candidates = r.candidate_sets;
    req.soft_tokens = r.soft_token_count;
    req.instance_id = std::move(instance_id);
    return req;
  }

  nlohmann::json to_wire() const {
    nlohmann::json spans = nlohmann::json::object();
    for (const auto& [role, span] : mask_spans)
      spans[std::string(role_name(role))] = {span.first, span.second};
    nlohmann::json cands = nlohmann::json::object();
    for (const auto& [role, list] : candidates) cands[std::string(role_name(role))] = list;
    return {{"v", kWireVersion},
            {"prompt", prompt},
            {"mask_spans", spans},
            {"candidates", cands},
            {"soft_tokens", soft_tokens}};
  }
};

struct ScoreResponse {
  std::map<Role, std::vector<double>> probs;

  MaskDistributions distributions() const { return MaskDistributions{probs}; }

  nlohmann::json to_wire() const {
    nlohmann::json p = nlohmann::json::object();
    for (const auto& [role, v] : probs) p[std::string(role_name(role))] = v;
    return {{"v", kWireVersion}, {"probs", p}};
  }

  friend bool operator==(const ScoreResponse&, const ScoreResponse&) = default;
};

// Validates a wire response against the request: every requested role
// present, lengths match, entries finite and non-negative, sum within
// 1e-6 of 1 (then renormalized).
inline ScoreResponse validate_response(const ScoreRequest& req, const nlohmann::json& payload) {
  if (!payload.is_object() || !payload.contains("probs") || !payload["probs"].is_object())
    throw BackendError(BackendFailure::malformed_payload, "response lacks a 'probs' object");
  if (!payload.contains("v") || !payload["v"].is_number_integer() ||
      payload["v"].get<int>() != kWireVersion)
    throw BackendError(BackendFailure::malformed_payload, "unsupported or missing protocol version");
  ScoreResponse resp;
  const auto& probs = payload["probs"];
  for (const auto& [role, cands] : req.candidates) {
    std::string name(role_name(role));
    if (!probs.contains(name))
      throw BackendError(BackendFailure::missing_role, "response lacks role '" + name + "'");
    const auto& arr = probs[name];
    if (!arr.is_array())
      throw BackendError(BackendFailure::malformed_payload, "role '" + name + "' is not an array");
    if (arr.size() != cands.size())
      throw BackendError(BackendFailure::malformed_payload,
                         "role '" + name + "' has " + std::to_string(arr.size()) +
                             " probabilities for " + std::to_string(cands.size()) + " candidates");
    std::vector<double> v;
    double sum = 0;
    for (const auto& x : arr) {
      if (!x.is_number())
        throw BackendError(BackendFailure::malformed_payload, "non-numeric probability");
      double p = x.get<double>();
      if (!std::isfinite(p) || p < 0)
        throw BackendError(BackendFailure::invalid_distribution,
                           "role '" + name + "' has a negative or non-finite entry");
      v.push_back(p);
      sum += p;
    }
    if (std::abs(sum - 1.0) > kResponseTolerance)
      throw BackendError(BackendFailure::invalid_distribution,
                         "role '" + name + "' sums to " + std::to_string(sum));
    for (double& p : v) p /= sum;
    resp.probs[role] = std::move(v);
  }
  return resp;
}

class MaskScorer {
 public:
  virtual ~MaskScorer() = default;
  // Must be safe to call concurrently.
  virtual ScoreResponse score(const ScoreRequest& req) const = 0;
};

// Deterministic table-driven scorer. Overrides are keyed by prompt digest
// (lowercase hex SHA-256 of the prompt text) or by instance id; roles an
// override omits fall back to the defaults.
struct MockTable {
  std::map<Role, std::vector<double>> defaults;
  std::map<std::string, std::map<Role, std::vector<double>>> overrides;

  static std::map<Role, std::vector<double>> parse_roles(const nlohmann::json& j,
                                                         const std::string& where) {
    if (!j.is_object()) throw ValidationError("mock table entry must be an object", where);
    std::map<Role, std::vector<double>> out;
    for (const auto& [key, value] : j.items()) {
      auto role = parse_role(key);
      if (!role) throw ValidationError("unknown role in mock table", where + "." + key);
      std::vector<double> v;
      try {
        v = value.get<std::vector<double>>();
      } catch (const nlohmann::json::exception&) {
        throw ValidationError("mock table vectors must be numeric arrays", where + "." + key);
      }
      check_distribution(v, where + "." + key);
      out[*role] = std::move(v);
    }
    return out;
  }

  static void check_distribution(const std::vector<double>& v, const std::string& where) {
    if (v.empty()) throw ValidationError("empty distribution in mock table", where);
    double sum = 0;
    for (double x : v) {
      if (!std::isfinite(x) || x < 0)
        throw ValidationError("negative or non-finite probability in mock table", where);
      sum += x;
    }
    if (std::abs(sum - 1.0) > kDistributionTolerance)
      throw ValidationError("mock table distribution does not sum to 1", where);
  }

  static MockTable from_json(const nlohmann::json& j) {
    MockTable t;
    if (!j.is_object()) throw ValidationError("mock table must be a JSON object");
    if (j.contains("defaults")) t.defaults = parse_roles(j["defaults"], "defaults");
    if (j.contains("overrides")) {
      if (!j["overrides"].is_object()) throw ValidationError("'overrides' must be an object");
      for (const auto& [key, value] : j["overrides"].items())
        t.overrides[key] = parse_roles(value, "overrides." + key);
    }
    return t;
  }

  nlohmann::json to_json() const {
    auto roles = [](const std::map<Role, std::vector<double>>& m) {
      nlohmann::json o = nlohmann::json::object();
      for (const auto& [role, v] : m) o[std::string(role_name(role))] = v;
      return o;
    };
    nlohmann::json ov = nlohmann::json::object();
    for (const auto& [key, m] : overrides) ov[key] = roles(m);
    return {{"defaults", roles(defaults)}, {"overrides", ov}};
  }
};

class MockScorer : public MaskScorer {
 public:
  explicit MockScorer(MockTable table) : table_(std::move(table)) {}

  ScoreResponse score(const ScoreRequest& req) const override {
    const std::map<Role, std::vector<double>>* override_entry = nullptr;
    if (auto it = table_.overrides.find(sha256_hex(req.prompt)); it != table_.overrides.end())
      override_entry = &it->second;
    else if (!req.instance_id.empty())
      if (auto it2 = table_.overrides.find(req.instance_id); it2 != table_.overrides.end())
        override_entry = &it2->second;

    ScoreResponse resp;
    for (const auto& [role, cands] : req.candidates) {
      const std::vector<double>* v = nullptr;
      if (override_entry) {
        if (auto it = override_entry->find(role); it != override_entry->end()) v = &it->second;
      }
      if (!v) {
        auto it = table_.defaults.find(role);
        if (it == table_.defaults.end())
          throw BackendError(BackendFailure::missing_role,
                             "mock table has no entry for role '" + std::string(role_name(role)) + "'");
        v = &it->second;
      }
      if (v->size() != cands.size())
        throw BackendError(BackendFailure::malformed_payload,
                           "mock vector for role '" + std::string(role_name(role)) +
                               "' does not match candidate count");
      resp.probs[role] = *v;
    }
    return resp;
  }

  const MockTable& table() const { return table_; }

 private:
  MockTable table_;
};

inline ScoreResponse mock_score(const MockTable& table, const ScoreRequest& req) {
  return MockScorer(table).score(req);
}

struct RemoteOptions {
  std::chrono::milliseconds timeout{5000};
  int retries = 3;
  std::chrono::milliseconds backoff_base{100};
  std::chrono::milliseconds backoff_max{5000};
  double jitter = 0.25;  // fraction of the current delay added at random
  int max_in_flight = 8;
  std::function<void(const std::string&)> log = [](const std::string& msg) {
    std::clog << "[remote] " << msg << '\n';
  };
};

// HTTP client for POST {endpoint}/score. Transport failures and 5xx/429
// replies are retried with exponential backoff plus jitter.
class RemoteScorer : public MaskScorer {
 public:
  RemoteScorer(const std::string& endpoint, RemoteOptions options = {})
      : options_(std::move(options)), in_flight_(std::max(1, options_.max_in_flight)) {
    std::string rest = endpoint;
    const std::string scheme = "http://";
    if (rest.rfind("https://", 0) == 0)
      throw ValidationError("https endpoints are not supported by this build", endpoint);
    if (rest.rfind(scheme, 0) == 0) rest = rest.substr(scheme.size());
    auto slash = rest.find('/');
    host_port_ = scheme + rest.substr(0, slash);
    prefix_ = slash == std::string::npos ? "" : rest.substr(slash);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    if (rest.substr(0, slash).empty()) throw ValidationError("endpoint has no host", endpoint);
  }

  ScoreResponse score(const ScoreRequest& req) const override {
    Slot slot(in_flight_);
    const std::string body = req.to_wire().dump();
    const std::string path = prefix_ + "/score";
    std::string last_error;
    bool last_was_status = false;
    const int attempts = 1 + std::max(0, options_.retries);
    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) {
        auto delay = backoff(attempt);
        log("retry " + std::to_string(attempt) + "/" + std::to_string(options_.retries) +
            " after " + std::to_string(delay.count()) + " ms (" + last_error + ")");
        std::this_thread::sleep_for(delay);
      }
      httplib::Client client(host_port_);
      auto secs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout);
      client.set_connection_timeout(secs);
      client.set_read_timeout(secs);
      client.set_write_timeout(secs);
      auto res = client.Post(path, body, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        last_was_status = false;
        continue;
      }
      if (res->status >= 500 || res->status == 429) {
        last_error = "HTTP " + std::to_string(res->status);
        last_was_status = true;
        continue;
      }
      if (res->status != 200)
        throw BackendError(BackendFailure::http_status, "HTTP " + std::to_string(res->status));
      nlohmann::json payload;
      try {
        payload = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw BackendError(BackendFailure::malformed_payload, e.what());
      }
      return validate_response(req, payload);
    }
    std::string msg = "gave up after " + std::to_string(options_.retries) + " retries (" +
                      last_error + ")";
    log(msg);
    throw BackendError(last_was_status ? BackendFailure::http_status : BackendFailure::timeout, msg);
  }

  std::chrono::milliseconds backoff(int attempt) const {
    double base = static_cast<double>(options_.backoff_base.count()) * std::pow(2.0, attempt - 1);
    base = std::min(base, static_cast<double>(options_.backoff_max.count()));
    thread_local std::mt19937 rng{std::random_device{}()};
    std::uniform_real_distribution<double> jitter(0.0, options_.jitter * base);
    return std::chrono::milliseconds(static_cast<long long>(base + jitter(rng)));
  }

 private:
  struct Slot {
    explicit Slot(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
    ~Slot() { sem.release(); }
    std::counting_semaphore<>& sem;
  };

  void log(const std::string& msg) const {
    if (options_.log) options_.log(msg);
  }

  RemoteOptions options_;
  std::string host_port_;
  std::string prefix_;
  mutable std::counting_semaphore<> in_flight_;
};

inline ScoreResponse remote_score(const std::string& endpoint, const ScoreRequest& req,
                                  RemoteOptions options = {}) {
  return RemoteScorer(endpoint, std::move(options)).score(req);
}

struct BatchItem {
  std::optional<ScoreResponse> response;
  std::optional<BackendFailure> failure;
  std::string error;

  bool ok() const { return response.has_value(); }
};

// Scores every request; results are positionally aligned and a failure at
// one position does not abort the others.
inline std::vector<BatchItem> batch_score(const MaskScorer& backend,
                                          const std::vector<ScoreRequest>& requests,
                                          std::size_t workers = 1) {
  std::vector<BatchItem> out(requests.size());
  auto run_one = [&](std::size_t i) {
    try {
      out[i].response = backend.score(requests[i]);
    } catch (const BackendError& e) {
      out[i].failure = e.failure();
      out[i].error = e.what();
    } catch (const Error& e) {
      out[i].failure = BackendFailure::malformed_payload;
      out[i].error = e.what();
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, requests.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < requests.size(); ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) run_one(i);
      });
  }
  return out;
}

}  // namespace discoprompt
