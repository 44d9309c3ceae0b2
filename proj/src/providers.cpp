#include "confkit/providers.hpp"

#include <chrono>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include <httplib.h>

#include "confkit/jsonl.hpp"
#include "confkit/judging.hpp"

namespace confkit::providers {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

}  // namespace

// ---------------------------------------------------------------------------
// Simulator configuration

LatencyLaw LatencyLaw::fixed(double ms) {
  LatencyLaw law;
  law.kind = Kind::Fixed;
  law.fixed_ms = ms;
  law.validate();
  return law;
}

LatencyLaw LatencyLaw::lognormal(double p50, double p90) {
  LatencyLaw law;
  law.kind = Kind::Lognormal;
  law.p50_ms = p50;
  law.p90_ms = p90;
  law.validate();
  return law;
}

void LatencyLaw::validate() const {
  if (kind == Kind::Fixed) {
    if (fixed_ms < 0.0) {
      throw std::runtime_error("fixed latency must be non-negative");
    }
    return;
  }
  if (p50_ms <= 0.0 || p90_ms < p50_ms) {
    throw std::runtime_error("lognormal latency requires 0 < p50 <= p90");
  }
}

double LatencyLaw::sample(rng::Stream& stream) const {
  if (kind == Kind::Fixed) return fixed_ms;
  return stream.lognormal_p50_p90(p50_ms, p90_ms);
}

json LatencyLaw::to_json() const {
  if (kind == Kind::Fixed) {
    return json{{"law", "fixed"}, {"ms", fixed_ms}};
  }
  return json{{"law", "lognormal"}, {"p50", p50_ms}, {"p90", p90_ms}};
}

LatencyLaw LatencyLaw::from_json(const json& j) {
  std::string law = j.at("law").get<std::string>();
  if (law == "fixed") {
    return fixed(j.at("ms").get<double>());
  }
  if (law == "lognormal") {
    return lognormal(j.at("p50").get<double>(), j.at("p90").get<double>());
  }
  throw std::runtime_error("unknown latency law '" + law + "'");
}

void SimEntry::validate() const {
  double sum = missing_probability;
  if (missing_probability < 0.0 || missing_probability > 1.0) {
    throw std::runtime_error("missing_probability out of [0,1]");
  }
  for (const auto& a : answers) {
    if (a.probability < 0.0) {
      throw std::runtime_error("answer probability must be non-negative");
    }
    if (a.confidence && (*a.confidence < 0.0 || *a.confidence > 1.0)) {
      throw std::runtime_error("answer confidence out of [0,1]");
    }
    sum += a.probability;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::runtime_error(
        "answer probabilities plus missing_probability must sum to 1, got " +
        std::to_string(sum));
  }
  latency.validate();
}

json SimEntry::to_json() const {
  json answers_json = json::array();
  for (const auto& a : answers) {
    json item{{"text", a.text}, {"p", a.probability}};
    if (a.confidence) item["confidence"] = *a.confidence;
    answers_json.push_back(item);
  }
  json j{{"answers", answers_json},
         {"missing_probability", missing_probability},
         {"latency", latency.to_json()}};
  if (missing_text != std::string(prompts::kUnsureAnswer)) {
    j["missing_text"] = missing_text;
  }
  return j;
}

SimEntry SimEntry::from_json(const json& j) {
  SimEntry e;
  if (j.contains("answers")) {
    for (const auto& item : j.at("answers")) {
      SimAnswer a;
      a.text = item.at("text").get<std::string>();
      a.probability = item.at("p").get<double>();
      if (item.contains("confidence") && !item.at("confidence").is_null()) {
        a.confidence = item.at("confidence").get<double>();
      }
      e.answers.push_back(std::move(a));
    }
  }
  e.missing_probability = j.value("missing_probability", 0.0);
  if (j.contains("latency")) {
    e.latency = LatencyLaw::from_json(j.at("latency"));
  }
  e.missing_text = j.value("missing_text", std::string(prompts::kUnsureAnswer));
  e.validate();
  return e;
}

namespace {

const SimEntry* find_entry(const std::map<std::string, SimEntry>& entries,
                           const std::string& question_id) {
  auto it = entries.find(question_id);
  if (it != entries.end()) return &it->second;
  it = entries.find("*");
  if (it != entries.end()) return &it->second;
  return nullptr;
}

std::map<std::string, SimEntry> entries_from_json(const json& j, const char* section) {
  std::map<std::string, SimEntry> out;
  if (!j.contains(section)) return out;
  for (const auto& [key, value] : j.at(section).items()) {
    try {
      out.emplace(key, SimEntry::from_json(value));
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string(section) + " entry '" + key +
                               "': " + e.what());
    }
  }
  return out;
}

}  // namespace

const SimEntry* SimProfile::find_llm(const std::string& question_id) const {
  return find_entry(llm, question_id);
}

const SimEntry* SimProfile::find_rag(const std::string& question_id) const {
  return find_entry(rag, question_id);
}

void SimProfile::validate() const {
  for (const auto& [key, entry] : llm) {
    (void)key;
    entry.validate();
  }
  for (const auto& [key, entry] : rag) {
    (void)key;
    entry.validate();
  }
}

json SimProfile::to_json() const {
  json llm_json = json::object();
  for (const auto& [key, entry] : llm) llm_json[key] = entry.to_json();
  json rag_json = json::object();
  for (const auto& [key, entry] : rag) rag_json[key] = entry.to_json();
  return json{{"seed", seed}, {"llm", llm_json}, {"rag", rag_json}};
}

SimProfile SimProfile::from_json(const json& j) {
  SimProfile p;
  p.seed = j.at("seed").get<uint64_t>();
  p.llm = entries_from_json(j, "llm");
  p.rag = entries_from_json(j, "rag");
  return p;
}

SimProfile SimProfile::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(jsonl::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": malformed profile JSON: " + e.what());
  }
  try {
    return from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Simulated backends

namespace {

/// One draw from an entry's answer distribution. Consumes the answer draw
/// first, then the latency draw, so traces are a pure function of the stream.
AnswerRecord draw_record(const SimEntry& entry, rng::Stream& stream,
                         const std::string& question_id, Source source) {
  double u = stream.uniform01();
  const SimAnswer* picked = nullptr;
  double cum = 0.0;
  for (const auto& a : entry.answers) {
    cum += a.probability;
    if (u < cum) {
      picked = &a;
      break;
    }
  }
  double latency = entry.latency.sample(stream);

  AnswerRecord rec;
  rec.question_id = question_id;
  rec.latency_ms = latency;
  rec.source = source;
  if (picked) {
    rec.text = picked->text;
    rec.is_missing = judging::detect_missing(picked->text);
    rec.self_confidence = picked->confidence;
  } else {
    rec.text = entry.missing_text;
    rec.is_missing = true;
  }
  return rec;
}

}  // namespace

AnswerRecord SimulatedLlm::generate(const GenerationParams& params, CancelToken token) {
  params.validate();
  const SimEntry* entry = profile_->find_llm(params.question_id);
  if (!entry) {
    throw std::runtime_error("simulator profile has no llm entry for question '" +
                             params.question_id + "' and no \"*\" fallback");
  }
  uint64_t index;
  {
    std::lock_guard<std::mutex> lock(mu_);
    index = call_counts_[params.question_id]++;
  }
  if (token.cancelled()) throw CancelledError{};
  rng::Stream stream(profile_->seed, "llm", params.question_id, index);
  return draw_record(*entry, stream, params.question_id, Source::Llm);
}

AnswerRecord SimulatedRagPipeline::answer(const Question& question, CancelToken token) {
  const SimEntry* entry = profile_->find_rag(question.id);
  if (!entry) {
    throw std::runtime_error("simulator profile has no rag entry for question '" +
                             question.id + "' and no \"*\" fallback");
  }
  // The counter advances before the cancellation checks: an early-stopped
  // call must consume its index, or later runs would see shifted streams.
  uint64_t index;
  {
    std::lock_guard<std::mutex> lock(mu_);
    index = call_counts_[question.id]++;
  }
  if (token.cancelled()) throw CancelledError{};
  rng::Stream stream(profile_->seed, "rag", question.id, index);
  AnswerRecord rec = draw_record(*entry, stream, question.id, Source::Rag);
  if (token.cancelled()) throw CancelledError{};
  return rec;
}

std::vector<Passage> SimulatedRetriever::retrieve(const std::string& query, int k,
                                                  CancelToken token) {
  (void)query;
  if (k < 1) {
    throw std::invalid_argument("retrieve requires k >= 1");
  }
  if (token.cancelled()) throw CancelledError{};
  if (passages_.size() <= static_cast<size_t>(k)) return passages_;
  return std::vector<Passage>(passages_.begin(), passages_.begin() + k);
}

// ---------------------------------------------------------------------------
// Retrieve-then-read pipeline

namespace {

AnswerRecord rag_answer_impl(const Question& question, Retriever& retriever,
                             LlmBackend& reader, int k, CancelToken token,
                             bool* empty_context) {
  auto start = std::chrono::steady_clock::now();
  std::vector<Passage> passages;
  try {
    passages = retriever.retrieve(question.text, k, token);
  } catch (const CancelledError&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error("retrieval stage failed for question '" + question.id +
                             "': " + e.what());
  }
  double retrieval_ms = elapsed_ms(start);
  if (token.cancelled()) throw CancelledError{};

  if (empty_context) *empty_context = passages.empty();
  std::ostringstream user;
  user << "Question: " << question.text << "\n\nSearch results:\n";
  if (passages.empty()) {
    user << kEmptyContextMarker << "\n";
  } else {
    for (const auto& p : passages) {
      user << "[" << p.rank << "] " << p.text;
      if (!p.source_url.empty()) user << " (" << p.source_url << ")";
      user << "\n";
    }
  }

  GenerationParams params;
  params.system_prompt = std::string(kReaderSystem);
  params.user_prompt = user.str();
  params.temperature = 0.0;
  params.question_id = question.id;

  AnswerRecord rec;
  try {
    rec = reader.generate(params, token);
  } catch (const CancelledError&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error("reader stage failed for question '" + question.id +
                             "': " + e.what());
  }
  rec.question_id = question.id;
  rec.source = Source::Rag;
  rec.latency_ms += retrieval_ms;
  return rec;
}

}  // namespace

AnswerRecord rag_answer(const Question& question, Retriever& retriever,
                        LlmBackend& reader, int k, CancelToken token) {
  return rag_answer_impl(question, retriever, reader, k, token, nullptr);
}

AnswerRecord RetrieverReaderPipeline::answer(const Question& question,
                                             CancelToken token) {
  bool empty_context = false;
  AnswerRecord rec =
      rag_answer_impl(question, retriever_, reader_, k_, token, &empty_context);
  if (empty_context) {
    std::lock_guard<std::mutex> lock(mu_);
    ++empty_context_count_;
  }
  return rec;
}

std::string RetrieverReaderPipeline::name() const {
  return "rag(" + retriever_.name() + "+" + reader_.name() + ")";
}

size_t RetrieverReaderPipeline::empty_context_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return empty_context_count_;
}

// ---------------------------------------------------------------------------
// Live clients

ConfidenceResponse parse_confidence_response(const std::string& raw) {
  size_t open = raw.find('{');
  size_t close = raw.rfind('}');
  if (open != std::string::npos && close != std::string::npos && open < close) {
    try {
      json j = json::parse(raw.substr(open, close - open + 1));
      if (j.is_object() && j.contains("answer")) {
        ConfidenceResponse out;
        out.answer = j.at("answer").is_string() ? j.at("answer").get<std::string>()
                                                : j.at("answer").dump();
        if (j.contains("confidence_score") && j.at("confidence_score").is_number()) {
          double c = j.at("confidence_score").get<double>();
          out.confidence = std::min(1.0, std::max(0.0, c));
        }
        return out;
      }
    } catch (const json::parse_error&) {
      // fall through to the raw-text form
    }
  }
  return ConfidenceResponse{raw, std::nullopt};
}

namespace {

std::string require_env(const std::string& var) {
  const char* value = std::getenv(var.c_str());
  if (!value || !*value) {
    throw std::runtime_error("environment variable " + var + " is not set");
  }
  return value;
}

void require_scheme_supported(const std::string& base_url) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (base_url.rfind("https://", 0) == 0) {
    throw std::runtime_error(
        "built without TLS support; use an http:// base_url or rebuild with OpenSSL");
  }
#else
  (void)base_url;
#endif
}

httplib::Client make_client(const std::string& base_url, int timeout_ms) {
  require_scheme_supported(base_url);
  httplib::Client client(base_url);
  client.set_connection_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  client.set_write_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  return client;
}

std::string percent_encode(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                      (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' ||
                      c == '~';
    if (unreserved) {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xf];
    }
  }
  return out;
}

}  // namespace

AnswerRecord LiveChatLlm::generate(const GenerationParams& params, CancelToken token) {
  params.validate();
  if (options_.offline) {
    throw std::runtime_error("offline mode: live LLM calls are disabled; pass --live");
  }
  std::string key = require_env(options_.api_key_env);

  json body{{"model", options_.model}, {"temperature", params.temperature}};
  json messages = json::array();
  if (!params.system_prompt.empty()) {
    messages.push_back(json{{"role", "system"}, {"content", params.system_prompt}});
  }
  messages.push_back(json{{"role", "user"}, {"content", params.user_prompt}});
  body["messages"] = messages;

  auto start = std::chrono::steady_clock::now();
  std::string last_error;
  for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
    if (token.cancelled()) throw CancelledError{};
    try {
      httplib::Client client = make_client(options_.base_url, options_.timeout_ms);
      httplib::Headers headers{{"Authorization", "Bearer " + key}};
      auto res = client.Post(options_.path, headers, body.dump(), "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
        continue;
      }
      json reply = json::parse(res->body);
      std::string content =
          reply.at("choices").at(0).at("message").at("content").get<std::string>();
      AnswerRecord rec;
      rec.question_id = params.question_id;
      rec.text = content;
      rec.is_missing = judging::detect_missing(content);
      rec.latency_ms = elapsed_ms(start);
      rec.source = Source::Llm;
      return rec;
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  throw std::runtime_error("live LLM call failed after " +
                           std::to_string(options_.max_attempts) +
                           " attempts: " + last_error);
}

std::vector<Passage> LiveSearchRetriever::retrieve(const std::string& query, int k,
                                                   CancelToken token) {
  if (k < 1) {
    throw std::invalid_argument("retrieve requires k >= 1");
  }
  if (options_.offline) {
    throw std::runtime_error("offline mode: live search is disabled; pass --live");
  }
  std::string key = require_env(options_.api_key_env);
  std::string target =
      options_.path + "?q=" + percent_encode(query) + "&count=" + std::to_string(k);

  std::string last_error;
  for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
    if (token.cancelled()) throw CancelledError{};
    try {
      httplib::Client client = make_client(options_.base_url, options_.timeout_ms);
      httplib::Headers headers{{"Ocp-Apim-Subscription-Key", key}};
      auto res = client.Get(target, headers);
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
        continue;
      }
      json reply = json::parse(res->body);
      std::vector<Passage> passages;
      if (reply.contains("webPages") && reply.at("webPages").contains("value")) {
        int rank = 1;
        for (const auto& item : reply.at("webPages").at("value")) {
          if (rank > k) break;
          Passage p;
          p.text = item.value("snippet", std::string{});
          p.source_url = item.value("url", std::string{});
          p.rank = rank++;
          passages.push_back(std::move(p));
        }
      }
      return passages;
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  throw std::runtime_error("live search failed after " +
                           std::to_string(options_.max_attempts) +
                           " attempts: " + last_error);
}

}  // namespace confkit::providers
