#pragma once

// Shared fakes for exercising the orchestration layers without a simulator
// profile: scripted replies, controllable sleeps, and failure injection.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "confkit/backend.hpp"
#include "confkit/judging.hpp"

namespace confkit::testing {

/// Replies with the scripted texts in call order; the last one repeats once
/// the script runs out. Records every request for inspection.
class ScriptedLlm : public LlmBackend {
 public:
  explicit ScriptedLlm(std::vector<std::string> replies, double latency_ms = 5.0)
      : replies_(std::move(replies)), latency_ms_(latency_ms) {
    if (replies_.empty()) {
      throw std::invalid_argument("ScriptedLlm needs at least one reply");
    }
  }

  AnswerRecord generate(const GenerationParams& params, CancelToken) override {
    size_t index;
    {
      std::lock_guard<std::mutex> lock(mu_);
      calls_.push_back(params);
      index = calls_.size() - 1;
    }
    const std::string& text = replies_[std::min(index, replies_.size() - 1)];
    AnswerRecord rec;
    rec.question_id = params.question_id;
    rec.text = text;
    rec.is_missing = judging::detect_missing(text);
    rec.latency_ms = latency_ms_;
    rec.source = Source::Llm;
    return rec;
  }
  using LlmBackend::generate;

  std::string name() const override { return "scripted"; }

  size_t call_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_.size();
  }
  std::vector<GenerationParams> calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
  }

 private:
  std::vector<std::string> replies_;
  double latency_ms_;
  mutable std::mutex mu_;
  std::vector<GenerationParams> calls_;
};

/// Throws for the first `fail_first` calls, then answers.
class FlakyLlm : public LlmBackend {
 public:
  FlakyLlm(int fail_first, std::string text)
      : fail_first_(fail_first), text_(std::move(text)) {}

  AnswerRecord generate(const GenerationParams& params, CancelToken) override {
    if (calls_.fetch_add(1) < fail_first_) {
      throw std::runtime_error("flaky backend down");
    }
    AnswerRecord rec;
    rec.question_id = params.question_id;
    rec.text = text_;
    rec.latency_ms = 1.0;
    return rec;
  }
  using LlmBackend::generate;

  std::string name() const override { return "flaky"; }
  int call_count() const { return calls_.load(); }

 private:
  int fail_first_;
  std::string text_;
  std::atomic<int> calls_{0};
};

/// Sleeps wall-clock `sleep`, then answers. Reported latency_ms is
/// independent of the sleep so tests can separate measured from simulated
/// time. Ignores cancellation, like a real in-flight completion call.
class SleepyLlm : public LlmBackend {
 public:
  std::chrono::milliseconds sleep{0};
  std::string text = "llm-answer";
  bool missing = false;
  double reported_latency_ms = 5.0;

  AnswerRecord generate(const GenerationParams& params, CancelToken) override {
    std::this_thread::sleep_for(sleep);
    calls_.fetch_add(1);
    AnswerRecord rec;
    rec.question_id = params.question_id;
    rec.text = text;
    rec.is_missing = missing;
    rec.latency_ms = reported_latency_ms;
    rec.source = Source::Llm;
    return rec;
  }
  using LlmBackend::generate;

  std::string name() const override { return "sleepy-llm"; }
  int call_count() const { return calls_.load(); }

 private:
  std::atomic<int> calls_{0};
};

/// Waits through its CancelToken so an early stop aborts the sleep; counts
/// cancellations and completions.
class SleepyRag : public RagPipeline {
 public:
  std::chrono::milliseconds sleep{0};
  std::string text = "rag-answer";
  double reported_latency_ms = 20.0;
  std::atomic<int> cancelled_count{0};
  std::atomic<int> completed_count{0};

  AnswerRecord answer(const Question& question, CancelToken token) override {
    if (token.wait_for(sleep)) {
      cancelled_count.fetch_add(1);
      throw CancelledError();
    }
    completed_count.fetch_add(1);
    AnswerRecord rec;
    rec.question_id = question.id;
    rec.text = text;
    rec.is_missing = judging::detect_missing(text);
    rec.latency_ms = reported_latency_ms;
    rec.source = Source::Rag;
    return rec;
  }

  std::string name() const override { return "sleepy-rag"; }
};

class ThrowingRag : public RagPipeline {
 public:
  AnswerRecord answer(const Question&, CancelToken) override {
    throw std::runtime_error("rag backend down");
  }
  std::string name() const override { return "throwing-rag"; }
};

class ThrowingLlm : public LlmBackend {
 public:
  AnswerRecord generate(const GenerationParams&, CancelToken) override {
    throw std::runtime_error("llm backend down");
  }
  using LlmBackend::generate;
  std::string name() const override { return "throwing-llm"; }
};

/// Self-cleaning scratch directory.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    for (int attempt = 0; attempt < 64; ++attempt) {
      auto candidate = base / ("confkit-test-" + std::to_string(rd()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create a scratch directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Question make_question(std::string id, std::string text,
                              std::vector<std::string> ground_truths,
                              Dynamism dynamism = Dynamism::Static) {
  Question q;
  q.id = std::move(id);
  q.text = std::move(text);
  q.domain = "test";
  q.dynamism = dynamism;
  q.ground_truths = std::move(ground_truths);
  return q;
}

}  // namespace confkit::testing
