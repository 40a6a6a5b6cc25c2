#pragma once

// Feature extraction, scorers, perceptron training, and beam decoding.

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ulf/core.hpp"
#include "ulf/machine.hpp"
#include "ulf/typesys.hpp"

namespace ulf {

// Basic dependency parse: head[i] and label[i] describe word i+1; head 0 is the root.
struct DependencyParse {
  std::vector<int> head;
  std::vector<std::string> label;

  bool empty() const { return head.empty(); }
};

using FeatureSet = std::vector<std::string>;

// (word index, symbol index), both 1-based; 0 is the sentinel.
std::pair<int, int> attention_indices(const Config& c);

FeatureSet extract_features(const Config& c, const DependencyParse& dep);

class Scorer {
 public:
  virtual ~Scorer() = default;
  // One raw score per legal action, same order.
  virtual std::vector<double> score(const Config& c, const FeatureSet& features, const std::vector<Action>& legal) = 0;
};

// Scores the action at position c.steps of a fixed trace 0, everything else kOffTrace.
class OracleScorer : public Scorer {
 public:
  static constexpr double kOffTrace = -1e6;
  explicit OracleScorer(std::vector<Action> trace) : trace_(std::move(trace)) {}
  std::vector<double> score(const Config& c, const FeatureSet& features, const std::vector<Action>& legal) override;

 private:
  std::vector<Action> trace_;
};

// Uniform random scores, a pure function of (seed, sentence, step, action).
class RandomScorer : public Scorer {
 public:
  explicit RandomScorer(std::uint64_t seed) : seed_(seed) {}
  std::vector<double> score(const Config& c, const FeatureSet& features, const std::vector<Action>& legal) override;

 private:
  std::uint64_t seed_;
};

std::uint64_t feature_hash(std::string_view feature, std::string_view action_key, std::uint64_t salt);

class PerceptronModel {
 public:
  std::uint64_t salt = 0;
  std::unordered_map<std::uint64_t, double> weights;
  ActionVocab vocab;  // parameter vocabulary seen in training

  double score(const FeatureSet& features, const Action& a) const;

  std::string to_json() const;
  static PerceptronModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static PerceptronModel load(const std::string& path);
};

class PerceptronScorer : public Scorer {
 public:
  explicit PerceptronScorer(const PerceptronModel& model) : model_(&model) {}
  std::vector<double> score(const Config& c, const FeatureSet& features, const std::vector<Action>& legal) override;

 private:
  const PerceptronModel* model_;
};

// Talks to a child process: each request and response is a decimal byte
// count, a newline, then that many bytes of JSON.
//   request  {"phase": ..., "features": [...], "legal": [...]}
//   response {"scores": [...]}
class ExternalScorer : public Scorer {
 public:
  explicit ExternalScorer(std::vector<std::string> argv, int timeout_ms = 5000);
  ~ExternalScorer() override;
  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;

  std::vector<double> score(const Config& c, const FeatureSet& features, const std::vector<Action>& legal) override;

 private:
  void write_all(const std::string& data);
  std::string read_exact(std::size_t n);
  std::string read_line();

  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  int timeout_ms_;
  std::string pending_;
  std::mutex mu_;
};

struct TrainingExample {
  Sentence sentence;
  DependencyParse dep;
  std::vector<Action> actions;  // oracle sequence
};

// Collects the parameter vocabularies used by the oracle sequences.
ActionVocab vocab_from_oracle(const std::vector<TrainingExample>& examples);

PerceptronModel train_perceptron(const std::vector<TrainingExample>& examples, const ActionVocab& vocab, int epochs,
                                 std::uint64_t seed);

struct DecodeOptions {
  int beam = 3;
  int cap = kDefaultActionCap;
  const Lexicon* lexicon = nullptr;
  const TypeGrammar* types = nullptr;
};

struct DecodeResult {
  std::vector<UlfGraph> fragments;
  std::vector<Action> trace;
  double score = 0;
  bool terminal = false;  // false when stopped by the cap or a dead end
  Config final;
};

// Legal actions after the lexicon and type constraints.
std::vector<Action> constrained_actions(const Config& c, const ActionVocab& vocab, const DecodeOptions& opt);

DecodeResult beam_decode(const Sentence& sentence, const DependencyParse& dep, Scorer& scorer,
                         const ActionVocab& vocab, const DecodeOptions& opt);

}  // namespace ulf
