#include "ulf/decode.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ulf/constraints.hpp"

namespace ulf {

// ---------------------------------------------------------------- attention

std::pair<int, int> attention_indices(const Config& c) {
  auto aligned_word = [&](int v) {
    if (v < 0) return 0;
    const auto& al = c.graph.vertices[static_cast<std::size_t>(v)].alignment;
    return al ? *al : 0;
  };
  switch (c.phase) {
    case Phase::Arc:
    case Phase::Promote:
    case Phase::PromoteArc: {
      int r = c.rightmost();
      return {aligned_word(r), r < 0 ? 0 : r + 1};
    }
    case Phase::Push:
      return {aligned_word(c.pending), c.pending < 0 ? 0 : c.pending + 1};
    default:
      return {c.buffer_empty() ? 0 : c.cursor + 1, static_cast<int>(c.graph.size())};
  }
}

// ---------------------------------------------------------------- features

namespace {

const std::string kNone = "<none>";

std::string bucket(int d) {
  if (d > 4) return ">4";
  if (d < -4) return "<-4";
  return std::to_string(d);
}

class FeatureBuilder {
 public:
  FeatureBuilder(const Config& c, const DependencyParse& dep) : c_(c), dep_(dep) {}

  void add(const std::string& name, const std::string& value) { out_.push_back(name + "=" + value); }

  void word(const std::string& p, int w) {
    if (w < 1 || w > c_.words()) {
      add(p + ".w", kNone);
      return;
    }
    const Token& t = c_.sentence->at(w);
    std::string lw = to_lower(t.surface);
    add(p + ".w", lw);
    add(p + ".l", to_lower(t.lemma));
    add(p + ".pos", t.pos.empty() ? kNone : t.pos);
    add(p + ".ner", t.ner.empty() ? kNone : t.ner);
    add(p + ".suf", lw.size() > 3 ? lw.substr(lw.size() - 3) : lw);
  }

  int word_of(int v) const {
    if (v < 0) return 0;
    const auto& al = c_.graph.vertices[static_cast<std::size_t>(v)].alignment;
    return al ? *al : 0;
  }

  void vertex(const std::string& p, int v) {
    if (v < 0) {
      add(p + ".s", kNone);
      return;
    }
    const Atom& a = c_.graph.vertices[static_cast<std::size_t>(v)].symbol;
    add(p + ".s", a.render());
    add(p + ".tag", a.is_name() ? "|name|" : a.tag);
    word(p, word_of(v));
  }

  // Dependents of word w, in word order.
  std::vector<int> dependents(int w) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(dep_.head.size()); ++i)
      if (dep_.head[static_cast<std::size_t>(i)] == w) out.push_back(i + 1);
    return out;
  }

  std::string dep_label(int w) const {
    if (w < 1 || w > static_cast<int>(dep_.label.size())) return kNone;
    return dep_.label[static_cast<std::size_t>(w - 1)];
  }

  void rightward_deps(const std::string& p, int w) {
    if (w < 1 || dep_.empty()) {
      add(p + ".rdep#", kNone);
      return;
    }
    int n = 0;
    for (int d : dependents(w)) {
      if (d <= w) continue;
      if (n < 3) add(p + ".rdep" + std::to_string(n), dep_label(d));
      ++n;
    }
    add(p + ".rdep#", bucket(n));
  }

  void dep_arcs(const std::string& p, int w) {
    if (w < 1 || dep_.empty()) {
      add(p + ".dep", kNone);
      return;
    }
    int n = 0;
    for (int d : dependents(w)) {
      if (n == 3) break;
      add(p + ".dout" + std::to_string(n++), dep_label(d));
    }
    add(p + ".din", dep_label(w));
  }

  void ulf_arcs(const std::string& p, int v, int limit, bool count) {
    if (v < 0) return;
    auto out = c_.graph.outgoing(v);
    for (int i = 0; i < limit && i < static_cast<int>(out.size()); ++i)
      add(p + ".uout" + std::to_string(i), out[static_cast<std::size_t>(i)]->label);
    if (count) add(p + ".uout#", bucket(static_cast<int>(out.size())));
    const Edge* in = c_.graph.incoming(v);
    add(p + ".uin", in ? in->label : kNone);
  }

  int dep_distance(int a, int b) const {
    if (a < 1 || b < 1 || dep_.empty()) return std::numeric_limits<int>::max();
    int n = static_cast<int>(dep_.head.size());
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n + 1));
    for (int i = 1; i <= n; ++i) {
      int h = dep_.head[static_cast<std::size_t>(i - 1)];
      if (h >= 1 && h <= n) {
        adj[static_cast<std::size_t>(i)].push_back(h);
        adj[static_cast<std::size_t>(h)].push_back(i);
      }
    }
    std::vector<int> dist(static_cast<std::size_t>(n + 1), -1);
    std::queue<int> q;
    dist[static_cast<std::size_t>(a)] = 0;
    q.push(a);
    while (!q.empty()) {
      int x = q.front();
      q.pop();
      if (x == b) return dist[static_cast<std::size_t>(x)];
      for (int y : adj[static_cast<std::size_t>(x)])
        if (dist[static_cast<std::size_t>(y)] < 0) {
          dist[static_cast<std::size_t>(y)] = dist[static_cast<std::size_t>(x)] + 1;
          q.push(y);
        }
    }
    return std::numeric_limits<int>::max();
  }

  void pair(int v0, int v1) {
    if (v0 < 0 || v1 < 0) {
      add("pair", kNone);
      return;
    }
    int w0 = word_of(v0), w1 = word_of(v1);
    add("d.word", w0 && w1 ? bucket(w1 - w0) : kNone);
    add("d.sym", bucket(v1 - v0));
    int dd = dep_distance(w0, w1);
    add("d.dep", dd == std::numeric_limits<int>::max() ? kNone : bucket(dd));
    add("pair.s", c_.graph.vertices[static_cast<std::size_t>(v0)].symbol.render() + "|" +
                      c_.graph.vertices[static_cast<std::size_t>(v1)].symbol.render());
  }

  FeatureSet take() { return std::move(out_); }

 private:
  const Config& c_;
  const DependencyParse& dep_;
  FeatureSet out_;
};

}  // namespace

FeatureSet extract_features(const Config& c, const DependencyParse& dep) {
  FeatureBuilder f(c, dep);
  f.add("bias", "1");
  f.add("ph", std::string(phase_name(c.phase)));
  auto [ai, aj] = attention_indices(c);
  f.word("att", ai);
  f.add("att.s", aj > 0 ? c.graph.vertices[static_cast<std::size_t>(aj - 1)].symbol.render() : kNone);
  const int front = c.buffer_empty() ? 0 : c.cursor + 1;
  switch (c.phase) {
    case Phase::Arc:
    case Phase::Promote:
    case Phase::PromoteArc: {
      int v0 = c.cache[0];
      int v1 = c.phase == Phase::PromoteArc ? c.promoted : c.rightmost();
      f.vertex("c0", v0);
      f.vertex("c1", v1);
      f.pair(v0, v1);
      f.dep_arcs("c0", f.word_of(v0));
      f.dep_arcs("c1", f.word_of(v1));
      f.ulf_arcs("c0", v0, 2, false);
      f.ulf_arcs("c1", v1, 2, false);
      if (c.phase == Phase::PromoteArc) f.vertex("r", c.rightmost());
      f.add("st", c.stack.empty() ? "0" : "1");
      break;
    }
    case Phase::Push:
      f.word("b", front);
      f.vertex("c0", c.cache[0]);
      f.vertex("c1", c.cache[1]);
      f.vertex("new", c.pending);
      break;
    default: {
      int r = c.rightmost();
      f.vertex("r", r);
      f.word("b", front);
      f.word("b+1", front && front + c.merged <= c.words() ? front + c.merged : 0);
      f.add("b.merged", std::to_string(c.merged));
      f.add("b.left", bucket(c.words() - c.cursor));
      f.rightward_deps("r", f.word_of(r));
      f.ulf_arcs("r", r, 3, true);
      f.add("st", c.stack.empty() ? "0" : "1");
      f.add("c0.s", c.cache[0] < 0 ? kNone : c.graph.vertices[static_cast<std::size_t>(c.cache[0])].symbol.render());
      break;
    }
  }
  return f.take();
}

// ---------------------------------------------------------------- scorers

std::vector<double> OracleScorer::score(const Config& c, const FeatureSet&, const std::vector<Action>& legal) {
  // Off-trace actions are priced out so that no shorter path can overtake the trace.
  std::vector<double> out(legal.size(), kOffTrace);
  if (c.steps < static_cast<int>(trace_.size()))
    for (std::size_t i = 0; i < legal.size(); ++i)
      if (legal[i] == trace_[static_cast<std::size_t>(c.steps)]) out[i] = 0.0;
  return out;
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t combine(std::uint64_t feature_h, std::uint64_t action_h) { return mix64(feature_h ^ mix64(action_h)); }

std::string kind_key(const Action& a) { return "#" + std::to_string(static_cast<int>(a.kind)); }

}  // namespace

std::vector<double> RandomScorer::score(const Config& c, const FeatureSet&, const std::vector<Action>& legal) {
  std::vector<double> out;
  std::uint64_t base = mix64(seed_ ^ fnv1a(c.sentence ? c.sentence->raw : std::string()));
  base = mix64(base ^ static_cast<std::uint64_t>(c.steps) * 0x9e3779b97f4a7c15ULL);
  for (const auto& a : legal) {
    std::uint64_t h = mix64(base ^ fnv1a(a.to_string()));
    out.push_back(static_cast<double>(h >> 11) / static_cast<double>(1ULL << 53));
  }
  return out;
}

std::uint64_t feature_hash(std::string_view feature, std::string_view action_key, std::uint64_t salt) {
  return combine(fnv1a(feature, fnv1a(std::to_string(salt))), fnv1a(action_key));
}

namespace {

struct HashedFeatures {
  std::vector<std::uint64_t> h;
};

HashedFeatures hash_features(const FeatureSet& fs, std::uint64_t salt) {
  HashedFeatures out;
  std::uint64_t seed = fnv1a(std::to_string(salt));
  out.h.reserve(fs.size());
  for (const auto& f : fs) out.h.push_back(fnv1a(f, seed));
  return out;
}

template <class Lookup>
double score_hashed(const HashedFeatures& hf, const Action& a, Lookup&& w) {
  std::uint64_t ak = fnv1a(a.to_string()), kk = fnv1a(kind_key(a));
  double s = 0;
  for (std::uint64_t f : hf.h) s += w(combine(f, ak)) + w(combine(f, kk));
  return s;
}

}  // namespace

double PerceptronModel::score(const FeatureSet& features, const Action& a) const {
  auto hf = hash_features(features, salt);
  return score_hashed(hf, a, [&](std::uint64_t k) {
    auto it = weights.find(k);
    return it == weights.end() ? 0.0 : it->second;
  });
}

std::string PerceptronModel::to_json() const {
  std::vector<std::pair<std::uint64_t, double>> sorted(weights.begin(), weights.end());
  std::sort(sorted.begin(), sorted.end());
  nlohmann::json j;
  j["format"] = "ulf-perceptron";
  j["version"] = 1;
  j["salt"] = salt;
  nlohmann::json w = nlohmann::json::array();
  for (const auto& [k, v] : sorted) w.push_back({k, v});
  j["weights"] = std::move(w);
  j["vocab"] = {{"suffixes", vocab.suffixes}, {"symgen", vocab.symgen}, {"promote", vocab.promote}, {"labels", vocab.labels}};
  return j.dump() + "\n";
}

PerceptronModel PerceptronModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "ulf-perceptron") throw ParseError("model file: not a perceptron model");
  if (j.value("version", 0) != 1) throw ParseError("model file: unsupported version");
  PerceptronModel m;
  m.salt = j.at("salt").get<std::uint64_t>();
  try {
    for (const auto& e : j.at("weights")) m.weights[e.at(0).get<std::uint64_t>()] = e.at(1).get<double>();
    if (j.contains("vocab")) {
      const auto& v = j.at("vocab");
      m.vocab.suffixes = v.at("suffixes").get<std::vector<std::string>>();
      m.vocab.symgen = v.at("symgen").get<std::vector<std::string>>();
      m.vocab.promote = v.at("promote").get<std::vector<std::string>>();
      m.vocab.labels = v.at("labels").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  return m;
}

void PerceptronModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json();
}

PerceptronModel PerceptronModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::vector<double> PerceptronScorer::score(const Config&, const FeatureSet& features, const std::vector<Action>& legal) {
  auto hf = hash_features(features, model_->salt);
  auto lookup = [&](std::uint64_t k) {
    auto it = model_->weights.find(k);
    return it == model_->weights.end() ? 0.0 : it->second;
  };
  std::vector<double> out;
  out.reserve(legal.size());
  for (const auto& a : legal) out.push_back(score_hashed(hf, a, lookup));
  return out;
}

// ---------------------------------------------------------------- external scorer

ExternalScorer::ExternalScorer(std::vector<std::string> argv, int timeout_ms) : timeout_ms_(timeout_ms) {
  if (argv.empty()) throw std::invalid_argument("external scorer: empty command");
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) throw std::runtime_error("external scorer: pipe failed");
  pid_ = fork();
  if (pid_ < 0) throw std::runtime_error("external scorer: fork failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    std::vector<char*> args;
    for (auto& a : argv) args.push_back(a.data());
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  signal(SIGPIPE, SIG_IGN);
}

ExternalScorer::~ExternalScorer() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) return;
      usleep(10000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
  }
}

void ExternalScorer::write_all(const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("external scorer: write failed");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ExternalScorer::read_exact(std::size_t n) {
  while (pending_.size() < n) {
    pollfd p{from_child_, POLLIN, 0};
    int r = poll(&p, 1, timeout_ms_);
    if (r == 0) throw std::runtime_error("external scorer: timed out");
    if (r < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("external scorer: poll failed");
    }
    char buf[4096];
    ssize_t got = read(from_child_, buf, sizeof buf);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) throw std::runtime_error("external scorer: process closed its output");
    pending_.append(buf, static_cast<std::size_t>(got));
  }
  std::string out = pending_.substr(0, n);
  pending_.erase(0, n);
  return out;
}

std::string ExternalScorer::read_line() {
  std::string line;
  while (true) {
    std::string ch = read_exact(1);
    if (ch == "\n") return line;
    line += ch;
    if (line.size() > 20) throw std::runtime_error("external scorer: bad length prefix");
  }
}

std::vector<double> ExternalScorer::score(const Config& c, const FeatureSet& features, const std::vector<Action>& legal) {
  std::lock_guard<std::mutex> lock(mu_);
  nlohmann::json req;
  req["phase"] = std::string(phase_name(c.phase));
  req["features"] = features;
  std::vector<std::string> acts;
  for (const auto& a : legal) acts.push_back(a.to_string());
  req["legal"] = acts;
  std::string body = req.dump();
  write_all(std::to_string(body.size()) + "\n" + body);
  std::string len = read_line();
  std::size_t n = 0;
  try {
    n = std::stoul(len);
  } catch (const std::exception&) {
    throw std::runtime_error("external scorer: bad length prefix '" + len + "'");
  }
  nlohmann::json resp;
  try {
    resp = nlohmann::json::parse(read_exact(n));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("external scorer: bad response: ") + e.what());
  }
  if (!resp.contains("scores") || !resp["scores"].is_array() || resp["scores"].size() != legal.size())
    throw std::runtime_error("external scorer: response must hold one score per legal action");
  std::vector<double> out;
  for (const auto& v : resp["scores"]) {
    if (!v.is_number()) throw std::runtime_error("external scorer: non-numeric score");
    out.push_back(v.get<double>());
  }
  return out;
}

// ---------------------------------------------------------------- training

ActionVocab vocab_from_oracle(const std::vector<TrainingExample>& examples) {
  std::set<std::string> suffixes, symgen, promote, labels;
  for (const auto& ex : examples)
    for (const auto& a : ex.actions) {
      switch (a.kind) {
        case ActionKind::Suffix: suffixes.insert(a.value); break;
        case ActionKind::SymGen: symgen.insert(a.value); break;
        case ActionKind::PromoteSym: promote.insert(a.value); break;
        case ActionKind::Arc:
        case ActionKind::PromoteArc: labels.insert(a.label); break;
        default: break;
      }
    }
  return ActionVocab{{suffixes.begin(), suffixes.end()},
                     {symgen.begin(), symgen.end()},
                     {promote.begin(), promote.end()},
                     {labels.begin(), labels.end()}};
}

namespace {

struct AvgWeight {
  double w = 0;
  double total = 0;
  long last = 0;
};

}  // namespace

PerceptronModel train_perceptron(const std::vector<TrainingExample>& examples, const ActionVocab& vocab, int epochs,
                                 std::uint64_t seed) {
  std::size_t steps = 0;
  for (const auto& ex : examples) steps += ex.actions.size();
  if (steps == 0) throw std::invalid_argument("train_perceptron: no oracle steps");
  PerceptronModel model;
  model.salt = mix64(seed ^ 0x5ca1ab1eULL);
  model.vocab = vocab;
  std::unordered_map<std::uint64_t, AvgWeight> acc;
  long t = 0;
  auto bump = [&](std::uint64_t k, double delta) {
    AvgWeight& a = acc[k];
    a.total += static_cast<double>(t - a.last) * a.w;
    a.last = t;
    a.w += delta;
  };
  auto current = [&](std::uint64_t k) {
    auto it = acc.find(k);
    return it == acc.end() ? 0.0 : it->second.w;
  };
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      const auto& ex = examples[idx];
      Config c = init(ex.sentence);
      for (const auto& gold : ex.actions) {
        ++t;
        auto legal = legal_actions(c, vocab);
        if (legal.size() > 1) {
          auto hf = hash_features(extract_features(c, ex.dep), model.salt);
          std::size_t best = 0;
          double best_score = -std::numeric_limits<double>::infinity();
          for (std::size_t i = 0; i < legal.size(); ++i) {
            double s = score_hashed(hf, legal[i], current);
            if (s > best_score) {
              best_score = s;
              best = i;
            }
          }
          const Action& pred = legal[best];
          if (!(pred == gold)) {
            std::uint64_t gk = fnv1a(gold.to_string()), gkk = fnv1a(kind_key(gold));
            std::uint64_t pk = fnv1a(pred.to_string()), pkk = fnv1a(kind_key(pred));
            for (std::uint64_t f : hf.h) {
              bump(combine(f, gk), 1.0);
              bump(combine(f, gkk), 1.0);
              bump(combine(f, pk), -1.0);
              bump(combine(f, pkk), -1.0);
            }
          }
        }
        apply_in_place(c, gold);
      }
    }
  }
  if (t == 0) return model;
  for (auto& [k, a] : acc) {
    double total = a.total + static_cast<double>(t - a.last) * a.w;
    double avg = total / static_cast<double>(t);
    if (avg != 0.0) model.weights[k] = avg;
  }
  return model;
}

// ---------------------------------------------------------------- beam search

std::vector<Action> constrained_actions(const Config& c, const ActionVocab& vocab, const DecodeOptions& opt) {
  auto legal = legal_actions(c, vocab);
  if (opt.lexicon) legal = lexicon_filter_actions(c, legal, *opt.lexicon);
  if (!opt.types) return legal;
  std::vector<Action> out;
  for (const auto& a : legal) {
    if (a.kind == ActionKind::Arc || a.kind == ActionKind::PromoteArc) {
      if (!check_arc(c, a, *opt.types)) continue;
    } else if (a.kind == ActionKind::PromoteSym) {
      Config next = c;
      apply_typed(next, a, *opt.types);
      bool ok = false;
      for (const auto& b : legal_actions(next, vocab))
        if (check_arc(next, b, *opt.types)) {
          ok = true;
          break;
        }
      if (!ok) continue;
    }
    out.push_back(a);
  }
  return out;
}

namespace {

struct BeamItem {
  Config config;
  double score = 0;
  std::vector<Action> trace;
};

std::vector<double> log_softmax(const std::vector<double>& raw) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : raw) mx = std::max(mx, x);
  double sum = 0;
  for (double x : raw) sum += std::exp(x - mx);
  double lse = mx + std::log(sum);
  std::vector<double> out;
  for (double x : raw) out.push_back(x - lse);
  return out;
}

}  // namespace

DecodeResult beam_decode(const Sentence& sentence, const DependencyParse& dep, Scorer& scorer,
                         const ActionVocab& vocab, const DecodeOptions& opt) {
  if (opt.beam < 1) throw std::invalid_argument("beam_decode: beam size must be at least 1");
  std::vector<BeamItem> beam{BeamItem{init(sentence), 0.0, {}}};
  std::vector<std::pair<BeamItem, bool>> finished;  // item, reached a terminal state
  double best_finished = -std::numeric_limits<double>::infinity();

  while (!beam.empty()) {
    struct Cand {
      double score;
      std::size_t item;
      Action action;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < beam.size(); ++i) {
      const BeamItem& it = beam[i];
      bool terminal = is_terminal(it.config);
      if (terminal || it.config.steps >= opt.cap) {
        best_finished = std::max(best_finished, it.score);
        finished.emplace_back(it, terminal);
        continue;
      }
      auto acts = constrained_actions(it.config, vocab, opt);
      if (acts.empty()) {
        best_finished = std::max(best_finished, it.score);
        finished.emplace_back(it, false);
        continue;
      }
      auto lp = log_softmax(scorer.score(it.config, extract_features(it.config, dep), acts));
      for (std::size_t k = 0; k < acts.size(); ++k) cands.push_back(Cand{it.score + lp[k], i, acts[k]});
    }
    // Scores never increase along a path, so nothing left can beat a finished item.
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.score > b.score; });
    if (cands.empty() || cands.front().score <= best_finished) break;
    std::vector<BeamItem> next;
    for (const auto& cd : cands) {
      if (static_cast<int>(next.size()) >= opt.beam) break;
      BeamItem item{beam[cd.item].config, cd.score, beam[cd.item].trace};
      if (opt.types)
        apply_typed(item.config, cd.action, *opt.types);
      else
        apply_in_place(item.config, cd.action);
      item.trace.push_back(cd.action);
      next.push_back(std::move(item));
    }
    beam = std::move(next);
  }

  DecodeResult res;
  const std::pair<BeamItem, bool>* best = nullptr;
  for (const auto& f : finished)
    if (!best || f.first.score > best->first.score) best = &f;
  if (!best) {
    res.final = init(sentence);
    return res;
  }
  res.final = best->first.config;
  res.trace = best->first.trace;
  res.score = best->first.score;
  res.terminal = best->second;
  res.fragments = extract_result(res.final);
  return res;
}

}  // namespace ulf
