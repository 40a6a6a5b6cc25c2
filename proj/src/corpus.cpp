#include "ulf/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace ulf {

using nlohmann::json;

UlfGraph CorpusRecord::gold_graph() const {
  if (!ulf) throw CorpusError("record " + id + " has no gold ULF");
  return tree_to_graph(*ulf);
}

namespace {

std::vector<std::string> string_array(const json& j, const char* key, bool required) {
  if (!j.contains(key)) {
    if (required) throw CorpusError(std::string("missing field \"") + key + "\"");
    return {};
  }
  const json& a = j.at(key);
  if (!a.is_array()) throw CorpusError(std::string("field \"") + key + "\" must be an array");
  std::vector<std::string> out;
  for (const auto& x : a) {
    if (!x.is_string()) throw CorpusError(std::string("field \"") + key + "\" must hold strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

void check_length(const std::vector<std::string>& v, std::size_t n, const char* key) {
  if (v.size() != n)
    throw CorpusError(std::string("field \"") + key + "\" has " + std::to_string(v.size()) + " entries for " +
                      std::to_string(n) + " tokens");
}

std::mutex& readers_mu() {
  static std::mutex mu;
  return mu;
}

std::map<std::string, CorpusReader>& readers() {
  static std::map<std::string, CorpusReader> r{{"jsonl", read_jsonl}};
  return r;
}

}  // namespace

CorpusRecord parse_record(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw CorpusError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw CorpusError("record must be a JSON object");
  CorpusRecord r;
  if (!j.contains("id") || !j.at("id").is_string()) throw CorpusError("missing string field \"id\"");
  r.id = j.at("id").get<std::string>();

  auto tokens = string_array(j, "tokens", true);
  if (tokens.empty()) throw CorpusError("field \"tokens\" is empty");
  auto lemmas = string_array(j, "lemmas", true);
  auto pos = string_array(j, "pos", true);
  auto ner = string_array(j, "ner", true);
  check_length(lemmas, tokens.size(), "lemmas");
  check_length(pos, tokens.size(), "pos");
  check_length(ner, tokens.size(), "ner");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].empty()) throw CorpusError("token " + std::to_string(i + 1) + " is empty");
    r.sentence.tokens.push_back(Token{tokens[i], lemmas[i], pos[i], ner[i], static_cast<int>(i + 1)});
  }
  if (j.contains("raw")) {
    if (!j.at("raw").is_string()) throw CorpusError("field \"raw\" must be a string");
    r.sentence.raw = j.at("raw").get<std::string>();
  } else {
    for (std::size_t i = 0; i < tokens.size(); ++i) r.sentence.raw += (i ? " " : "") + tokens[i];
  }

  if (j.contains("heads") != j.contains("deprels")) throw CorpusError("\"heads\" and \"deprels\" must appear together");
  if (j.contains("heads")) {
    const json& h = j.at("heads");
    if (!h.is_array()) throw CorpusError("field \"heads\" must be an array");
    r.dep.label = string_array(j, "deprels", true);
    check_length(r.dep.label, tokens.size(), "deprels");
    for (const auto& x : h) {
      if (!x.is_number_integer()) throw CorpusError("field \"heads\" must hold integers");
      int v = x.get<int>();
      if (v < 0 || v > static_cast<int>(tokens.size())) throw CorpusError("head index " + std::to_string(v) + " out of range");
      r.dep.head.push_back(v);
    }
    if (r.dep.head.size() != tokens.size())
      throw CorpusError("field \"heads\" has " + std::to_string(r.dep.head.size()) + " entries for " +
                        std::to_string(tokens.size()) + " tokens");
  }

  if (j.contains("ulf") && !j.at("ulf").is_null()) {
    if (!j.at("ulf").is_string()) throw CorpusError("field \"ulf\" must be a string");
    try {
      r.ulf = parse_sexpr(j.at("ulf").get<std::string>());
      tree_to_graph(*r.ulf).validate_tree();
    } catch (const std::exception& e) {
      throw CorpusError(std::string("unparseable gold ULF: ") + e.what());
    }
  }
  return r;
}

std::string record_to_json(const CorpusRecord& r) {
  json j = json::object();
  j["id"] = r.id;
  j["raw"] = r.sentence.raw;
  json tokens = json::array(), lemmas = json::array(), pos = json::array(), ner = json::array();
  for (const auto& t : r.sentence.tokens) {
    tokens.push_back(t.surface);
    lemmas.push_back(t.lemma);
    pos.push_back(t.pos);
    ner.push_back(t.ner);
  }
  j["tokens"] = tokens;
  j["lemmas"] = lemmas;
  j["pos"] = pos;
  j["ner"] = ner;
  if (!r.dep.empty()) {
    j["heads"] = r.dep.head;
    j["deprels"] = r.dep.label;
  }
  if (r.ulf) j["ulf"] = r.ulf->to_string();
  return j.dump();
}

std::vector<CorpusRecord> read_jsonl(std::istream& in, const std::string& source) {
  std::vector<CorpusRecord> out;
  std::map<std::string, int> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const CorpusError& e) {
      throw CorpusError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
    auto [it, fresh] = seen.emplace(out.back().id, lineno);
    if (!fresh)
      throw CorpusError(source + ":" + std::to_string(lineno) + ": duplicate id " + out.back().id + " (first at line " +
                        std::to_string(it->second) + ")");
  }
  return out;
}

void register_reader(const std::string& format, CorpusReader reader) {
  std::lock_guard<std::mutex> lock(readers_mu());
  readers()[format] = std::move(reader);
}

std::vector<CorpusRecord> ingest(const std::string& path, const std::string& format) {
  CorpusReader reader;
  {
    std::lock_guard<std::mutex> lock(readers_mu());
    auto it = readers().find(format);
    if (it == readers().end()) throw CorpusError("unknown corpus format: " + format);
    reader = it->second;
  }
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open " + path);
  return reader(in, path);
}

void write_jsonl(std::ostream& out, const std::vector<CorpusRecord>& records) {
  for (const auto& r : records) out << record_to_json(r) << '\n';
}

void require_gold(const std::vector<CorpusRecord>& records) {
  for (const auto& r : records)
    if (!r.has_gold()) throw CorpusError("record " + r.id + " has no gold ULF");
}

std::vector<int> round_order(const SplitPattern& p) {
  std::vector<int> left = p.shares, order;
  for (int s : left)
    if (s < 0) throw std::invalid_argument("split pattern shares must be non-negative");
  bool any = true;
  while (any) {
    any = false;
    for (std::size_t i = 0; i < left.size(); ++i)
      if (left[i] > 0) {
        order.push_back(static_cast<int>(i));
        --left[i];
        any = true;
      }
  }
  return order;
}

LengthStats length_stats(const std::vector<int>& lengths) {
  LengthStats s;
  s.count = lengths.size();
  if (lengths.empty()) return s;
  std::vector<int> v = lengths;
  std::sort(v.begin(), v.end());
  long total = 0;
  for (int x : v) total += x;
  s.mean = double(total) / double(v.size());
  std::size_t mid = v.size() / 2;
  s.median = v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0;
  s.min = v.front();
  s.max = v.back();
  return s;
}

LengthStats sentence_length_stats(const std::vector<CorpusRecord>& records) {
  std::vector<int> lengths;
  for (const auto& r : records) lengths.push_back(static_cast<int>(r.sentence.size()));
  return length_stats(lengths);
}

std::string demo_lemma(std::string_view word) {
  static const std::map<std::string, std::string> exceptions{
      {"is", "be"},       {"are", "be"},     {"was", "be"},     {"were", "be"},   {"am", "be"},
      {"been", "be"},     {"has", "have"},   {"had", "have"},   {"does", "do"},   {"did", "do"},
      {"went", "go"},     {"gone", "go"},    {"made", "make"},  {"said", "say"},  {"saw", "see"},
      {"seen", "see"},    {"took", "take"},  {"got", "get"},    {"came", "come"}, {"children", "child"},
      {"men", "man"},     {"women", "woman"}, {"feet", "foot"}, {"mice", "mouse"}, {"this", "this"},
      {"his", "his"},    {"its", "its"},    {"us", "us"},     {"thing", "thing"},
      {"something", "something"}, {"nothing", "nothing"}, {"everything", "everything"}, {"bus", "bus"},
      {"news", "news"},   {"always", "always"}, {"perhaps", "perhaps"}};
  std::string w = to_lower(word);
  if (auto it = exceptions.find(w); it != exceptions.end()) return it->second;
  auto ends = [&](std::string_view s) { return w.size() > s.size() + 2 && w.ends_with(s); };
  if (ends("ies")) return w.substr(0, w.size() - 3) + "y";
  if (ends("sses") || ends("shes") || ends("ches") || ends("xes")) return w.substr(0, w.size() - 2);
  if (ends("ing")) return w.substr(0, w.size() - 3);
  if (ends("ed")) return w.substr(0, w.size() - 2);
  if (ends("s") && !w.ends_with("ss") && !w.ends_with("us")) return w.substr(0, w.size() - 1);
  return w;
}

Sentence demo_sentence(std::string_view text) {
  Sentence s = Sentence::from_words(text);
  for (auto& t : s.tokens) t.lemma = demo_lemma(t.surface);
  return s;
}

namespace {

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw CorpusError("config " + key + ": expected an integer, got \"" + v + "\"");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  std::string l = to_lower(v);
  if (l == "1" || l == "true" || l == "on" || l == "yes") return true;
  if (l == "0" || l == "false" || l == "off" || l == "no") return false;
  throw CorpusError("config " + key + ": expected a boolean, got \"" + v + "\"");
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  auto positive = [&](int x) {
    if (x < 1) throw CorpusError("config " + key + ": must be at least 1");
    return x;
  };
  if (key == "beam") beam = positive(parse_int(key, value));
  else if (key == "type_beam") type_beam = positive(parse_int(key, value));
  else if (key == "types") types = parse_bool(key, value);
  else if (key == "lexicon") lexicon = parse_bool(key, value);
  else if (key == "cap") cap = positive(parse_int(key, value));
  else if (key == "epochs") epochs = positive(parse_int(key, value));
  else if (key == "k") k = positive(parse_int(key, value));
  else if (key == "restarts") restarts = positive(parse_int(key, value));
  else if (key == "seed") {
    try {
      std::size_t used = 0;
      seed = std::stoull(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw CorpusError("config seed: expected an unsigned integer, got \"" + value + "\"");
    }
  } else if (key == "threads") threads = positive(parse_int(key, value));
  else if (key == "model") model_path = value;
  else if (key == "lexicon_path") lexicon_path = value;
  else if (key == "types_path") types_path = value;
  else throw CorpusError("unknown config key: " + key);
}

void RunConfig::parse_text(std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw CorpusError(source + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
    } catch (const CorpusError& e) {
      throw CorpusError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  parse_text(ss.str(), path);
}

std::map<std::string, std::string> RunConfig::entries() const {
  return {{"beam", std::to_string(beam)},
          {"type_beam", std::to_string(type_beam)},
          {"types", types ? "true" : "false"},
          {"lexicon", lexicon ? "true" : "false"},
          {"cap", std::to_string(cap)},
          {"epochs", std::to_string(epochs)},
          {"k", std::to_string(k)},
          {"restarts", std::to_string(restarts)},
          {"seed", std::to_string(seed)},
          {"threads", std::to_string(threads)},
          {"model", model_path},
          {"lexicon_path", lexicon_path},
          {"types_path", types_path}};
}

int threads_from_env(int fallback) {
  const char* v = std::getenv("ULF_THREADS");
  if (!v || !*v) return fallback;
  char* end = nullptr;
  long n = std::strtol(v, &end, 10);
  return (*end == '\0' && n > 0) ? static_cast<int>(n) : fallback;
}

AlignedExample align_record(const CorpusRecord& r, const std::vector<std::string>& promote) {
  std::set<Atom> never;
  for (const auto& p : promote) never.insert(Atom::parse(p));
  UlfGraph gold = r.gold_graph();
  AlignmentMap a = align(r.sentence, gold, never);
  return AlignedExample{r.sentence, std::move(gold), std::move(a)};
}

Lexicon lexicon_from_graphs(const std::vector<UlfGraph>& graphs) {
  Lexicon lex;
  for (const auto& g : graphs)
    for (const auto& v : g.vertices)
      if (v.symbol.kind != AtomKind::Operator) lex.add(v.symbol.stem, v.symbol);
  return lex;
}

UlfGraph merge_fragments(const std::vector<UlfGraph>& fragments) {
  UlfGraph out;
  for (const auto& f : fragments) {
    int off = static_cast<int>(out.size());
    for (const auto& v : f.vertices) out.add_vertex(v);
    for (const auto& e : f.edges) out.add_edge(e.src + off, e.dst + off, e.label);
    if (out.root < 0 && f.root >= 0) out.root = f.root + off;
  }
  return out;
}

void write_graph_file(std::ostream& out, const std::vector<GraphEntry>& entries) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) out << '\n';
    out << "# ::id " << entries[i].id << '\n';
    if (!entries[i].graph.empty()) out << emit_penman(entries[i].graph) << '\n';
  }
}

std::vector<GraphEntry> read_graph_file(std::istream& in, const std::string& source) {
  std::vector<GraphEntry> out;
  std::string line, body;
  int lineno = 0, start = 0;
  auto flush = [&] {
    if (out.empty()) {
      if (body.find_first_not_of(" \t\r\n") != std::string::npos)
        throw CorpusError(source + ":" + std::to_string(lineno) + ": graph before the first \"# ::id\" line");
      return;
    }
    try {
      out.back().graph = merge_fragments(parse_penman_list(body));
    } catch (const std::exception& e) {
      throw CorpusError(source + ":" + std::to_string(start) + ": " + e.what());
    }
    body.clear();
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# ::id ", 0) == 0) {
      flush();
      out.push_back(GraphEntry{trim(line.substr(7)), {}});
      start = lineno;
    } else if (!line.empty() && line[0] == '#') {
      continue;
    } else {
      body += line + '\n';
    }
  }
  flush();
  return out;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f) {
  int t = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < t; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace ulf
