// ulfparse: command-line front end for the ULF parsing toolkit.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "ulf/constraints.hpp"
#include "ulf/corpus.hpp"
#include "ulf/pipeline.hpp"

using namespace ulf;

namespace {

constexpr int kExitFailed = 1;
constexpr int kExitError = 3;

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& operator*() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// 100 -> "100", 96.5 -> "96.50".
std::string percent(std::size_t num, std::size_t den) {
  if (den == 0) return "n/a";
  if (num == den) return "100%";
  return fixed(100.0 * double(num) / double(den), 2) + "%";
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<GraphEntry> gold_entries(const std::string& path) {
  if (ends_with(path, ".jsonl")) {
    auto records = ingest(path);
    require_gold(records);
    std::vector<GraphEntry> out;
    for (const auto& r : records) out.push_back(GraphEntry{r.id, r.gold_graph()});
    return out;
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_graph_file(in, path);
}

std::vector<std::pair<std::string, std::vector<Action>>> load_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_oracle_dump(in);
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// Options that map onto RunConfig keys: config file values apply first,
// flags given on the command line win.
struct ConfigFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    options[key] = app->add_option(flag, values[key], help);
  }
  void add_flag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    options[key] = app->add_flag(flag, help);
  }
  void apply(RunConfig& cfg) const {
    for (const auto& [key, opt] : options) {
      if (opt->count() == 0) continue;
      auto it = values.find(key);
      cfg.set(key, it != values.end() && !it->second.empty() ? it->second : "true");
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ULF semantic parsing toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key = value run configuration file");
  ConfigFlags global;
  global.add(&app, "--threads", "threads", "worker threads (default: ULF_THREADS or 1)");

  // convert
  auto* convert = app.add_subcommand("convert", "convert between ULF s-expressions and penman");
  std::string conv_in = "-", conv_to, conv_out;
  convert->add_option("input", conv_in, "input file, - for stdin");
  convert->add_option("--to", conv_to, "target notation")->required()->check(CLI::IsMember({"ulf", "penman"}));
  convert->add_option("-o,--output", conv_out, "output file");

  // align
  auto* align_cmd = app.add_subcommand("align", "word-to-symbol alignment of a gold corpus");
  std::string align_in, align_out;
  align_cmd->add_option("corpus", align_in, "JSON-lines corpus")->required();
  align_cmd->add_option("-o,--output", align_out, "output file");

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "extract oracle action sequences");
  std::string oracle_in, oracle_out, oracle_symbols, oracle_against;
  bool oracle_verify = false;
  oracle_cmd->add_option("corpus", oracle_in, "JSON-lines corpus with gold ULFs")->required();
  oracle_cmd->add_option("-o,--output", oracle_out, "write the action sequences here");
  oracle_cmd->add_option("--symbols-from", oracle_symbols, "training corpus for the symbol sets (default: the input)");
  oracle_cmd->add_flag("--verify", oracle_verify, "fail unless every sequence replays to its gold graph");
  oracle_cmd->add_option("--against", oracle_against, "verify the sequences in this dump instead of fresh ones");
  ConfigFlags oracle_flags;
  oracle_flags.add(oracle_cmd, "--threads", "threads", "worker threads");

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "run action sequences through the machine");
  std::string replay_corpus, replay_dump, replay_out;
  replay_cmd->add_option("corpus", replay_corpus, "JSON-lines corpus (sentences)")->required();
  replay_cmd->add_option("actions", replay_dump, "action sequence dump")->required();
  replay_cmd->add_option("-o,--output", replay_out, "graph file");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the averaged perceptron on oracle sequences");
  std::string train_in, train_lex_out;
  train_cmd->add_option("corpus", train_in, "training corpus")->required();
  train_cmd->add_option("--lexicon-out", train_lex_out, "also write the training lexicon (TSV)");
  ConfigFlags train_flags;
  train_flags.add(train_cmd, "-o,--model", "model", "model output file");
  train_flags.add(train_cmd, "--epochs", "epochs", "training epochs");
  train_flags.add(train_cmd, "--seed", "seed", "shuffle and hashing seed");

  // parse
  auto* parse_cmd = app.add_subcommand("parse", "decode sentences with beam search");
  std::string parse_in, parse_out, parse_scorer = "perceptron", parse_external, parse_symbols, parse_trace;
  bool parse_text = false;
  parse_cmd->add_option("input", parse_in, "JSON-lines corpus, or plain text with --text")->required();
  parse_cmd->add_option("-o,--output", parse_out, "graph file");
  parse_cmd->add_option("--scorer", parse_scorer, "action scorer")
      ->check(CLI::IsMember({"perceptron", "oracle", "random", "external"}));
  parse_cmd->add_option("--external", parse_external, "command line of an external scorer process");
  parse_cmd->add_option("--symbols-from", parse_symbols, "training corpus for the oracle scorer's symbol sets");
  parse_cmd->add_option("--trace-out", parse_trace, "write the decoded action sequences here");
  parse_cmd->add_flag("--text", parse_text, "input is raw text, one sentence per line (demo lemmatizer, not faithful)");
  ConfigFlags parse_flags;
  parse_flags.add(parse_cmd, "--model", "model", "perceptron model file");
  parse_flags.add(parse_cmd, "--lexicon", "lexicon_path", "lexicon TSV; enables the lexicon constraint");
  parse_flags.options["types"] = parse_cmd->add_option("--types", parse_flags.values["types_path"],
                                                       "enable the type constraint, optionally with a grammar file")
                                     ->expected(0, 1);
  parse_flags.add(parse_cmd, "--beam", "beam", "beam size without the type constraint");
  parse_flags.add(parse_cmd, "--type-beam", "type_beam", "beam size with the type constraint");
  parse_flags.add(parse_cmd, "--cap", "cap", "action cap per sentence");
  parse_flags.add(parse_cmd, "--seed", "seed", "seed of the random scorer");
  parse_flags.add(parse_cmd, "--threads", "threads", "worker threads");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score parses against gold graphs");
  std::string eval_gold, eval_cand, eval_out, eval_metric = "both", eval_format = "tsv";
  bool eval_largest = false;
  eval_cmd->add_option("gold", eval_gold, "gold graph file or JSON-lines corpus")->required();
  eval_cmd->add_option("candidate", eval_cand, "candidate graph file or JSON-lines corpus")->required();
  eval_cmd->add_option("--metric", eval_metric, "metrics to compute")
      ->check(CLI::IsMember({"sembleu", "elsmatch", "both"}));
  eval_cmd->add_option("--format", eval_format, "report format")->check(CLI::IsMember({"tsv", "json"}));
  eval_cmd->add_flag("--largest-fragment", eval_largest, "score only the largest candidate fragment");
  eval_cmd->add_option("-o,--output", eval_out, "report file");
  ConfigFlags eval_flags;
  eval_flags.add(eval_cmd, "--k", "k", "SemBLEU maximum n-gram order");
  eval_flags.add(eval_cmd, "--restarts", "restarts", "EL-Smatch restarts");
  eval_flags.add(eval_cmd, "--seed", "seed", "EL-Smatch seed");
  eval_flags.add(eval_cmd, "--threads", "threads", "worker threads");

  // split
  auto* split_cmd = app.add_subcommand("split", "round-robin train/dev/test split");
  std::string split_in, split_prefix;
  int split_chunk = 10;
  std::vector<int> split_pattern{8, 1, 1};
  split_cmd->add_option("corpus", split_in, "JSON-lines corpus")->required();
  split_cmd->add_option("--prefix", split_prefix, "write PREFIX.train.jsonl, PREFIX.dev.jsonl, PREFIX.test.jsonl");
  split_cmd->add_option("--chunk", split_chunk, "records per chunk")->check(CLI::PositiveNumber);
  split_cmd->add_option("--pattern", split_pattern, "chunks per round for train, dev, test")
      ->expected(3)
      ->delimiter(',');

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "sentence length statistics");
  std::string stats_in;
  bool stats_check = false;
  stats_cmd->add_option("corpus", stats_in, "JSON-lines corpus")->required();
  stats_cmd->add_flag("--check-release", stats_check,
                      "fail unless the statistics match the released corpus (10.275 / 8 / 2 / 128)");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg;
    cfg.threads = threads_from_env(1);
    if (!config_path.empty()) cfg.load(config_path);
    global.apply(cfg);

    if (*convert) {
      std::string text = slurp(conv_in);
      Output out(conv_out);
      bool penman_in = text.find(" / ") != std::string::npos;
      std::vector<UlfGraph> graphs;
      if (penman_in) {
        graphs = parse_penman_list(text);
      } else {
        for (const auto& t : parse_sexpr_list(text)) graphs.push_back(tree_to_graph(t));
      }
      for (std::size_t i = 0; i < graphs.size(); ++i) {
        if (conv_to == "penman") {
          if (i) *out << '\n';
          *out << emit_penman(graphs[i]) << '\n';
        } else {
          *out << graph_to_tree(graphs[i]).to_string() << '\n';
        }
      }
      return 0;
    }

    if (*align_cmd) {
      auto records = ingest(align_in);
      require_gold(records);
      std::vector<std::string> blocks(records.size());
      int bad = 0;
      parallel_for(records.size(), cfg.threads, [&](std::size_t i) {
        AlignedExample ex = align_record(records[i]);
        std::ostringstream o;
        o << "# ::id " << records[i].id << '\n';
        for (const auto& sp : ex.alignment.span_pairs) {
          std::string words, labels;
          for (int w = sp.first; w <= sp.last; ++w) words += (w > sp.first ? " " : "") + ex.sentence.at(w).surface;
          for (std::size_t k = 0; k < sp.vertices.size(); ++k)
            labels += (k ? " " : "") + ex.gold.vertices[static_cast<std::size_t>(sp.vertices[k])].symbol.render();
          o << sp.first << '-' << sp.last << '\t' << words << '\t' << labels << '\n';
        }
        if (std::string why = check_alignment(ex.alignment, ex.gold); !why.empty()) o << "# warning: " << why << '\n';
        blocks[i] = o.str();
      });
      Output out(align_out);
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i) *out << '\n';
        *out << blocks[i];
        bad += blocks[i].find("# warning: ") != std::string::npos;
      }
      if (bad) std::cerr << bad << " alignment(s) violate the contiguity invariants\n";
      return 0;
    }

    if (*oracle_cmd) {
      oracle_flags.apply(cfg);
      auto records = ingest(oracle_in);
      require_gold(records);
      SymbolSets symbols = symbol_sets_for(oracle_symbols.empty() ? records : ingest(oracle_symbols));
      std::vector<OracleResult> results;
      if (!oracle_against.empty()) {
        auto dump = load_dump(oracle_against);
        std::map<std::string, const CorpusRecord*> by_id;
        for (const auto& r : records) by_id[r.id] = &r;
        results.resize(dump.size());
        parallel_for(dump.size(), cfg.threads, [&](std::size_t i) {
          results[i].id = dump[i].first;
          results[i].actions = dump[i].second;
          auto it = by_id.find(dump[i].first);
          if (it == by_id.end()) {
            results[i].error = "no corpus record with this id";
            return;
          }
          results[i].divergence = verify_trace(align_record(*it->second), symbols, dump[i].second);
        });
      } else {
        results = run_oracle(records, symbols, cfg.threads);
      }
      if (!oracle_out.empty()) {
        std::vector<std::pair<std::string, std::vector<Action>>> entries;
        for (const auto& r : results)
          if (r.error.empty()) entries.emplace_back(r.id, r.actions);
        Output out(oracle_out);
        write_oracle_dump(*out, entries);
      }
      std::size_t ok = 0;
      std::vector<int> lengths;
      const OracleResult* first_bad = nullptr;
      for (const auto& r : results) {
        if (r.ok()) ++ok;
        else if (!first_bad) first_bad = &r;
        if (r.error.empty()) lengths.push_back(static_cast<int>(r.actions.size()));
      }
      LengthStats ls = length_stats(lengths);
      std::cout << "records\t" << results.size() << '\n'
                << "round-trip " << percent(ok, results.size()) << " (" << ok << "/" << results.size() << ")\n"
                << "actions mean\t" << fixed(ls.mean, 3) << "\nactions median\t" << fixed(ls.median, 1)
                << "\nactions min\t" << ls.min << "\nactions max\t" << ls.max << '\n';
      for (const auto& r : results) {
        if (r.ok()) continue;
        if (!r.error.empty())
          std::cerr << r.id << ": oracle failed after " << r.actions.size() << " actions: " << r.error << '\n';
        else
          std::cerr << r.id << ": diverges at action " << r.divergence->step << " (" << r.divergence->action
                    << "): " << r.divergence->reason << '\n';
      }
      if (oracle_verify && first_bad) {
        std::cerr << "verification failed; first failing record " << first_bad->id << '\n';
        return kExitFailed;
      }
      return 0;
    }

    if (*replay_cmd) {
      auto records = ingest(replay_corpus);
      std::map<std::string, const CorpusRecord*> by_id;
      for (const auto& r : records) by_id[r.id] = &r;
      std::vector<GraphEntry> out_entries;
      for (const auto& [id, actions] : load_dump(replay_dump)) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw CorpusError("action dump names unknown record " + id);
        Config c = replay(it->second->sentence, actions);
        out_entries.push_back(GraphEntry{id, merge_fragments(extract_result(c))});
      }
      Output out(replay_out);
      write_graph_file(*out, out_entries);
      return 0;
    }

    if (*train_cmd) {
      train_flags.apply(cfg);
      if (cfg.model_path.empty()) throw CorpusError("train needs a model path (--model or model = ...)");
      auto records = ingest(train_in);
      TrainedParser tp = train_parser(records, cfg.epochs, cfg.seed);
      tp.model.save(cfg.model_path);
      if (!train_lex_out.empty()) {
        Output out(train_lex_out);
        *out << tp.lexicon.to_tsv();
      }
      std::cout << "records\t" << records.size() << "\nweights\t" << tp.model.weights.size() << '\n';
      return 0;
    }

    if (*parse_cmd) {
      parse_flags.apply(cfg);
      std::vector<CorpusRecord> records;
      if (parse_text) {
        std::cerr << "note: --text uses a rule-based demo lemmatizer and no POS/NER/dependency annotations\n";
        std::istringstream in(slurp(parse_in));
        int n = 0;
        for (std::string line; std::getline(in, line);) {
          if (split_words(line).empty()) continue;
          CorpusRecord r;
          r.id = "s" + std::to_string(++n);
          r.sentence = demo_sentence(line);
          records.push_back(std::move(r));
        }
      } else {
        records = ingest(parse_in);
      }

      std::unique_ptr<PerceptronModel> model;
      ActionVocab vocab;
      std::vector<std::unique_ptr<Scorer>> per_record;
      std::unique_ptr<Scorer> shared;
      if (parse_scorer == "oracle") {
        require_gold(records);
        SymbolSets symbols = symbol_sets_for(parse_symbols.empty() ? records : ingest(parse_symbols));
        auto oracle = run_oracle(records, symbols, cfg.threads);
        std::vector<TrainingExample> examples;
        for (const auto& r : oracle) {
          if (!r.error.empty()) throw CorpusError("oracle failed on " + r.id + ": " + r.error);
          per_record.push_back(std::make_unique<OracleScorer>(r.actions));
          examples.push_back(TrainingExample{{}, {}, r.actions});
        }
        vocab = vocab_from_oracle(examples);
      } else {
        if (cfg.model_path.empty()) throw CorpusError("parse needs --model unless --scorer oracle is used");
        model = std::make_unique<PerceptronModel>(PerceptronModel::load(cfg.model_path));
        vocab = model->vocab;
        if (parse_scorer == "perceptron") shared = std::make_unique<PerceptronScorer>(*model);
        else if (parse_scorer == "random") shared = std::make_unique<RandomScorer>(cfg.seed);
        else {
          auto argv_ext = split_words(parse_external);
          if (argv_ext.empty()) throw CorpusError("--scorer external needs --external \"command ...\"");
          shared = std::make_unique<ExternalScorer>(argv_ext);
        }
      }

      std::unique_ptr<Lexicon> lexicon;
      std::unique_ptr<TypeGrammar> grammar;
      DecodeOptions opt;
      opt.cap = cfg.cap;
      if (!cfg.lexicon_path.empty()) {
        lexicon = std::make_unique<Lexicon>(Lexicon::load(cfg.lexicon_path));
        opt.lexicon = lexicon.get();
      }
      if (cfg.types) {
        grammar = std::make_unique<TypeGrammar>(cfg.types_path.empty() ? TypeGrammar::builtin()
                                                                        : TypeGrammar::load(cfg.types_path));
        opt.types = grammar.get();
      }
      opt.beam = cfg.effective_beam();
      ScorerFor pick = [&](std::size_t i) -> Scorer& { return shared ? *shared : *per_record[i]; };
      auto results = parse_records(records, pick, vocab, opt, cfg.threads);

      std::vector<GraphEntry> entries;
      std::vector<std::pair<std::string, std::vector<Action>>> traces;
      int unfinished = 0;
      for (std::size_t i = 0; i < records.size(); ++i) {
        entries.push_back(GraphEntry{records[i].id, merge_fragments(results[i].fragments)});
        traces.emplace_back(records[i].id, results[i].trace);
        unfinished += !results[i].terminal;
      }
      Output out(parse_out);
      write_graph_file(*out, entries);
      if (!parse_trace.empty()) {
        Output t(parse_trace);
        write_oracle_dump(*t, traces);
      }
      if (unfinished) std::cerr << unfinished << " sentence(s) stopped before a terminal configuration\n";
      return 0;
    }

    if (*eval_cmd) {
      eval_flags.apply(cfg);
      EvalConfig ec;
      ec.sembleu = eval_metric != "elsmatch";
      ec.smatch = eval_metric != "sembleu";
      ec.k = cfg.k;
      ec.restarts = cfg.restarts;
      ec.seed = cfg.seed;
      ec.largest_fragment = eval_largest;
      auto golds = gold_entries(eval_gold);
      auto cands = gold_entries(eval_cand);
      EvalReport rep = evaluate(cands, golds, ec, cfg.threads);
      Output out(eval_out);
      *out << (eval_format == "json" ? rep.to_json() : rep.to_tsv());
      return 0;
    }

    if (*split_cmd) {
      auto records = ingest(split_in);
      auto parts = split_round_robin(records, SplitPattern{split_chunk, split_pattern});
      const char* names[] = {"train", "dev", "test"};
      for (std::size_t i = 0; i < parts.size(); ++i) {
        std::cout << names[i] << '\t' << parts[i].size() << '\n';
        if (!split_prefix.empty()) {
          Output out(split_prefix + "." + names[i] + ".jsonl");
          write_jsonl(*out, parts[i]);
        }
      }
      return 0;
    }

    if (*stats_cmd) {
      auto records = ingest(stats_in);
      LengthStats s = sentence_length_stats(records);
      std::cout << "sentences\t" << s.count << "\nmean\t" << fixed(s.mean, 3) << "\nmedian\t" << fixed(s.median, 1)
                << "\nmin\t" << s.min << "\nmax\t" << s.max << '\n';
      if (stats_check) {
        bool match = fixed(s.mean, 3) == "10.275" && s.median == 8 && s.min == 2 && s.max == 128;
        std::cout << "release check\t" << (match ? "match" : "MISMATCH") << '\n';
        if (!match) return kExitFailed;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return 0;
}
