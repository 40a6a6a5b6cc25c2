#include <atomic>
#include <cstdlib>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "ulf/corpus.hpp"
#include "ulf/pipeline.hpp"

using namespace ulf;

namespace {

const char* kRecordA =
    R"j({"id": "a", "tokens": ["I", "run"], "lemmas": ["i", "run"], "pos": ["PRP", "VBP"], "ner": ["O", "O"], "ulf": "(i.pro (pres run.v))"})j";
const char* kRecordB =
    R"j({"id": "b", "tokens": ["Dogs", "bark"], "lemmas": ["dog", "bark"], "pos": ["NNS", "VBP"], "ner": ["O", "O"], "heads": [2, 0], "deprels": ["nsubj", "root"]})j";

std::vector<CorpusRecord> read(const std::string& text) {
  std::istringstream in(text);
  return read_jsonl(in, "mem");
}

std::string error_of(const std::string& text) {
  try {
    read(text);
  } catch (const CorpusError& e) {
    return e.what();
  }
  return {};
}

std::vector<std::size_t> sizes(const std::vector<std::vector<int>>& parts) {
  std::vector<std::size_t> out;
  for (const auto& p : parts) out.push_back(p.size());
  return out;
}

std::vector<int> iota(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST_CASE("reading JSON lines") {
  auto rs = read(std::string(kRecordA) + "\n\n" + kRecordB + "\n");
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].id == "a");
  CHECK(rs[0].has_gold());
  CHECK(rs[0].sentence.at(2).lemma == "run");
  CHECK(rs[0].dep.empty());
  CHECK_FALSE(rs[1].has_gold());
  CHECK(rs[1].dep.head == std::vector<int>{2, 0});
  CHECK(rs[1].sentence.raw == "Dogs bark");
  CHECK(rs[0].gold_graph().size() == 3);
  CHECK_THROWS_AS(rs[1].gold_graph(), CorpusError);

  // write and read back
  std::ostringstream out;
  write_jsonl(out, rs);
  auto back = read(out.str());
  REQUIRE(back.size() == 2);
  CHECK(record_to_json(back[0]) == record_to_json(rs[0]));
  CHECK(record_to_json(back[1]) == record_to_json(rs[1]));
}

TEST_CASE("ingest errors name the line") {
  std::string no_lemma =
      R"j({"id": "c", "tokens": ["I"], "pos": ["PRP"], "ner": ["O"]})j";
  std::string e = error_of(std::string(kRecordA) + "\n" + no_lemma + "\n");
  CHECK(e.find("mem:2:") == 0);
  CHECK(e.find("lemmas") != std::string::npos);

  CHECK(error_of(std::string(kRecordA) + "\n" + kRecordA).find("duplicate id") != std::string::npos);
  CHECK(error_of("{not json").find("mem:1:") == 0);
  const std::string base = R"j({"id": "x", "tokens": ["a"], "pos": ["X"], "ner": ["O"], )j";
  const std::string len_mismatch = base + R"j("lemmas": ["a", "b"]})j";
  const std::string heads_only = base + R"j("lemmas": ["a"], "heads": [0]})j";
  const std::string bad_head = base + R"j("lemmas": ["a"], "heads": [5], "deprels": ["root"]})j";
  const std::string bad_ulf = base + R"j("lemmas": ["a"], "ulf": "(a.d"})j";
  CHECK(error_of(len_mismatch).find("mem:1:") == 0);
  CHECK(error_of(heads_only).find("deprels") != std::string::npos);
  CHECK(error_of(bad_head).find("mem:1:") == 0);
  CHECK(error_of(bad_ulf).find("mem:1:") == 0);
  CHECK_THROWS_AS(ingest("/nonexistent/corpus.jsonl"), CorpusError);
  CHECK_THROWS_AS(ingest(testing::data_path("minicorpus.jsonl"), "conll"), CorpusError);
}

TEST_CASE("gold is optional for parsing and required for the oracle") {
  auto rs = read(std::string(kRecordA) + "\n" + kRecordB);
  CHECK_THROWS_AS(require_gold(rs), CorpusError);
  CHECK_THROWS_AS(run_oracle(rs, SymbolSets{}), CorpusError);
  CHECK_NOTHROW(require_gold({rs[0]}));
}

TEST_CASE("custom readers") {
  register_reader("words", [](std::istream& in, const std::string&) {
    std::vector<CorpusRecord> out;
    std::string line;
    while (std::getline(in, line)) {
      CorpusRecord r;
      r.id = "w" + std::to_string(out.size());
      r.sentence = demo_sentence(line);
      out.push_back(r);
    }
    return out;
  });
  auto rs = ingest(testing::source_path("tests/golden/fig1.ulf"), "words");
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].id == "w0");
}

TEST_CASE("round-robin splits") {
  CHECK(round_order({}) == std::vector<int>{0, 1, 2, 0, 0, 0, 0, 0, 0, 0});
  CHECK(sizes(split_round_robin(iota(100))) == std::vector<std::size_t>{80, 10, 10});
  CHECK(sizes(split_round_robin(iota(1738))) == std::vector<std::size_t>{1378, 180, 180});
  CHECK(sizes(split_round_robin(iota(5))) == std::vector<std::size_t>{5, 0, 0});
  CHECK(sizes(split_round_robin(iota(0))) == std::vector<std::size_t>{0, 0, 0});

  // order within a part follows the input; every item lands exactly once
  auto parts = split_round_robin(iota(1738));
  std::vector<int> all;
  for (const auto& p : parts) {
    CHECK(std::is_sorted(p.begin(), p.end()));
    all.insert(all.end(), p.begin(), p.end());
  }
  std::sort(all.begin(), all.end());
  CHECK(all == iota(1738));
  // chunk 2 (items 10-19) is dev, chunk 3 is test
  CHECK(parts[1].front() == 10);
  CHECK(parts[2].front() == 20);

  SplitPattern p{5, {1, 1}};
  CHECK(sizes(split_round_robin(iota(12), p)) == std::vector<std::size_t>{7, 5});
  CHECK_THROWS(split_round_robin(iota(3), SplitPattern{0, {1}}));
}

TEST_CASE("length statistics") {
  auto s = length_stats({3, 1, 2, 10});
  CHECK(s.count == 4);
  CHECK(s.mean == doctest::Approx(4.0));
  CHECK(s.median == doctest::Approx(2.5));
  CHECK(s.min == 1);
  CHECK(s.max == 10);
  CHECK(length_stats({}).count == 0);

  auto mc = sentence_length_stats(ingest(testing::data_path("minicorpus.jsonl")));
  CHECK(mc.count == 25);
  CHECK(mc.min == 3);
  CHECK(mc.max == 8);
}

TEST_CASE("demo lemmatizer") {
  CHECK(demo_lemma("dogs") == "dog");
  CHECK(demo_lemma("Walked") == "walk");
  CHECK(demo_lemma("cities") == "city");
  CHECK(demo_lemma("matches") == "match");
  CHECK(demo_lemma("boxes") == "boxe");  // too short for the -xes rule
  CHECK(demo_lemma("was") == "be");
  CHECK(demo_lemma("glass") == "glass");
  CHECK(demo_lemma("is") == "be");
  Sentence s = demo_sentence("The children played");
  CHECK(s.at(2).lemma == "child");
  CHECK(s.at(3).lemma == "play");
}

TEST_CASE("run configuration") {
  RunConfig c;
  c.parse_text("# comment\nbeam = 5\ntypes = true\ntype_beam = 12\nseed = 42\n\nlexicon_path = lex.tsv\n");
  CHECK(c.beam == 5);
  CHECK(c.types);
  CHECK(c.effective_beam() == 12);
  CHECK(c.seed == 42u);
  CHECK(c.lexicon_path == "lex.tsv");
  // later settings win, as flags applied after the file do
  c.set("beam", "2");
  CHECK(c.beam == 2);
  CHECK_THROWS_AS(c.parse_text("colour = blue\n"), CorpusError);
  CHECK_THROWS_AS(c.parse_text("beam = many\n"), CorpusError);
  CHECK_THROWS_AS(c.parse_text("beam = 0\n"), CorpusError);
  CHECK_THROWS_AS(c.parse_text("beam\n"), CorpusError);

  RunConfig round;
  round.parse_text("beam = 7\nepochs = 3\n");
  RunConfig again;
  for (const auto& [k, v] : round.entries()) again.set(k, v);
  CHECK(again.entries() == round.entries());
}

TEST_CASE("threads from the environment") {
  ::setenv("ULF_THREADS", "3", 1);
  CHECK(threads_from_env(1) == 3);
  ::setenv("ULF_THREADS", "zero", 1);
  CHECK(threads_from_env(2) == 2);
  ::unsetenv("ULF_THREADS");
  CHECK(threads_from_env(1) == 1);
}

TEST_CASE("parallel_for") {
  std::vector<int> out(100, 0);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));

  std::atomic<int> ran{0};
  CHECK_THROWS_AS(parallel_for(50, 3,
                               [&](std::size_t i) {
                                 ++ran;
                                 if (i == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("graph files") {
  UlfGraph a = tree_to_graph(parse_sexpr("(pres run.v)"));
  UlfGraph frag;
  frag.add_vertex({Atom::parse("i.pro"), {}});
  frag.add_vertex({Atom::parse("|New York|"), {}});
  frag.root = 0;
  std::vector<GraphEntry> entries{{"one", a}, {"two", frag}, {"none", UlfGraph{}}};
  std::stringstream ss;
  write_graph_file(ss, entries);
  auto back = read_graph_file(ss, "mem");
  REQUIRE(back.size() == 3);
  CHECK(back[0].id == "one");
  CHECK(back[0].graph.same_structure(a));
  CHECK(back[1].graph.roots().size() == 2);
  CHECK(back[2].graph.empty());

  std::istringstream bad("(v0 / a.d)\n");
  CHECK_THROWS(read_graph_file(bad, "mem"));
}

TEST_CASE("fragments merge into one forest") {
  UlfGraph a = tree_to_graph(parse_sexpr("(pres run.v)")), b = tree_to_graph(parse_sexpr("i.pro"));
  UlfGraph m = merge_fragments({a, b});
  CHECK(m.size() == 3);
  CHECK(m.root == 0);
  CHECK(m.components().size() == 2);
}

TEST_CASE("lexicon from gold graphs") {
  Lexicon lex = lexicon_from_graphs({tree_to_graph(parse_sexpr("(|New York| ((pres be.v) (= (a.d city.n))))"))});
  REQUIRE(lex.lookup("new york"));
  CHECK(lex.lookup("new york")->count("|New York|"));
  REQUIRE(lex.lookup("city"));
  CHECK(lex.lookup("pres") == nullptr);  // operators are not lexical
}

TEST_CASE("evaluate pairs candidates by id") {
  UlfGraph g = tree_to_graph(parse_sexpr("(pres run.v)"));
  std::vector<GraphEntry> golds{{"x", g}, {"y", g}};
  auto rep = evaluate({{"y", g}}, golds, {});
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].id == "x");
  CHECK(rep.rows[0].sembleu == 0.0);
  CHECK(rep.rows[1].sembleu == doctest::Approx(1.0));
  CHECK_THROWS(evaluate({{"y", g}, {"y", g}}, golds, {}));
}
