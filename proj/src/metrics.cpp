#include "ulf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include <json.hpp>

namespace ulf {

// ---------------------------------------------------------------- EL-Smatch

TripleSet triples(const UlfGraph& g) {
  TripleSet t;
  for (const auto& v : g.vertices) t.instances.push_back(v.symbol.render());
  for (const auto& e : g.edges) t.relations.emplace_back(e.label, e.src, e.dst);
  t.roots = g.roots();
  return t;
}

int matched_triples(const TripleSet& cand, const TripleSet& gold, const std::vector<int>& mapping) {
  int n = 0;
  for (std::size_t v = 0; v < cand.instances.size(); ++v) {
    int g = mapping[v];
    if (g >= 0 && cand.instances[v] == gold.instances[static_cast<std::size_t>(g)]) ++n;
  }
  for (const auto& [role, s, d] : cand.relations) {
    int gs = mapping[static_cast<std::size_t>(s)], gd = mapping[static_cast<std::size_t>(d)];
    if (gs < 0 || gd < 0) continue;
    for (const auto& [grole, gss, gdd] : gold.relations)
      if (gss == gs && gdd == gd && grole == role) {
        ++n;
        break;
      }
  }
  return n;
}

double SmatchCounts::precision() const { return candidate == 0 ? (gold == 0 ? 1.0 : 0.0) : double(matched) / candidate; }
double SmatchCounts::recall() const { return gold == 0 ? (candidate == 0 ? 1.0 : 0.0) : double(matched) / gold; }
double SmatchCounts::f1() const {
  double p = precision(), r = recall();
  return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}

namespace {

class Matcher {
 public:
  Matcher(const TripleSet& c, const TripleSet& g) : c_(c), g_(g) {
    n_ = static_cast<int>(c.instances.size());
    m_ = static_cast<int>(g.instances.size());
    incident_.resize(static_cast<std::size_t>(n_));
    for (std::size_t i = 0; i < c.relations.size(); ++i) {
      auto [role, s, d] = c.relations[i];
      incident_[static_cast<std::size_t>(s)].push_back(static_cast<int>(i));
      if (d != s) incident_[static_cast<std::size_t>(d)].push_back(static_cast<int>(i));
    }
    for (const auto& [role, s, d] : g.relations) gold_rel_.insert({role, s, d});
  }

  int total(const std::vector<int>& m) const {
    int t = 0;
    for (int v = 0; v < n_; ++v) t += inst(v, m);
    for (std::size_t i = 0; i < c_.relations.size(); ++i) t += rel(static_cast<int>(i), m);
    return t;
  }

  // Score of the triples touching any vertex in `vs` (duplicates ignored).
  int local(const std::vector<int>& vs, const std::vector<int>& m) const {
    int t = 0;
    std::vector<int> rels;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      if (std::find(vs.begin(), vs.begin() + static_cast<long>(i), vs[i]) != vs.begin() + static_cast<long>(i)) continue;
      t += inst(vs[i], m);
      for (int r : incident_[static_cast<std::size_t>(vs[i])]) rels.push_back(r);
    }
    std::sort(rels.begin(), rels.end());
    rels.erase(std::unique(rels.begin(), rels.end()), rels.end());
    for (int r : rels) t += rel(r, m);
    return t;
  }

  // Moves: remap one candidate vertex (swapping with the current owner of the
  // target), or map a candidate edge onto a gold edge with the same role
  // (displaced owners move to a free gold vertex with the same label, if any).
  int climb(std::vector<int>& m) const {
    std::vector<int> owner(static_cast<std::size_t>(m_), -1);
    for (int v = 0; v < n_; ++v)
      if (m[static_cast<std::size_t>(v)] >= 0) owner[static_cast<std::size_t>(m[static_cast<std::size_t>(v)])] = v;
    int score = total(m);
    std::vector<std::pair<int, int>> assign, best_assign;
    auto gain_of = [&](const std::vector<std::pair<int, int>>& as) {
      std::vector<int> touched;
      for (auto [v, g] : as) touched.push_back(v);
      int before = local(touched, m);
      std::vector<int> saved;
      for (auto [v, g] : as) saved.push_back(m[static_cast<std::size_t>(v)]);
      for (auto [v, g] : as) m[static_cast<std::size_t>(v)] = g;
      int after = local(touched, m);
      for (std::size_t i = as.size(); i-- > 0;) m[static_cast<std::size_t>(as[i].first)] = saved[i];
      return after - before;
    };
    auto commit = [&](const std::vector<std::pair<int, int>>& as) {
      for (auto [v, g] : as) {
        int cur = m[static_cast<std::size_t>(v)];
        if (cur >= 0 && owner[static_cast<std::size_t>(cur)] == v) owner[static_cast<std::size_t>(cur)] = -1;
      }
      for (auto [v, g] : as) {
        m[static_cast<std::size_t>(v)] = g;
        if (g >= 0) owner[static_cast<std::size_t>(g)] = v;
      }
    };
    while (true) {
      int best_gain = 0;
      best_assign.clear();
      for (int v = 0; v < n_; ++v) {
        int cur = m[static_cast<std::size_t>(v)];
        for (int g = -1; g < m_; ++g) {
          if (g == cur) continue;
          assign.clear();
          assign.emplace_back(v, g);
          int u = g >= 0 ? owner[static_cast<std::size_t>(g)] : -1;
          if (u >= 0) assign.emplace_back(u, cur);
          int gain = gain_of(assign);
          if (gain > best_gain) {
            best_gain = gain;
            best_assign = assign;
          }
        }
      }
      for (const auto& [role, s, d] : c_.relations) {
        for (const auto& [grole, gs, gd] : g_.relations) {
          if (grole != role || s == d) continue;
          if (m[static_cast<std::size_t>(s)] == gs && m[static_cast<std::size_t>(d)] == gd) continue;
          assign.clear();
          assign.emplace_back(s, gs);
          assign.emplace_back(d, gd);
          for (int g : {gs, gd}) {
            int u = owner[static_cast<std::size_t>(g)];
            if (u < 0 || u == s || u == d) continue;
            int home = -1;
            for (int h = 0; h < m_ && home < 0; ++h) {
              if (h == gs || h == gd || c_.instances[static_cast<std::size_t>(u)] != g_.instances[static_cast<std::size_t>(h)])
                continue;
              int o = owner[static_cast<std::size_t>(h)];
              bool taken = o >= 0 && o != s && o != d;
              for (auto [av, ag] : assign) taken = taken || ag == h;
              if (!taken) home = h;
            }
            assign.emplace_back(u, home);
          }
          int gain = gain_of(assign);
          if (gain > best_gain) {
            best_gain = gain;
            best_assign = assign;
          }
        }
      }
      if (best_assign.empty()) return score;
      commit(best_assign);
      score += best_gain;
    }
  }

  // Start 0: greedy label matching. Start 1: greedy edge matching (role and
  // both endpoint labels), then labels. Later starts: a random injection.
  std::vector<int> start(int index, std::mt19937_64& rng) const {
    std::vector<int> m(static_cast<std::size_t>(n_), -1);
    if (index >= 1) {
      std::vector<int> gs(static_cast<std::size_t>(std::max(n_, m_)), -1);
      std::iota(gs.begin(), gs.begin() + m_, 0);
      std::shuffle(gs.begin(), gs.end(), rng);
      for (int v = 0; v < n_; ++v) m[static_cast<std::size_t>(v)] = gs[static_cast<std::size_t>(v)];
      return m;
    }
    std::vector<bool> used(static_cast<std::size_t>(m_), false);
    auto same = [&](int v, int g) {
      return c_.instances[static_cast<std::size_t>(v)] == g_.instances[static_cast<std::size_t>(g)];
    };
    auto free_pair = [&](int v, int g) { return m[static_cast<std::size_t>(v)] < 0 && !used[static_cast<std::size_t>(g)]; };
    if (index == 1)
      for (const auto& [role, s, d] : c_.relations)
        for (const auto& [grole, gs, gd] : g_.relations)
          if (role == grole && s != d && gs != gd && free_pair(s, gs) && free_pair(d, gd) && same(s, gs) && same(d, gd)) {
            m[static_cast<std::size_t>(s)] = gs;
            m[static_cast<std::size_t>(d)] = gd;
            used[static_cast<std::size_t>(gs)] = used[static_cast<std::size_t>(gd)] = true;
            break;
          }
    for (int v = 0; v < n_; ++v)
      for (int g = 0; g < m_; ++g)
        if (free_pair(v, g) && same(v, g)) {
          m[static_cast<std::size_t>(v)] = g;
          used[static_cast<std::size_t>(g)] = true;
          break;
        }
    return m;
  }

  void kick(std::vector<int>& m, std::mt19937_64& rng) const {
    std::uniform_int_distribution<int> cv(0, n_ - 1), gv(-1, m_ - 1);
    for (int i = 0; i < 2; ++i) {
      int v = cv(rng), g = gv(rng);
      if (g >= 0)
        for (int u = 0; u < n_; ++u)
          if (m[static_cast<std::size_t>(u)] == g) m[static_cast<std::size_t>(u)] = m[static_cast<std::size_t>(v)];
      m[static_cast<std::size_t>(v)] = g;
    }
  }

 private:
  int inst(int v, const std::vector<int>& m) const {
    int g = m[static_cast<std::size_t>(v)];
    return g >= 0 && c_.instances[static_cast<std::size_t>(v)] == g_.instances[static_cast<std::size_t>(g)];
  }
  int rel(int r, const std::vector<int>& m) const {
    const auto& [role, s, d] = c_.relations[static_cast<std::size_t>(r)];
    int gs = m[static_cast<std::size_t>(s)], gd = m[static_cast<std::size_t>(d)];
    if (gs < 0 || gd < 0) return 0;
    return gold_rel_.count({role, gs, gd}) ? 1 : 0;
  }

  const TripleSet& c_;
  const TripleSet& g_;
  int n_ = 0, m_ = 0;
  std::vector<std::vector<int>> incident_;
  std::set<std::tuple<std::string, int, int>> gold_rel_;
};

}  // namespace

SmatchCounts el_smatch_counts(const UlfGraph& candidate, const UlfGraph& gold, int restarts, std::uint64_t seed) {
  TripleSet c = triples(candidate), g = triples(gold);
  SmatchCounts out{0, static_cast<int>(c.size()), static_cast<int>(g.size())};
  if (c.instances.empty() || g.instances.empty()) return out;
  Matcher matcher(c, g);
  std::mt19937_64 rng(seed);
  int best = 0;
  for (int r = 0; r < std::max(1, restarts); ++r) {
    auto m = matcher.start(r, rng);
    int score = matcher.climb(m);
    // Kicks: scramble two candidate vertices and climb again, keeping the
    // better local optimum.
    int kicks = std::min(12, 2 * static_cast<int>(c.instances.size()));
    for (int k = 0; k < kicks; ++k) {
      auto trial = m;
      matcher.kick(trial, rng);
      int s = matcher.climb(trial);
      if (s > score) score = s, m = std::move(trial);
    }
    best = std::max(best, score);
  }
  out.matched = best;
  return out;
}

SmatchScore el_smatch(const UlfGraph& candidate, const UlfGraph& gold, int restarts, std::uint64_t seed) {
  auto c = el_smatch_counts(candidate, gold, restarts, seed);
  return {c.f1(), c.precision(), c.recall()};
}

// ---------------------------------------------------------------- SemBLEU

namespace {
void extend_paths(const UlfGraph& g, int v, const std::string& prefix, int remaining, std::vector<NGramBag>& bags,
                  int order) {
  bags[static_cast<std::size_t>(order - 1)][prefix] += 1;
  if (remaining == 0) return;
  for (const Edge* e : g.outgoing(v)) {
    std::string next = prefix + "\t" + e->label + "\t" + g.vertices[static_cast<std::size_t>(e->dst)].symbol.render();
    extend_paths(g, e->dst, next, remaining - 1, bags, order + 1);
  }
}
}  // namespace

std::vector<NGramBag> ngrams(const UlfGraph& g, int k) {
  if (k < 1) throw std::invalid_argument("ngram order must be at least 1");
  std::vector<NGramBag> bags(static_cast<std::size_t>(k));
  for (int v = 0; v < static_cast<int>(g.size()); ++v)
    extend_paths(g, v, g.vertices[static_cast<std::size_t>(v)].symbol.render(), k - 1, bags, 1);
  return bags;
}

void BleuCounts::add(const BleuCounts& o) {
  if (clipped.size() < o.clipped.size()) {
    clipped.resize(o.clipped.size(), 0);
    total.resize(o.total.size(), 0);
    reference.resize(o.reference.size(), 0);
  }
  for (std::size_t i = 0; i < o.clipped.size(); ++i) {
    clipped[i] += o.clipped[i];
    total[i] += o.total[i];
    reference[i] += o.reference[i];
  }
  cand_len += o.cand_len;
  ref_len += o.ref_len;
}

double BleuCounts::score() const {
  if (cand_len == 0) return 0.0;
  double logsum = 0;
  int used = 0;
  for (std::size_t n = 0; n < clipped.size(); ++n) {
    if (total[n] == 0 && reference[n] == 0) continue;
    if (total[n] == 0 || clipped[n] == 0) return 0.0;
    logsum += std::log(static_cast<double>(clipped[n]) / static_cast<double>(total[n]));
    ++used;
  }
  if (used == 0) return 0.0;
  double bp = cand_len < ref_len ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len)) : 1.0;
  return bp * std::exp(logsum / used);
}

BleuCounts sembleu_counts(const UlfGraph& candidate, const UlfGraph& gold, int k) {
  auto c = ngrams(candidate, k), r = ngrams(gold, k);
  BleuCounts out;
  out.clipped.assign(static_cast<std::size_t>(k), 0);
  out.total.assign(static_cast<std::size_t>(k), 0);
  out.reference.assign(static_cast<std::size_t>(k), 0);
  for (int n = 0; n < k; ++n) {
    for (const auto& [gram, cnt] : c[static_cast<std::size_t>(n)]) {
      out.total[static_cast<std::size_t>(n)] += cnt;
      auto it = r[static_cast<std::size_t>(n)].find(gram);
      if (it != r[static_cast<std::size_t>(n)].end()) out.clipped[static_cast<std::size_t>(n)] += std::min(cnt, it->second);
    }
    for (const auto& [gram, cnt] : r[static_cast<std::size_t>(n)]) out.reference[static_cast<std::size_t>(n)] += cnt;
  }
  out.cand_len = static_cast<long>(candidate.size());
  out.ref_len = static_cast<long>(gold.size());
  return out;
}

double sembleu(const UlfGraph& candidate, const UlfGraph& gold, int k) { return sembleu_counts(candidate, gold, k).score(); }

// ---------------------------------------------------------------- corpus

UlfGraph largest_fragment(const UlfGraph& g) {
  auto comps = g.components();
  if (comps.empty()) return {};
  std::size_t best = 0;
  for (std::size_t i = 1; i < comps.size(); ++i)
    if (comps[i].size() > comps[best].size()) best = i;
  return comps[best];
}

EvalReport corpus_eval(const std::vector<std::string>& ids, const std::vector<UlfGraph>& candidates,
                       const std::vector<UlfGraph>& golds, const EvalConfig& config, int threads) {
  if (candidates.size() != golds.size() || ids.size() != golds.size())
    throw std::invalid_argument("corpus_eval: candidate and gold lists differ in length");
  EvalReport rep;
  rep.config = config;
  rep.rows.resize(golds.size());
  std::vector<BleuCounts> bleu(golds.size());
  auto work = [&](std::size_t i) {
    UlfGraph cand = config.largest_fragment ? largest_fragment(candidates[i]) : candidates[i];
    EvalRow& row = rep.rows[i];
    row.id = ids[i];
    row.fragments = static_cast<int>(candidates[i].roots().size());
    if (config.sembleu) {
      bleu[i] = sembleu_counts(cand, golds[i], config.k);
      row.sembleu = bleu[i].score();
    }
    if (config.smatch) {
      std::uint64_t s = config.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1));
      row.smatch = el_smatch_counts(cand, golds[i], config.restarts, s);
    }
  };
  int nt = std::max(1, threads);
  if (nt == 1 || golds.size() < 2) {
    for (std::size_t i = 0; i < golds.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = static_cast<std::size_t>(t); i < golds.size(); i += static_cast<std::size_t>(nt)) work(i);
      });
    for (auto& th : pool) th.join();
  }
  BleuCounts pooled;
  double frag = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    pooled.add(bleu[i]);
    rep.smatch.matched += rep.rows[i].smatch.matched;
    rep.smatch.candidate += rep.rows[i].smatch.candidate;
    rep.smatch.gold += rep.rows[i].smatch.gold;
    frag += rep.rows[i].fragments;
  }
  rep.sembleu = pooled.score();
  rep.mean_fragments = golds.empty() ? 0.0 : frag / static_cast<double>(golds.size());
  return rep;
}

namespace {
std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}
}  // namespace

std::string EvalReport::to_tsv() const {
  auto cells = [&](double bleu, const SmatchCounts& sm, const std::string& frags) {
    std::string o;
    if (config.sembleu) o += "\t" + fmt(bleu);
    if (config.smatch) o += "\t" + fmt(sm.precision()) + "\t" + fmt(sm.recall()) + "\t" + fmt(sm.f1());
    return o + "\t" + frags + "\n";
  };
  std::string out = "id";
  if (config.sembleu) out += "\tsembleu";
  if (config.smatch) out += "\tprecision\trecall\tf1";
  out += "\tfragments\n";
  for (const auto& r : rows) out += r.id + cells(r.sembleu, r.smatch, std::to_string(r.fragments));
  out += "#corpus" + cells(sembleu, smatch, fmt(mean_fragments));
  out += "#config\tk=" + std::to_string(config.k) + "\trestarts=" + std::to_string(config.restarts) +
         "\tseed=" + std::to_string(config.seed) + "\tlargest_fragment=" + (config.largest_fragment ? "1" : "0") + "\n";
  return out;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["config"] = {{"k", config.k},
                 {"restarts", config.restarts},
                 {"seed", config.seed},
                 {"largest_fragment", config.largest_fragment},
                 {"sembleu", config.sembleu},
                 {"smatch", config.smatch}};
  auto scores = [&](nlohmann::ordered_json& o, double bleu, const SmatchCounts& sm) {
    if (config.sembleu) o["sembleu"] = bleu;
    if (config.smatch) {
      o["precision"] = sm.precision();
      o["recall"] = sm.recall();
      o["f1"] = sm.f1();
    }
  };
  nlohmann::ordered_json rs = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["id"] = r.id;
    scores(o, r.sembleu, r.smatch);
    o["fragments"] = r.fragments;
    rs.push_back(std::move(o));
  }
  j["sentences"] = std::move(rs);
  nlohmann::ordered_json c;
  scores(c, sembleu, smatch);
  c["mean_fragments"] = mean_fragments;
  j["corpus"] = std::move(c);
  return j.dump(2) + "\n";
}

}  // namespace ulf
