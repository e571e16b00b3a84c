#pragma once
// Shared test helpers: fixture paths, word/name conversions, an independent
// recursive enumeration oracle, and seeded random instance generators.

#include <cstdlib>
#include <random>
#include <set>
#include <string>

#include "capgram/cfnet.hpp"
#include "capgram/regulated.hpp"
#include "capgram/search.hpp"

namespace testsupport {

using namespace capgram;

inline std::string fixture_path(const std::string& name) {
  if (const char* env = std::getenv("CAPGRAM_FIXTURES")) return std::string(env) + "/" + name;
  return "grammars/" + name;
}

inline std::vector<std::string> word_names(const Grammar& g, const Word& w) {
  std::vector<std::string> out;
  out.reserve(w.size());
  for (SymbolId s : w) out.push_back(g.name(s));
  return out;
}

// fragments from different grammars compared by terminal names
inline std::set<std::vector<std::string>> name_set(const Grammar& g,
                                                   const std::vector<Word>& ws) {
  std::set<std::vector<std::string>> out;
  for (const Word& w : ws) out.insert(word_names(g, w));
  return out;
}

inline SententialForm form(const Grammar& g, const std::string& text) {
  return SententialForm(g, parse_symbols(g, text));
}

// Depth-first enumeration without a visited set, independent of the engine:
// prunes only by terminal length, form length, and forms already open on the
// current path (cutting a cycle never loses a word).
inline std::set<std::vector<std::string>> naive_fragment(const Grammar& g,
                                                         const CapacityFunction& k,
                                                         std::uint32_t max_len,
                                                         std::uint32_t max_form_len) {
  std::set<std::vector<std::string>> words;
  std::set<std::vector<SymbolId>> on_path;
  auto rec = [&](auto&& self, const SententialForm& w) -> void {
    if (!capacity_ok(w, k)) return;
    if (w.terminal_total() > max_len || w.size() > max_form_len) return;
    if (!on_path.insert(w.symbols()).second) return;
    if (w.all_terminal()) words.insert(word_names(g, w.symbols()));
    for (const Rule& r : g.rules) {
      const auto& syms = w.symbols();
      for (std::size_t p = 0; p + r.lhs.size() <= syms.size(); ++p) {
        if (!std::equal(r.lhs.begin(), r.lhs.end(),
                        syms.begin() + static_cast<std::ptrdiff_t>(p)))
          continue;
        self(self, apply_rule_at(g, w, r, p));
      }
    }
    on_path.erase(w.symbols());
  };
  rec(rec, SententialForm(g, {g.start}));
  return words;
}

struct RandomGrammarOptions {
  int max_nonterminals = 4;
  int max_rules = 8;
  int max_rhs_len = 3;
  int max_lhs_len = 1;  // > 1 gives phrase-structure rules
  int terminal_count = 2;
};

inline Grammar random_grammar(std::mt19937& rng, const RandomGrammarOptions& opt) {
  Grammar g;
  std::uniform_int_distribution<int> nt_count(1, opt.max_nonterminals);
  int nts = nt_count(rng);
  for (int i = 0; i < nts; ++i) g.add_nonterminal("N" + std::to_string(i));
  for (int i = 0; i < opt.terminal_count; ++i) g.add_terminal(std::string(1, char('a' + i)));
  g.start = g.nonterminals[0];

  std::uniform_int_distribution<int> rule_count(1, opt.max_rules);
  std::uniform_int_distribution<int> lhs_len(1, opt.max_lhs_len);
  std::uniform_int_distribution<int> rhs_len(0, opt.max_rhs_len);
  std::uniform_int_distribution<int> coin(0, 1);
  int rules = rule_count(rng);
  for (int i = 0; i < rules; ++i) {
    std::vector<SymbolId> lhs, rhs;
    int ll = lhs_len(rng);
    for (int j = 0; j < ll; ++j)
      lhs.push_back(g.nonterminals[std::uniform_int_distribution<std::size_t>(
          0, g.nonterminals.size() - 1)(rng)]);
    int rl = rhs_len(rng);
    // bias the last rules toward terminal right sides so fragments are
    // usually nonempty
    bool terminal_only = i >= rules / 2 && coin(rng);
    for (int j = 0; j < rl; ++j) {
      bool terminal = terminal_only || coin(rng);
      if (terminal)
        rhs.push_back(g.terminals[std::uniform_int_distribution<std::size_t>(
            0, g.terminals.size() - 1)(rng)]);
      else
        rhs.push_back(g.nonterminals[std::uniform_int_distribution<std::size_t>(
            0, g.nonterminals.size() - 1)(rng)]);
    }
    g.add_rule("r" + std::to_string(i + 1), std::move(lhs), std::move(rhs));
  }
  g.cf_flag = true;
  for (const Rule& r : g.rules)
    if (r.lhs.size() > 1) g.cf_flag = false;
  return g;
}

inline CapacityFunction random_capacity(std::mt19937& rng, const Grammar& g,
                                        std::uint32_t max_bound) {
  CapacityFunction k;
  std::uniform_int_distribution<std::uint32_t> b(1, max_bound);
  for (SymbolId a : g.nonterminals) k.set(a, b(rng));
  return k;
}

inline std::vector<std::vector<std::uint32_t>> random_partition(std::mt19937& rng,
                                                                std::size_t n) {
  std::vector<std::uint32_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::uint32_t>(i);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::size_t classes = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(3, n))(rng);
  std::vector<std::vector<std::uint32_t>> out(classes);
  for (std::size_t i = 0; i < n; ++i) out[i % classes].push_back(ids[i]);
  return out;
}

// capacity-one vector grammars for the finite-index construction
inline RegulatedGrammar random_vector_grammar(std::mt19937& rng) {
  RandomGrammarOptions opt;
  opt.max_nonterminals = 3;
  opt.max_rules = 5;
  opt.max_rhs_len = 2;
  Grammar g = random_grammar(rng, opt);
  RegulatedGrammar rg;
  rg.base = std::move(g);
  rg.mode = RegulationMode::vector;
  rg.restriction = Restriction::with_capacity(CapacityFunction::uniform(rg.base, 1));
  std::size_t n = rg.base.rules.size();
  std::size_t matrices = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(3, n))(rng);
  std::vector<std::uint32_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::uint32_t>(i);
  std::shuffle(ids.begin(), ids.end(), rng);
  rg.matrices.resize(matrices);
  for (std::size_t i = 0; i < matrices; ++i) rg.matrices[i].label = "m" + std::to_string(i + 1);
  for (std::size_t i = 0; i < n; ++i) rg.matrices[i % matrices].rule_indices.push_back(ids[i]);
  return rg;
}

struct RandomNet {
  PetriNet net;
  Marking marking;
  CapacityAssignment caps;
};

inline RandomNet random_net(std::mt19937& rng) {
  RandomNet rn;
  std::uniform_int_distribution<int> count(1, 5);
  int np = count(rng), nt = count(rng);
  for (int i = 0; i < np; ++i) rn.net.add_place("p" + std::to_string(i));
  for (int i = 0; i < nt; ++i) rn.net.add_transition("t" + std::to_string(i));
  std::uniform_int_distribution<int> coin(0, 3);
  std::uniform_int_distribution<std::uint32_t> weight(1, 3);
  for (int t = 0; t < nt; ++t)
    for (int p = 0; p < np; ++p) {
      if (coin(rng) == 0) rn.net.add_arc_pt(static_cast<PlaceId>(p), static_cast<TransitionId>(t), weight(rng));
      if (coin(rng) == 0) rn.net.add_arc_tp(static_cast<TransitionId>(t), static_cast<PlaceId>(p), weight(rng));
    }
  rn.marking = Marking::zero(rn.net);
  std::uniform_int_distribution<std::uint32_t> tokens(0, 3);
  for (int p = 0; p < np; ++p) rn.marking[static_cast<PlaceId>(p)] = tokens(rng);
  rn.caps = CapacityAssignment::all_unbounded(rn.net);
  std::uniform_int_distribution<std::uint32_t> capv(1, 4);
  for (int p = 0; p < np; ++p)
    if (coin(rng) != 0) rn.caps.set(static_cast<PlaceId>(p), capv(rng));
  return rn;
}

}  // namespace testsupport
