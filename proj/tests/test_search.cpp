#include <catch2/catch_amalgamated.hpp>

#include "capgram/textio.hpp"
#include "capgram/transforms.hpp"
#include "support.hpp"

using namespace capgram;
using testsupport::fixture_path;
using testsupport::form;
using testsupport::naive_fragment;
using testsupport::name_set;

namespace {

// independent successor oracle: scan every rule at every position on a raw
// name string and recount occurrences from scratch
std::set<std::string> oracle_successors(const Grammar& g, const CapacityFunction& k,
                                        const std::string& w) {
  std::set<std::string> out;
  for (const Rule& r : g.rules) {
    std::string lhs, rhs;
    for (SymbolId s : r.lhs) lhs += g.name(s);
    for (SymbolId s : r.rhs) rhs += g.name(s);
    for (std::size_t p = 0; p + lhs.size() <= w.size(); ++p) {
      if (w.compare(p, lhs.size(), lhs) != 0) continue;
      std::string y = w.substr(0, p) + rhs + w.substr(p + lhs.size());
      bool ok = true;
      for (SymbolId a : g.nonterminals) {
        std::uint32_t c = 0;
        for (char ch : y)
          if (g.name(a) == std::string(1, ch)) ++c;
        if (c > k.bound(a)) ok = false;
      }
      if (ok) out.insert(r.label + "@" + std::to_string(p) + ":" + y);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("successors of ABCD under the all-ones capacity") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex31.gr"));
  const Grammar& g = pf.grammar;

  std::vector<Successor> succ = successors(g, pf.capacity, form(g, "ABCD"));
  // r3 at position 2 would give ABcAD with two A occurrences, so only r2
  // survives the capacity check
  REQUIRE(succ.size() == 1);
  CHECK(g.rules[succ[0].rule_index].label == "r2");
  CHECK(succ[0].position == 0);
  CHECK(form_to_string(g, succ[0].form) == "aEFbCD");

  // cross-check with the name-string oracle
  std::set<std::string> expected = oracle_successors(g, pf.capacity, "ABCD");
  REQUIRE(expected.size() == 1);
  CHECK(*expected.begin() == "r2@0:aEFbCD");
}

TEST_CASE("successors against the oracle along a derivation") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex31.gr"));
  const Grammar& g = pf.grammar;
  for (const char* w : {"aEFbCD", "aEFbcAD", "aECbcAD", "aABbcCD", "abcED"}) {
    std::vector<Successor> succ = successors(g, pf.capacity, form(g, w));
    std::set<std::string> got;
    for (const Successor& s : succ)
      got.insert(g.rules[s.rule_index].label + "@" + std::to_string(s.position) + ":" +
                 form_to_string(g, s.form));
    CHECK(got == oracle_successors(g, pf.capacity, w));
  }
}

TEST_CASE("terminal words have no successors") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex31.gr"));
  CHECK(successors(pf.grammar, pf.capacity, form(pf.grammar, "abc")).empty());
}

TEST_CASE("enumerate_language reproduces the anbncn fragment") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex31.gr"));
  SearchBudget b;
  b.max_terminal_len = 9;
  EnumerationResult r = enumerate_language(pf.grammar, pf.capacity, b);
  REQUIRE(r.exhaustive);
  std::vector<std::string> got;
  for (const auto& e : r.entries) got.push_back(word_to_string(pf.grammar, e.word));
  CHECK(got == std::vector<std::string>{"abc", "aabbcc", "aaabbbccc"});
}

TEST_CASE("enumerate_language handles the lambda-only grammar") {
  Grammar g;
  SymbolId s = g.add_nonterminal("S");
  g.add_terminal("a");
  g.start = s;
  g.add_rule("r1", {s}, {});
  g.cf_flag = true;
  EnumerationResult r = enumerate_language(g, CapacityFunction::uniform(g, 1), SearchBudget{});
  REQUIRE(r.exhaustive);
  REQUIRE(r.entries.size() == 1);
  CHECK(r.entries[0].word.empty());
}

TEST_CASE("enumerate_language on a right-linear grammar with a cutoff") {
  Grammar g;
  SymbolId s = g.add_nonterminal("S");
  SymbolId a = g.add_terminal("a");
  SymbolId bb = g.add_terminal("b");
  g.start = s;
  g.add_rule("r1", {s}, {a, s});
  g.add_rule("r2", {s}, {bb});
  g.cf_flag = true;
  SearchBudget b;
  b.max_terminal_len = 3;
  EnumerationResult r = enumerate_language(g, CapacityFunction::uniform(g, 1), b);
  REQUIRE(r.exhaustive);
  std::vector<std::string> got;
  for (const auto& e : r.entries) got.push_back(word_to_string(g, e.word));
  CHECK(got == std::vector<std::string>{"b", "ab", "aab"});
}

TEST_CASE("every enumerated word has a replayable capacity-respecting witness") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex32.gr"));
  SearchBudget b;
  b.max_terminal_len = 9;
  EnumerationResult r = enumerate_language(pf.grammar, pf.capacity, b);
  REQUIRE(r.exhaustive);
  REQUIRE_FALSE(r.entries.empty());
  for (const auto& e : r.entries) {
    std::vector<SententialForm> forms = replay(pf.grammar, e.steps);
    CHECK(forms.back().symbols() == e.word);
    for (const SententialForm& f : forms) CHECK(capacity_ok(f, pf.capacity));
  }
}

TEST_CASE("closure agrees with the dedup-free recursive oracle") {
  std::mt19937 rng(101);
  testsupport::RandomGrammarOptions opt;
  opt.max_nonterminals = 3;
  opt.max_rules = 5;
  opt.max_lhs_len = 2;
  int checked = 0;
  for (int it = 0; it < 40 && checked < 12; ++it) {
    Grammar g = testsupport::random_grammar(rng, opt);
    CapacityFunction k = testsupport::random_capacity(rng, g, 2);
    SearchBudget b;
    b.max_terminal_len = 5;
    EnumerationResult r = enumerate_language(g, k, b);
    if (!r.exhaustive || r.states > 200) continue;
    std::uint32_t max_form = resolved_max_form_len(g, k, b);
    CHECK(name_set(g, r.word_list()) == naive_fragment(g, k, 5, max_form));
    ++checked;
  }
  CHECK(checked >= 12);
}

TEST_CASE("fragments are monotone in the length bound") {
  std::mt19937 rng(103);
  testsupport::RandomGrammarOptions opt;
  opt.max_lhs_len = 2;
  for (int it = 0; it < 10; ++it) {
    Grammar g = testsupport::random_grammar(rng, opt);
    CapacityFunction k = testsupport::random_capacity(rng, g, 2);
    SearchBudget b1, b2;
    b1.max_terminal_len = 4;
    b2.max_terminal_len = 6;
    auto w1 = name_set(g, enumerate_language(g, k, b1).word_list());
    auto w2 = name_set(g, enumerate_language(g, k, b2).word_list());
    for (const auto& w : w1) CHECK(w2.count(w) == 1);
  }
}

TEST_CASE("decide_membership finds the paper witness for abc") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex31.gr"));
  const Grammar& g = pf.grammar;
  MembershipResult m = decide_membership(parse_symbols(g, "abc"), g, pf.capacity, SearchBudget{});
  REQUIRE(m.verdict == Tri::yes);
  REQUIRE(m.witness);
  CHECK(m.witness->steps.size() == 8);  // r1 r2 r3 then the finishing phase
  CHECK(m.witness->forms.back().symbols() == parse_symbols(g, "abc"));
  for (const SententialForm& f : m.witness->forms) CHECK(capacity_ok(f, pf.capacity));
}

TEST_CASE("decide_membership closes negatively") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex31.gr"));
  const Grammar& g = pf.grammar;
  CHECK(decide_membership(parse_symbols(g, "ab"), g, pf.capacity, SearchBudget{}).verdict ==
        Tri::no);
  // lambda is not reachable: the only erasing rules need AF or ED first
  CHECK(decide_membership({}, g, pf.capacity, SearchBudget{}).verdict == Tri::no);
}

TEST_CASE("decide_membership rejects foreign symbols") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex31.gr"));
  const Grammar& g = pf.grammar;
  Word w = {*g.symbols.find("A")};
  CHECK_THROWS_AS(decide_membership(w, g, pf.capacity, SearchBudget{}), error);
}

TEST_CASE("simple patterns") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex32.gr"));
  const Grammar& g = pf.grammar;
  SimplePattern p = SimplePattern::parse("a*ccb*a*cb*");

  SECTION("filters the intersection witnesses") {
    std::vector<Word> words = {parse_symbols(g, "accbacb"), parse_symbols(g, "abc")};
    std::vector<Word> out = filter_pattern(g, words, p);
    REQUIRE(out.size() == 1);
    CHECK(word_to_string(g, out[0]) == "accbacb");
  }
  SECTION("empty input") { CHECK(filter_pattern(g, {}, p).empty()); }
  SECTION("starless pattern is literal equality") {
    SimplePattern lit = SimplePattern::parse("abc");
    std::vector<Word> words = {parse_symbols(g, "abc"), parse_symbols(g, "ab")};
    std::vector<Word> out = filter_pattern(g, words, lit);
    REQUIRE(out.size() == 1);
    CHECK(word_to_string(g, out[0]) == "abc");
  }
  SECTION("spaced multi-character atoms") {
    SimplePattern sp = SimplePattern::parse("a* b");
    CHECK(sp.matches_names({"b"}));
    CHECK(sp.matches_names({"a", "a", "b"}));
    CHECK_FALSE(sp.matches_names({"a"}));
  }
  SECTION("a bare star is rejected") {
    CHECK_THROWS_AS(SimplePattern::parse("*ab"), error);
  }
}

TEST_CASE("dedup can be disabled for small instances") {
  Grammar g;
  SymbolId s = g.add_nonterminal("S");
  SymbolId a = g.add_terminal("a");
  g.start = s;
  g.add_rule("r1", {s}, {a, s});
  g.add_rule("r2", {s}, {a});
  g.cf_flag = true;
  SearchBudget b;
  b.max_terminal_len = 4;
  b.dedupe = false;
  EnumerationResult r = enumerate_language(g, CapacityFunction::uniform(g, 1), b);
  REQUIRE(r.exhaustive);
  CHECK(r.entries.size() == 4);
}

TEST_CASE("fragments under a capacity and under its all-ones normalization coincide") {
  // hierarchy collapse at instance level
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex32.gr"));
  CapacityFunction two = CapacityFunction::uniform(pf.grammar, 2);
  SearchBudget b;
  b.max_terminal_len = 6;
  auto src = enumerate_language(pf.grammar, two, b);
  NormalizeResult n = normalize_capacity_to_one(pf.grammar, two);
  auto tgt = enumerate_language(n.grammar, n.capacity, b);
  REQUIRE(src.exhaustive);
  REQUIRE(tgt.exhaustive);
  CHECK(name_set(pf.grammar, src.word_list()) == name_set(n.grammar, tgt.word_list()));
}
