#include <catch2/catch_amalgamated.hpp>

#include "capgram/textio.hpp"
#include "capgram/transforms.hpp"
#include "support.hpp"

using namespace capgram;
using testsupport::fixture_path;
using testsupport::name_set;

namespace {

Grammar linear_anbn() {  // S -> aSb | ab
  Grammar g;
  SymbolId s = g.add_nonterminal("S");
  SymbolId a = g.add_terminal("a");
  SymbolId b = g.add_terminal("b");
  g.start = s;
  g.add_rule("r1", {s}, {a, s, b});
  g.add_rule("r2", {s}, {a, b});
  g.cf_flag = true;
  return g;
}

Grammar single_c() {  // T -> c
  Grammar g;
  SymbolId t = g.add_nonterminal("T");
  SymbolId c = g.add_terminal("c");
  g.start = t;
  g.add_rule("p1", {t}, {c});
  g.cf_flag = true;
  return g;
}

std::string rule_string(const Grammar& g, const Rule& r) {
  std::string out;
  for (SymbolId s : r.lhs) out += g.name(s);
  out += "->";
  for (SymbolId s : r.rhs) out += g.name(s);
  return out;
}

}  // namespace

TEST_CASE("normalize_capacity_to_one expands every index combination") {
  Grammar g;
  SymbolId A = g.add_nonterminal("A");
  SymbolId a = g.add_terminal("a");
  g.start = A;
  g.add_rule("r", {A}, {a, A});
  g.cf_flag = true;
  CapacityFunction k;
  k.set(A, 2);

  NormalizeResult n = normalize_capacity_to_one(g, k);
  REQUIRE(n.grammar.rules.size() == 4);
  std::vector<std::string> got;
  for (const Rule& r : n.grammar.rules) got.push_back(rule_string(n.grammar, r));
  CHECK(got == std::vector<std::string>{"(A,1)->a(A,1)", "(A,1)->a(A,2)", "(A,2)->a(A,1)",
                                        "(A,2)->a(A,2)"});
  CHECK(n.capacity.all_one(n.grammar));
}

TEST_CASE("normalizing an all-ones capacity just renames") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex31.gr"));
  NormalizeResult n = normalize_capacity_to_one(pf.grammar, pf.capacity);
  CHECK(n.grammar.rules.size() == pf.grammar.rules.size());
  CHECK(n.grammar.nonterminals.size() == pf.grammar.nonterminals.size());
  CHECK(n.grammar.name(n.grammar.start) == "(S,1)");
  for (std::size_t i = 0; i < n.grammar.rules.size(); ++i)
    CHECK(n.grammar.rules[i].label == pf.grammar.rules[i].label);
}

TEST_CASE("normalization preserves the fragment of the anbncn grammar at capacity two") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex31.gr"));
  CapacityFunction two = CapacityFunction::uniform(pf.grammar, 2);
  SearchBudget b;
  b.max_terminal_len = 8;
  EnumerationResult src = enumerate_language(pf.grammar, two, b);
  NormalizeResult n = normalize_capacity_to_one(pf.grammar, two);
  EnumerationResult tgt = enumerate_language(n.grammar, n.capacity, b);
  REQUIRE(src.exhaustive);
  REQUIRE(tgt.exhaustive);
  CHECK(name_set(pf.grammar, src.word_list()) == name_set(n.grammar, tgt.word_list()));
}

TEST_CASE("normalized witnesses lift and replay in the source grammar") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex32.gr"));
  CapacityFunction two = CapacityFunction::uniform(pf.grammar, 2);
  NormalizeResult n = normalize_capacity_to_one(pf.grammar, two);
  SearchBudget b;
  b.max_terminal_len = 7;
  EnumerationResult r = enumerate_language(n.grammar, n.capacity, b);
  REQUIRE_FALSE(r.entries.empty());
  for (const auto& e : r.entries) {
    std::vector<DerivationStep> lifted = n.lift(e.steps);
    std::vector<SententialForm> forms = replay(pf.grammar, lifted);
    CHECK(testsupport::word_names(pf.grammar, forms.back().symbols()) ==
          testsupport::word_names(n.grammar, e.word));
    for (const SententialForm& f : forms) CHECK(capacity_ok(f, two));
  }
}

TEST_CASE("blockwise closure pads rules with repetition-free contexts") {
  Grammar g;
  SymbolId A = g.add_nonterminal("A");
  SymbolId B = g.add_nonterminal("B");
  SymbolId a = g.add_terminal("a");
  g.start = A;
  g.add_rule("r", {A}, {a});
  (void)B;
  g.cf_flag = true;

  BlockwiseResult bw = blockwise_closure(g, CapacityFunction::uniform(g, 1));
  std::set<std::string> got;
  for (const Rule& r : bw.grammar.rules) got.insert(rule_string(bw.grammar, r));
  CHECK(got == std::set<std::string>{"A->a", "AB->aB", "BA->Ba"});
}

TEST_CASE("a rule using every nonterminal admits only the empty context") {
  Grammar g;
  SymbolId A = g.add_nonterminal("A");
  SymbolId B = g.add_nonterminal("B");
  SymbolId a = g.add_terminal("a");
  g.start = A;
  g.add_rule("r", {A, B}, {a});
  BlockwiseResult bw = blockwise_closure(g, CapacityFunction::uniform(g, 1));
  REQUIRE(bw.grammar.rules.size() == 1);
  CHECK(rule_string(bw.grammar, bw.grammar.rules[0]) == "AB->a");
}

TEST_CASE("blockwise closure preserves the anbncn fragment") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex31.gr"));
  BlockwiseResult bw = blockwise_closure(pf.grammar, pf.capacity);
  SearchBudget b;
  b.max_terminal_len = 8;
  EnumerationResult src = enumerate_language(pf.grammar, pf.capacity, b);
  EnumerationResult tgt = enumerate_language(bw.grammar, bw.capacity, b);
  REQUIRE(src.exhaustive);
  REQUIRE(tgt.exhaustive);
  CHECK(name_set(pf.grammar, src.word_list()) == name_set(bw.grammar, tgt.word_list()));

  // lifted witnesses replay under the source capacity
  for (const auto& e : tgt.entries) {
    std::vector<SententialForm> forms = replay(pf.grammar, bw.lift(e.steps));
    CHECK(forms.back().symbols() == e.word);
    for (const SententialForm& f : forms) CHECK(capacity_ok(f, pf.capacity));
  }
}

TEST_CASE("matrix simulation: start matrix and bookkeeping for one rule") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex31.gr"));
  MatrixFinResult mf = to_finite_index_matrix_grammar(pf.grammar, pf.capacity);
  const Grammar& h = mf.grammar.base;

  REQUIRE(mf.grammar.matrices.front().label == "m.start");
  const Rule& start = h.rules[mf.grammar.matrices.front().rule_indices[0]];
  // S' -> [S] S _A1 ... _Am with the start symbol tallied as present
  REQUIRE(start.rhs.size() == 2 + 6);
  CHECK(h.name(start.rhs[0]) == "[S]");
  CHECK(h.name(start.rhs[1]) == "S");
  for (std::size_t i = 2; i < start.rhs.size(); ++i)
    CHECK(h.name(start.rhs[i])[0] == '_');

  // the matrix for r2 applied to the whole block ABCD
  bool found = false;
  for (const Matrix& m : mf.grammar.matrices) {
    if (m.rule_indices.empty()) continue;
    const Rule& first = h.rules[m.rule_indices[0]];
    if (first.lhs.size() == 1 && h.name(first.lhs[0]) == "[ABCD]" &&
        !first.rhs.empty() && h.name(first.rhs[0]) == "a") {
      found = true;
      std::vector<std::string> labels;
      for (std::uint32_t ri : m.rule_indices) labels.push_back(h.rules[ri].label);
      // block rewrite, then tally clears in declaration order, then sets
      REQUIRE(labels.size() == 5);
      CHECK(labels[1] == "clear.A");
      CHECK(labels[2] == "clear.B");
      CHECK(labels[3] == "set.E");
      CHECK(labels[4] == "set.F");
      CHECK(rule_string(h, first) == "[ABCD]->a[EF]b[CD]");
    }
  }
  CHECK(found);
  CHECK(mf.grammar.matrices.back().label == "m.finish");
}

TEST_CASE("matrix simulation preserves a tiny phrase-structure language") {
  // r1: S -> A B, r2: A B -> a b under the all-ones capacity
  Grammar g;
  SymbolId S = g.add_nonterminal("S");
  SymbolId A = g.add_nonterminal("A");
  SymbolId B = g.add_nonterminal("B");
  SymbolId a = g.add_terminal("a");
  SymbolId b = g.add_terminal("b");
  g.start = S;
  g.add_rule("r1", {S}, {A, B});
  g.add_rule("r2", {A, B}, {a, b});
  MatrixFinResult mf = to_finite_index_matrix_grammar(g, CapacityFunction::uniform(g, 1));
  SearchBudget bud;
  bud.max_terminal_len = 4;
  RegulatedEnumerationResult r = enumerate_regulated(mf.grammar, bud);
  REQUIRE(r.exhaustive);
  REQUIRE(r.entries.size() == 1);
  CHECK(testsupport::word_names(mf.grammar.base, r.entries[0].word) ==
        std::vector<std::string>{"a", "b"});
}

TEST_CASE("matrix simulation forms keep the encoded-prefix tally shape") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex31.gr"));
  MatrixFinResult mf = to_finite_index_matrix_grammar(pf.grammar, pf.capacity);
  SearchBudget b;
  b.max_terminal_len = 6;
  RegulatedEnumerationResult r = enumerate_regulated(mf.grammar, b);
  REQUIRE(r.exhaustive);
  REQUIRE_FALSE(r.entries.empty());
  for (const auto& e : r.entries) {
    std::vector<SententialForm> forms = replay_regulated(mf.grammar, e.steps);
    // check at matrix boundaries: start, after each complete matrix
    std::size_t consumed = 0;
    std::size_t at = 0;
    CHECK(matrixfin_shape_ok(mf, forms[0]));
    for (const Matrix& m : mf.grammar.matrices) (void)m;
    while (at < e.steps.size()) {
      // find the matrix this step opens and skip its full length
      const std::string& label = e.steps[at].matrix_label;
      const Matrix* m = nullptr;
      for (const Matrix& mm : mf.grammar.matrices)
        if (mm.label == label) m = &mm;
      REQUIRE(m);
      at += m->rule_indices.size();
      REQUIRE(at <= e.steps.size());
      if (at < e.steps.size())  // the final form is the bare word
        CHECK(matrixfin_shape_ok(mf, forms[at]));
      ++consumed;
    }
  }
}

TEST_CASE("constant capacity pairing") {
  Grammar g = linear_anbn();
  SECTION("a linear grammar keeps its language at capacity one") {
    ConstantCapacityResult r = with_constant_capacity(g, 1);
    SearchBudget b;
    b.max_terminal_len = 6;
    EnumerationResult cb = enumerate_language(r.grammar, r.capacity, b);
    EnumerationResult plain = enumerate_language(g, CapacityFunction::all_unbounded(g), b);
    CHECK(name_set(r.grammar, cb.word_list()) == name_set(g, plain.word_list()));
  }
  SECTION("zero capacity is rejected") {
    CHECK_THROWS_AS(with_constant_capacity(g, 0), error);
  }
  SECTION("a small capacity can shrink the language") {
    Grammar h;
    SymbolId s = h.add_nonterminal("S");
    SymbolId a = h.add_terminal("a");
    h.start = s;
    h.add_rule("r1", {s}, {s, s});
    h.add_rule("r2", {s}, {a});
    h.cf_flag = true;
    ConstantCapacityResult r = with_constant_capacity(h, 1);
    SearchBudget b;
    b.max_terminal_len = 4;
    EnumerationResult cb = enumerate_language(r.grammar, r.capacity, b);
    REQUIRE(cb.exhaustive);
    REQUIRE(cb.entries.size() == 1);
    CHECK(word_to_string(r.grammar, cb.entries[0].word) == "a");
  }
}

TEST_CASE("closure constructions at the fragment level") {
  Grammar g1 = linear_anbn();
  Grammar g2 = single_c();
  CapacityFunction k1 = CapacityFunction::uniform(g1, 1);
  CapacityFunction k2 = CapacityFunction::uniform(g2, 1);
  SearchBudget b;
  b.max_terminal_len = 6;
  auto frag1 = name_set(g1, enumerate_language(g1, k1, b).word_list());
  auto frag2 = name_set(g2, enumerate_language(g2, k2, b).word_list());

  SECTION("star") {
    ClosureResult r = closure_star(g1, k1);
    auto got = name_set(r.grammar, enumerate_language(r.grammar, r.capacity, b).word_list());
    std::set<std::vector<std::string>> expect = {{}};
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& w : expect)
        for (const auto& u : frag1) {
          std::vector<std::string> cat = w;
          cat.insert(cat.end(), u.begin(), u.end());
          if (cat.size() <= 6 && expect.insert(cat).second) grew = true;
        }
    }
    CHECK(got == expect);
  }
  SECTION("union") {
    ClosureResult r = closure_union(g1, k1, g2, k2);
    auto got = name_set(r.grammar, enumerate_language(r.grammar, r.capacity, b).word_list());
    std::set<std::vector<std::string>> expect = frag1;
    expect.insert(frag2.begin(), frag2.end());
    CHECK(got == expect);
  }
  SECTION("concatenation") {
    ClosureResult r = closure_concat(g1, k1, g2, k2);
    auto got = name_set(r.grammar, enumerate_language(r.grammar, r.capacity, b).word_list());
    std::set<std::vector<std::string>> expect;
    for (const auto& w : frag1)
      for (const auto& u : frag2) {
        std::vector<std::string> cat = w;
        cat.insert(cat.end(), u.begin(), u.end());
        if (cat.size() <= 6) expect.insert(cat);
      }
    CHECK(got == expect);
  }
  SECTION("homomorphism") {
    // h(a) = xy, h(b) = y on {a^n b^n}
    ClosureResult r = apply_terminal_homomorphism(g1, k1, {{"a", {"x", "y"}}, {"b", {"y"}}});
    auto got = name_set(r.grammar, enumerate_language(r.grammar, r.capacity, b).word_list());
    std::set<std::vector<std::string>> expect;
    for (const auto& w : frag1) {
      std::vector<std::string> img;
      for (const std::string& ch : w) {
        if (ch == "a") {
          img.push_back("x");
          img.push_back("y");
        } else {
          img.push_back("y");
        }
      }
      if (img.size() <= 6) expect.insert(img);
    }
    // images longer than the cutoff cannot appear
    CHECK(got == expect);
  }
}

TEST_CASE("vector finite-index construction builds the locked chunks") {
  // A1 -> a A2 within a two-nonterminal grammar
  Grammar g;
  SymbolId a1 = g.add_nonterminal("A1");
  SymbolId a2 = g.add_nonterminal("A2");
  SymbolId a = g.add_terminal("a");
  g.start = a1;
  g.add_rule("r", {a1}, {a, a2});
  g.add_rule("q", {a1}, {a, a1});
  g.add_rule("e", {a2}, {a});
  g.cf_flag = true;
  RegulatedGrammar rg;
  rg.base = g;
  rg.mode = RegulationMode::vector;
  rg.restriction = Restriction::with_capacity(CapacityFunction::uniform(g, 1));
  rg.matrices.push_back(Matrix{"m1", {0}});
  rg.matrices.push_back(Matrix{"m2", {1}});
  rg.matrices.push_back(Matrix{"m3", {2}});

  VectorFinResult vf = vector_to_finite_index(rg);
  const Grammar& h = vf.grammar.base;
  auto labels_of = [&](const std::string& matrix_label) {
    std::vector<std::string> out;
    for (const Matrix& m : vf.grammar.matrices)
      if (m.label == matrix_label)
        for (std::uint32_t ri : m.rule_indices) out.push_back(h.rules[ri].label);
    return out;
  };
  // r: A1 -> a A2 vanishes A1 and introduces A2
  CHECK(labels_of("m1") ==
        std::vector<std::string>{"lock", "clear.A1", "set.A2", "r", "unlock"});
  // q: A1 -> a A1 keeps A1: no tally steps
  CHECK(labels_of("m2") == std::vector<std::string>{"lock", "q", "unlock"});
  CHECK(vf.claimed_index_bound == 2 * 2 + 1);
}

TEST_CASE("vector finite-index construction preserves fragments and the index bound") {
  // S -> A B opened once, then (A -> a, B -> b) interleaved
  Grammar g;
  SymbolId s = g.add_nonterminal("S");
  SymbolId A = g.add_nonterminal("A");
  SymbolId B = g.add_nonterminal("B");
  SymbolId a = g.add_terminal("a");
  SymbolId b = g.add_terminal("b");
  g.start = s;
  g.add_rule("r0", {s}, {A, B});
  g.add_rule("ra", {A}, {a});
  g.add_rule("rb", {B}, {b});
  g.cf_flag = true;
  RegulatedGrammar rg;
  rg.base = g;
  rg.mode = RegulationMode::vector;
  rg.restriction = Restriction::with_capacity(CapacityFunction::uniform(g, 1));
  rg.matrices.push_back(Matrix{"m0", {0}});
  rg.matrices.push_back(Matrix{"m1", {1, 2}});

  SearchBudget bud;
  bud.max_terminal_len = 5;
  VectorFinResult vf = vector_to_finite_index(rg);
  RegulatedEnumerationResult src = enumerate_regulated(rg, bud);
  RegulatedEnumerationResult tgt = enumerate_regulated(vf.grammar, bud);
  REQUIRE(src.exhaustive);
  REQUIRE(tgt.exhaustive);
  CHECK(name_set(rg.base, src.word_list()) == name_set(vf.grammar.base, tgt.word_list()));

  IndexCheckResult idx = check_index_bound(vf.grammar, vf.claimed_index_bound, bud);
  CHECK(idx.conclusive);
  CHECK(idx.ok);
}

TEST_CASE("vector finite-index rejects other modes and capacities") {
  Grammar g = linear_anbn();
  RegulatedGrammar rg = singleton_matrix_wrap(g);
  CHECK_THROWS_AS(vector_to_finite_index(rg), error);
  rg.mode = RegulationMode::vector;
  rg.restriction = Restriction::with_capacity(CapacityFunction::uniform(rg.base, 2));
  CHECK_THROWS_AS(vector_to_finite_index(rg), error);
}

TEST_CASE("transformations are deterministic") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex31.gr"));
  NormalizeResult n1 = normalize_capacity_to_one(pf.grammar, pf.capacity);
  NormalizeResult n2 = normalize_capacity_to_one(pf.grammar, pf.capacity);
  CHECK(print_grammar(n1.grammar, &n1.capacity) == print_grammar(n2.grammar, &n2.capacity));

  MatrixFinResult m1 = to_finite_index_matrix_grammar(pf.grammar, pf.capacity);
  MatrixFinResult m2 = to_finite_index_matrix_grammar(pf.grammar, pf.capacity);
  CHECK(print_regulated(m1.grammar) == print_regulated(m2.grammar));
}

TEST_CASE("the symbol budget guards generated alphabets") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex31.gr"));
  TransformLimits tiny;
  tiny.max_symbols = 4;
  CHECK_THROWS_AS(to_finite_index_matrix_grammar(pf.grammar, pf.capacity, tiny), error);
  TransformLimits tiny_rules;
  tiny_rules.max_rules = 10;
  CHECK_THROWS_AS(blockwise_closure(pf.grammar, pf.capacity, tiny_rules), error);
}

TEST_CASE("unbounded capacities cannot be normalized") {
  ParsedGrammarFile pf = parse_grammar_file(fixture_path("ex-sec2.gr"));
  CHECK_THROWS_AS(normalize_capacity_to_one(pf.grammar, pf.capacity), error);
}
