#pragma once
// Exhaustive capacity-respecting derivation search: language-fragment
// enumeration, membership with witness, and simple-pattern filtering.

#include <cassert>
#include <deque>
#include <map>
#include <optional>

#include "capgram/core.hpp"

namespace capgram {

struct SearchBudget {
  std::uint32_t max_terminal_len = 10;
  std::uint32_t max_form_len = 0;  // 0: derived from the capacity function
  std::uint64_t max_states = 2'000'000;
  bool dedupe = true;
};

struct DerivationStep {
  std::string rule_label;
  std::uint32_t position = 0;
};

struct Derivation {
  std::vector<DerivationStep> steps;
  std::vector<SententialForm> forms;  // from S to the final form, when filled
};

inline std::vector<SententialForm> replay(const Grammar& g,
                                          const std::vector<DerivationStep>& steps) {
  std::vector<SententialForm> forms;
  forms.emplace_back(g, std::vector<SymbolId>{g.start});
  for (const DerivationStep& st : steps) {
    const Rule* r = g.find_rule(st.rule_label);
    if (!r) throw error("unknown rule label: " + st.rule_label);
    forms.push_back(apply_rule_at(g, forms.back(), *r, st.position));
  }
  return forms;
}

inline bool derivation_respects_capacity(const Grammar& g, const CapacityFunction& k,
                                         const std::vector<DerivationStep>& steps) {
  for (const SententialForm& f : replay(g, steps))
    if (!capacity_ok(f, k)) return false;
  return true;
}

// Default headroom for how long forms may get: the terminal cutoff plus the
// capacity mass; unbounded nonterminals get a fixed allowance (the
// exhaustiveness flag reports if that ever clips a form).
inline std::uint32_t resolved_max_form_len(const Grammar& g, const CapacityFunction& k,
                                           const SearchBudget& b) {
  if (b.max_form_len != 0) {
    if (b.max_form_len < b.max_terminal_len)
      throw error("max_form_len must be at least max_terminal_len");
    return b.max_form_len;
  }
  std::uint64_t v = static_cast<std::uint64_t>(b.max_terminal_len) + k.finite_total(g) +
                    8ull * k.unbounded_count(g);
  return static_cast<std::uint32_t>(std::min<std::uint64_t>(v, 0xFFFFFFFEull));
}

namespace detail {

struct CompiledRule {
  std::uint32_t index = 0;
  std::vector<std::pair<SymbolId, std::uint32_t>> lhs_nt;   // sorted occurrence counts
  std::vector<std::pair<SymbolId, std::int64_t>> nt_delta;  // rhs minus lhs, nonzero only
  std::uint32_t rhs_terminals = 0;
  std::int64_t nt_total_delta = 0;
  std::uint64_t lhs_mask = 0;  // symbol-presence bits for ids < 64, 0 if inapplicable
};

inline std::vector<std::pair<SymbolId, std::uint32_t>> count_nonterminals(
    const Grammar& g, const std::vector<SymbolId>& syms) {
  std::vector<std::pair<SymbolId, std::uint32_t>> out;
  for (SymbolId s : syms) {
    if (!g.is_nonterminal(s)) continue;
    auto it = std::lower_bound(out.begin(), out.end(), s,
                               [](const auto& e, SymbolId x) { return e.first < x; });
    if (it != out.end() && it->first == s)
      ++it->second;
    else
      out.insert(it, {s, 1});
  }
  return out;
}

struct CompiledRules {
  std::vector<CompiledRule> rules;

  explicit CompiledRules(const Grammar& g) {
    rules.reserve(g.rules.size());
    for (std::size_t i = 0; i < g.rules.size(); ++i) {
      const Rule& r = g.rules[i];
      CompiledRule cr;
      cr.index = static_cast<std::uint32_t>(i);
      cr.lhs_nt = count_nonterminals(g, r.lhs);
      auto rhs_nt = count_nonterminals(g, r.rhs);
      for (SymbolId s : r.rhs)
        if (!g.is_nonterminal(s)) ++cr.rhs_terminals;
      // merge deltas
      std::map<SymbolId, std::int64_t> d;
      for (const auto& [a, c] : cr.lhs_nt) d[a] -= c;
      for (const auto& [a, c] : rhs_nt) d[a] += c;
      for (const auto& [a, v] : d)
        if (v != 0) cr.nt_delta.emplace_back(a, v);
      cr.nt_total_delta =
          static_cast<std::int64_t>(r.rhs.size() - cr.rhs_terminals) -
          static_cast<std::int64_t>(r.lhs.size());
      bool maskable = true;
      for (SymbolId s : r.lhs) {
        if (s >= 64) {
          maskable = false;
          break;
        }
        cr.lhs_mask |= 1ull << s;
      }
      if (!maskable) cr.lhs_mask = 0;
      rules.push_back(std::move(cr));
    }
  }
};

inline std::uint64_t presence_mask(const std::vector<SymbolId>& syms) {
  std::uint64_t m = 0;
  for (SymbolId s : syms)
    if (s < 64) m |= 1ull << s;
  return m;
}

// all lhs occurrence counts available in w
inline bool counts_cover(const SententialForm& w, const CompiledRule& cr) {
  for (const auto& [a, c] : cr.lhs_nt)
    if (w.count(a) < c) return false;
  return true;
}

// capacity of the successor, position-independent
inline bool delta_within_capacity(const SententialForm& w, const CompiledRule& cr,
                                  const CapacityFunction& k) {
  for (const auto& [a, d] : cr.nt_delta) {
    if (d <= 0) continue;
    std::uint32_t bound = k.bound(a);
    if (bound == kUnbounded) continue;
    if (w.count(a) + static_cast<std::uint64_t>(d) > bound) return false;
  }
  return true;
}

}  // namespace detail

struct Successor {
  std::size_t rule_index = 0;
  std::uint32_t position = 0;
  SententialForm form;
};

// One-step successors whose results stay within the capacity function,
// in deterministic order: rule declaration order, then position.
inline std::vector<Successor> successors(const Grammar& g, const CapacityFunction& k,
                                         const SententialForm& w) {
  detail::CompiledRules cr(g);
  std::uint64_t mask = detail::presence_mask(w.symbols());
  std::vector<Successor> out;
  for (const detail::CompiledRule& c : cr.rules) {
    const Rule& r = g.rules[c.index];
    if (c.lhs_mask && (c.lhs_mask & ~mask)) continue;
    if (!detail::counts_cover(w, c)) continue;
    if (!detail::delta_within_capacity(w, c, k)) continue;
    const auto& syms = w.symbols();
    if (r.lhs.size() > syms.size()) continue;
    for (std::size_t p = 0; p + r.lhs.size() <= syms.size(); ++p) {
      if (!std::equal(r.lhs.begin(), r.lhs.end(), syms.begin() + static_cast<std::ptrdiff_t>(p)))
        continue;
      out.push_back(Successor{c.index, static_cast<std::uint32_t>(p), apply_rule_at(g, w, r, p)});
    }
  }
  return out;
}

struct EnumeratedWord {
  Word word;
  std::vector<DerivationStep> steps;
};

struct EnumerationResult {
  std::vector<EnumeratedWord> entries;  // sorted by (length, terminal order)
  bool exhaustive = false;
  std::uint64_t states = 0;

  std::vector<Word> word_list() const {
    std::vector<Word> out;
    out.reserve(entries.size());
    for (const EnumeratedWord& e : entries) out.push_back(e.word);
    return out;
  }
  bool contains(const Word& w) const {
    for (const EnumeratedWord& e : entries)
      if (e.word == w) return true;
    return false;
  }
};

struct MembershipResult {
  Tri verdict = Tri::unknown;
  std::optional<Derivation> witness;
  std::uint64_t states = 0;
};

namespace detail {

// terminal projection of syms must embed into target in order
inline bool terminals_subsequence(const Grammar& g, const std::vector<SymbolId>& syms,
                                  const Word& target) {
  std::size_t j = 0;
  for (SymbolId s : syms) {
    if (g.is_nonterminal(s)) continue;
    while (j < target.size() && target[j] != s) ++j;
    if (j == target.size()) return false;
    ++j;
  }
  return true;
}

struct SearchOutcome {
  KeyInterner seen;
  std::vector<std::uint32_t> parent;
  std::vector<std::uint32_t> via_rule;
  std::vector<std::uint32_t> via_pos;
  std::vector<std::pair<Word, std::uint32_t>> accepted;  // word, node
  bool closed = false;
  bool clipped = false;
  bool overflow = false;
  std::optional<std::uint32_t> target_node;

  std::vector<DerivationStep> steps_to(const Grammar& g, std::uint32_t node) const {
    std::vector<DerivationStep> steps;
    while (parent[node] != node) {
      steps.push_back(DerivationStep{g.rules[via_rule[node]].label, via_pos[node]});
      node = parent[node];
    }
    std::reverse(steps.begin(), steps.end());
    return steps;
  }
};

// Breadth-first closure over capacity-admissible sentential forms. Forms
// whose terminal count exceeds the cutoff are pruned soundly (terminals are
// never rewritten); pruning by total form length is recorded in `clipped`
// since it can lose words when some capacity is unbounded.
inline SearchOutcome derivation_search(const Grammar& g, const CapacityFunction& k,
                                       const SearchBudget& b, const Word* target) {
  CompiledRules cr(g);
  std::uint32_t mtl = target ? static_cast<std::uint32_t>(target->size()) : b.max_terminal_len;
  SearchBudget eff = b;
  eff.max_terminal_len = mtl;
  if (b.max_form_len != 0 && b.max_form_len < mtl) eff.max_form_len = 0;
  std::uint32_t max_form = resolved_max_form_len(g, k, eff);

  SearchOutcome s;
  std::deque<std::uint32_t> queue;
  std::vector<std::vector<std::uint32_t>> undeduped;  // when dedupe is off

  auto push = [&](std::vector<SymbolId>&& key, std::uint32_t par, std::uint32_t rule,
                  std::uint32_t pos, std::uint32_t nt_total) -> bool {
    if (s.overflow) return false;
    std::uint32_t id;
    if (b.dedupe) {
      auto [nid, fresh] = s.seen.intern(std::move(key));
      if (!fresh) return false;
      id = nid;
      if (s.seen.size() > b.max_states) {
        s.overflow = true;
        return false;
      }
    } else {
      undeduped.push_back(std::move(key));
      id = static_cast<std::uint32_t>(undeduped.size() - 1);
      if (undeduped.size() > b.max_states) {
        s.overflow = true;
        return false;
      }
    }
    s.parent.push_back(par == kUnbounded ? id : par);
    s.via_rule.push_back(rule);
    s.via_pos.push_back(pos);
    const std::vector<std::uint32_t>& stored = b.dedupe ? s.seen.key(id) : undeduped[id];
    if (nt_total == 0) {
      if (!target) {
        s.accepted.emplace_back(stored, id);
      } else if (stored == *target) {
        s.target_node = id;
        return true;
      }
    }
    queue.push_back(id);
    return false;
  };

  SententialForm start(g, {g.start});
  if (!capacity_ok(start, k)) {
    s.closed = true;
    return s;
  }
  push(std::vector<SymbolId>{g.start}, kUnbounded, 0, 0, start.nonterminal_total());

  auto key_of = [&](std::uint32_t id) -> const std::vector<std::uint32_t>& {
    return b.dedupe ? s.seen.key(id) : undeduped[id];
  };

  while (!queue.empty() && !s.overflow && !s.target_node) {
    std::uint32_t id = queue.front();
    queue.pop_front();
    SententialForm w(g, key_of(id));
    if (w.all_terminal()) continue;
    std::uint64_t mask = presence_mask(w.symbols());
    for (const CompiledRule& c : cr.rules) {
      if (s.overflow || s.target_node) break;
      const Rule& r = g.rules[c.index];
      if (c.lhs_mask && (c.lhs_mask & ~mask)) continue;
      if (!counts_cover(w, c)) continue;
      if (!delta_within_capacity(w, c, k)) continue;
      std::uint32_t succ_terms = w.terminal_total() + c.rhs_terminals;
      if (succ_terms > mtl) continue;
      std::int64_t succ_len = static_cast<std::int64_t>(w.size()) + c.nt_total_delta +
                              static_cast<std::int64_t>(c.rhs_terminals);
      std::uint32_t succ_nt =
          static_cast<std::uint32_t>(static_cast<std::int64_t>(w.nonterminal_total()) +
                                     c.nt_total_delta);
      if (succ_len > static_cast<std::int64_t>(max_form)) {
        s.clipped = true;
        continue;
      }
      const auto& syms = w.symbols();
      if (r.lhs.size() > syms.size()) continue;
      for (std::size_t p = 0; p + r.lhs.size() <= syms.size(); ++p) {
        if (!std::equal(r.lhs.begin(), r.lhs.end(),
                        syms.begin() + static_cast<std::ptrdiff_t>(p)))
          continue;
        std::vector<SymbolId> succ;
        succ.reserve(static_cast<std::size_t>(succ_len));
        succ.insert(succ.end(), syms.begin(), syms.begin() + static_cast<std::ptrdiff_t>(p));
        succ.insert(succ.end(), r.rhs.begin(), r.rhs.end());
        succ.insert(succ.end(), syms.begin() + static_cast<std::ptrdiff_t>(p + r.lhs.size()),
                    syms.end());
        if (target && !terminals_subsequence(g, succ, *target)) continue;
        if (push(std::move(succ), id, c.index, static_cast<std::uint32_t>(p), succ_nt)) break;
      }
    }
  }
  s.closed = queue.empty() && !s.overflow && !s.clipped && !s.target_node;
  return s;
}

}  // namespace detail

inline EnumerationResult enumerate_language(const Grammar& g, const CapacityFunction& k,
                                            const SearchBudget& b) {
  detail::SearchOutcome s = detail::derivation_search(g, k, b, nullptr);
  EnumerationResult out;
  out.states = b.dedupe ? s.seen.size() : s.parent.size();
  out.exhaustive = s.closed;
  std::map<Word, std::uint32_t, WordLess> first_hit{WordLess(g)};
  for (const auto& [w, node] : s.accepted) first_hit.emplace(w, node);
  for (const auto& [w, node] : first_hit)
    out.entries.push_back(EnumeratedWord{w, s.steps_to(g, node)});
  return out;
}

inline MembershipResult decide_membership(const Word& word, const Grammar& g,
                                          const CapacityFunction& k, const SearchBudget& b) {
  for (SymbolId s : word) {
    if (s >= g.symbols.size()) throw error("word uses undeclared symbols");
    if (g.is_nonterminal(s))
      throw error("word contains nonterminal " + g.name(s));
  }
  detail::SearchOutcome s = detail::derivation_search(g, k, b, &word);
  MembershipResult out;
  out.states = b.dedupe ? s.seen.size() : s.parent.size();
  if (s.target_node) {
    out.verdict = Tri::yes;
    Derivation d;
    d.steps = s.steps_to(g, *s.target_node);
    d.forms = replay(g, d.steps);
    out.witness = std::move(d);
  } else if (s.closed) {
    out.verdict = Tri::no;
  } else {
    out.verdict = Tri::unknown;
  }
  return out;
}

// Concatenations of literal and starred-literal atoms; just enough to
// express filters like a*ccb*a*cb*.
struct SimplePattern {
  struct Atom {
    std::string symbol;
    bool starred = false;
  };
  std::vector<Atom> atoms;

  static SimplePattern parse(std::string_view text) {
    SimplePattern p;
    bool spaced = text.find_first_of(" \t") != std::string_view::npos;
    if (spaced) {
      std::string cur;
      auto flush = [&]() {
        if (cur.empty()) return;
        Atom a;
        if (cur.size() > 1 && cur.back() == '*') {
          a.symbol = cur.substr(0, cur.size() - 1);
          a.starred = true;
        } else if (cur == "*") {
          throw error("pattern atom without a symbol");
        } else {
          a.symbol = cur;
        }
        p.atoms.push_back(std::move(a));
        cur.clear();
      };
      for (char c : text) {
        if (c == ' ' || c == '\t')
          flush();
        else
          cur += c;
      }
      flush();
    } else {
      for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '*') throw error("pattern atom without a symbol");
        Atom a;
        a.symbol = std::string(1, text[i]);
        if (i + 1 < text.size() && text[i + 1] == '*') {
          a.starred = true;
          ++i;
        }
        p.atoms.push_back(std::move(a));
      }
    }
    return p;
  }

  bool matches_names(const std::vector<std::string>& names) const {
    std::vector<char> cur(atoms.size() + 1, 0);
    cur[0] = 1;
    auto closure = [&](std::vector<char>& st) {
      for (std::size_t i = 0; i < atoms.size(); ++i)
        if (st[i] && atoms[i].starred) st[i + 1] = 1;
    };
    closure(cur);
    for (const std::string& name : names) {
      std::vector<char> nxt(atoms.size() + 1, 0);
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (!cur[i] || atoms[i].symbol != name) continue;
        if (atoms[i].starred)
          nxt[i] = 1;
        else
          nxt[i + 1] = 1;
      }
      closure(nxt);
      cur = std::move(nxt);
      bool any = false;
      for (char c : cur) any |= (c != 0);
      if (!any) return false;
    }
    return cur[atoms.size()] != 0;
  }

  bool matches(const Grammar& g, const Word& w) const {
    std::vector<std::string> names;
    names.reserve(w.size());
    for (SymbolId s : w) names.push_back(g.name(s));
    return matches_names(names);
  }
};

inline std::vector<Word> filter_pattern(const Grammar& g, const std::vector<Word>& words,
                                        const SimplePattern& p) {
  std::vector<Word> out;
  for (const Word& w : words)
    if (p.matches(g, w)) out.push_back(w);
  return out;
}

}  // namespace capgram
