#pragma once
// Core objects for grammars with per-nonterminal capacity bounds:
// interned symbols, rules with nonterminal-string left sides, capacity
// functions, and sentential forms carrying cached occurrence counts.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace capgram {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct parse_error : error {
  parse_error(int line, const std::string& what)
      : error("line " + std::to_string(line) + ": " + what), line(line) {}
  int line;
};

enum class Tri { yes, no, unknown };

using SymbolId = std::uint32_t;
using Word = std::vector<SymbolId>;  // terminal symbols only

inline constexpr std::uint32_t kUnbounded = std::numeric_limits<std::uint32_t>::max();

enum class SymbolKind : std::uint8_t { nonterminal, terminal };

class SymbolTable {
 public:
  SymbolId add(std::string name, SymbolKind kind) {
    if (name.empty()) throw error("empty symbol name");
    auto [it, fresh] = index_.emplace(name, static_cast<SymbolId>(names_.size()));
    if (!fresh) throw error("duplicate symbol: " + name);
    names_.push_back(std::move(name));
    kinds_.push_back(kind);
    return it->second;
  }
  std::optional<SymbolId> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view name) const { return find(name).has_value(); }
  const std::string& name(SymbolId id) const { return names_.at(id); }
  SymbolKind kind(SymbolId id) const { return kinds_.at(id); }
  bool is_nonterminal(SymbolId id) const { return kinds_.at(id) == SymbolKind::nonterminal; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::vector<SymbolKind> kinds_;
  std::unordered_map<std::string, SymbolId> index_;
};

// Picks a name not yet present in the table, priming the base until free.
inline std::string fresh_name(const SymbolTable& t, std::string base) {
  while (t.contains(base)) base += "'";
  return base;
}

struct Rule {
  std::string label;
  std::vector<SymbolId> lhs;  // nonempty, nonterminals only
  std::vector<SymbolId> rhs;  // empty encodes lambda
};

struct Grammar {
  SymbolTable symbols;
  std::vector<SymbolId> nonterminals;  // declaration order
  std::vector<SymbolId> terminals;     // declaration order
  SymbolId start = 0;
  std::vector<Rule> rules;
  bool cf_flag = false;

  SymbolId add_nonterminal(std::string name) {
    SymbolId id = symbols.add(std::move(name), SymbolKind::nonterminal);
    nonterminals.push_back(id);
    return id;
  }
  SymbolId add_terminal(std::string name) {
    SymbolId id = symbols.add(std::move(name), SymbolKind::terminal);
    terminals.push_back(id);
    return id;
  }
  void add_rule(std::string label, std::vector<SymbolId> lhs, std::vector<SymbolId> rhs) {
    rules.push_back(Rule{std::move(label), std::move(lhs), std::move(rhs)});
  }
  bool is_nonterminal(SymbolId id) const { return symbols.is_nonterminal(id); }
  const std::string& name(SymbolId id) const { return symbols.name(id); }
  const Rule* find_rule(std::string_view label) const {
    for (const Rule& r : rules)
      if (r.label == label) return &r;
    return nullptr;
  }
  std::optional<std::size_t> rule_index(std::string_view label) const {
    for (std::size_t i = 0; i < rules.size(); ++i)
      if (rules[i].label == label) return i;
    return std::nullopt;
  }
  // true when every declared symbol has a one-character name, in which case
  // strings are rendered without separators (paper-style aEFbCD)
  bool compact_names() const {
    for (std::size_t i = 0; i < symbols.size(); ++i)
      if (symbols.name(static_cast<SymbolId>(i)).size() != 1) return false;
    return true;
  }
};

struct CapacityFunction {
  std::vector<std::uint32_t> bound_by_id;  // kUnbounded where not set

  std::uint32_t bound(SymbolId id) const {
    return id < bound_by_id.size() ? bound_by_id[id] : kUnbounded;
  }
  void set(SymbolId id, std::uint32_t b) {
    if (b == 0) throw error("capacity bound must be at least 1");
    if (id >= bound_by_id.size()) bound_by_id.resize(id + 1, kUnbounded);
    bound_by_id[id] = b;
  }
  static CapacityFunction uniform(const Grammar& g, std::uint32_t k) {
    CapacityFunction c;
    for (SymbolId a : g.nonterminals) c.set(a, k);
    return c;
  }
  static CapacityFunction all_unbounded(const Grammar&) { return CapacityFunction{}; }

  bool all_finite(const Grammar& g) const {
    for (SymbolId a : g.nonterminals)
      if (bound(a) == kUnbounded) return false;
    return true;
  }
  bool all_one(const Grammar& g) const {
    for (SymbolId a : g.nonterminals)
      if (bound(a) != 1) return false;
    return true;
  }
  std::uint64_t finite_total(const Grammar& g) const {
    std::uint64_t s = 0;
    for (SymbolId a : g.nonterminals)
      if (bound(a) != kUnbounded) s += bound(a);
    return s;
  }
  std::size_t unbounded_count(const Grammar& g) const {
    std::size_t n = 0;
    for (SymbolId a : g.nonterminals)
      if (bound(a) == kUnbounded) ++n;
    return n;
  }
};

// A string over V union Sigma with cached per-nonterminal occurrence counts.
class SententialForm {
 public:
  SententialForm() = default;
  SententialForm(const Grammar& g, std::vector<SymbolId> syms) : syms_(std::move(syms)) {
    for (SymbolId s : syms_) {
      if (g.is_nonterminal(s))
        bump(s, 1);
      else
        ++t_total_;
    }
  }

  const std::vector<SymbolId>& symbols() const { return syms_; }
  std::size_t size() const { return syms_.size(); }
  bool all_terminal() const { return nt_total_ == 0; }
  std::uint32_t terminal_total() const { return t_total_; }
  std::uint32_t nonterminal_total() const { return nt_total_; }

  std::uint32_t count(SymbolId a) const {
    auto it = std::lower_bound(nt_counts_.begin(), nt_counts_.end(), a,
                               [](const auto& e, SymbolId x) { return e.first < x; });
    return (it != nt_counts_.end() && it->first == a) ? it->second : 0;
  }
  const std::vector<std::pair<SymbolId, std::uint32_t>>& nonterminal_counts() const {
    return nt_counts_;
  }

  bool operator==(const SententialForm& o) const { return syms_ == o.syms_; }

  friend SententialForm apply_rule_at(const Grammar& g, const SententialForm& w, const Rule& r,
                                      std::size_t pos);

 private:
  void bump(SymbolId a, std::int64_t d) {
    auto it = std::lower_bound(nt_counts_.begin(), nt_counts_.end(), a,
                               [](const auto& e, SymbolId x) { return e.first < x; });
    if (it != nt_counts_.end() && it->first == a) {
      std::int64_t v = static_cast<std::int64_t>(it->second) + d;
      if (v < 0) throw error("internal: negative occurrence count");
      if (v == 0)
        nt_counts_.erase(it);
      else
        it->second = static_cast<std::uint32_t>(v);
    } else {
      if (d < 0) throw error("internal: negative occurrence count");
      if (d > 0) nt_counts_.insert(it, {a, static_cast<std::uint32_t>(d)});
    }
    nt_total_ = static_cast<std::uint32_t>(static_cast<std::int64_t>(nt_total_) + d);
  }

  std::vector<SymbolId> syms_;
  std::vector<std::pair<SymbolId, std::uint32_t>> nt_counts_;  // sorted by id, >0 entries
  std::uint32_t nt_total_ = 0;
  std::uint32_t t_total_ = 0;
};

// x = x1 u x2  =>  y = x1 v x2, counts maintained incrementally
inline SententialForm apply_rule_at(const Grammar& g, const SententialForm& w, const Rule& r,
                                    std::size_t pos) {
  const auto& syms = w.symbols();
  if (pos + r.lhs.size() > syms.size() ||
      !std::equal(r.lhs.begin(), r.lhs.end(), syms.begin() + static_cast<std::ptrdiff_t>(pos)))
    throw error("rule " + r.label + " does not match at position " + std::to_string(pos));

  SententialForm out;
  out.syms_.reserve(syms.size() - r.lhs.size() + r.rhs.size());
  out.syms_.insert(out.syms_.end(), syms.begin(), syms.begin() + static_cast<std::ptrdiff_t>(pos));
  out.syms_.insert(out.syms_.end(), r.rhs.begin(), r.rhs.end());
  out.syms_.insert(out.syms_.end(), syms.begin() + static_cast<std::ptrdiff_t>(pos + r.lhs.size()),
                   syms.end());
  out.nt_counts_ = w.nt_counts_;
  out.nt_total_ = w.nonterminal_total();
  out.t_total_ = w.terminal_total();
  for (SymbolId a : r.lhs) out.bump(a, -1);  // lhs is all nonterminals
  for (SymbolId s : r.rhs) {
    if (g.is_nonterminal(s))
      out.bump(s, 1);
    else
      ++out.t_total_;
  }
  return out;
}

inline bool capacity_ok(const SententialForm& w, const CapacityFunction& k) {
  for (const auto& [a, c] : w.nonterminal_counts())
    if (c > k.bound(a)) return false;
  return true;
}

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

inline ValidationReport validate_grammar(const Grammar& g) {
  ValidationReport rep;
  auto blame = [&](const std::string& msg) { rep.violations.push_back(msg); };

  std::unordered_set<SymbolId> nts(g.nonterminals.begin(), g.nonterminals.end());
  std::unordered_set<SymbolId> ts(g.terminals.begin(), g.terminals.end());
  if (nts.size() != g.nonterminals.size()) blame("duplicate nonterminal declaration");
  if (ts.size() != g.terminals.size()) blame("duplicate terminal declaration");
  for (SymbolId a : g.nonterminals)
    if (ts.count(a)) blame("symbol " + g.name(a) + " declared as both alphabets");
  for (SymbolId a : g.nonterminals)
    if (!g.symbols.is_nonterminal(a)) blame("symbol " + g.name(a) + " has inconsistent kind");
  for (SymbolId a : g.terminals)
    if (g.symbols.is_nonterminal(a)) blame("symbol " + g.name(a) + " has inconsistent kind");
  if (!nts.count(g.start)) blame("start symbol is not a declared nonterminal");

  std::unordered_set<std::string> labels;
  for (const Rule& r : g.rules) {
    if (!labels.insert(r.label).second) blame("duplicate rule label " + r.label);
    if (r.lhs.empty()) blame("rule " + r.label + ": empty lhs");
    for (SymbolId s : r.lhs) {
      if (!nts.count(s) && !ts.count(s))
        blame("rule " + r.label + ": undeclared symbol in lhs");
      else if (!g.is_nonterminal(s))
        blame("rule " + r.label + ": terminal in lhs");
    }
    for (SymbolId s : r.rhs)
      if (!nts.count(s) && !ts.count(s)) blame("rule " + r.label + ": undeclared symbol in rhs");
    if (g.cf_flag && r.lhs.size() > 1) blame("rule " + r.label + ": lhs length > 1");
  }
  return rep;
}

// Unique decomposition x1 b1 x2 b2 ... xn bn x(n+1) into maximal
// nonterminal blocks bi separated by terminal gaps (inner gaps nonempty).
struct BlockDecomposition {
  struct Segment {
    std::vector<SymbolId> gap;    // terminals before the block (may be empty for the first)
    std::vector<SymbolId> block;  // nonempty nonterminal run
  };
  std::vector<Segment> segments;
  std::vector<SymbolId> tail;  // trailing terminals

  std::vector<SymbolId> concatenated() const {
    std::vector<SymbolId> out;
    for (const Segment& s : segments) {
      out.insert(out.end(), s.gap.begin(), s.gap.end());
      out.insert(out.end(), s.block.begin(), s.block.end());
    }
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
  }
};

inline BlockDecomposition decompose_blocks(const Grammar& g, const SententialForm& w) {
  BlockDecomposition d;
  std::vector<SymbolId> gap;
  std::size_t i = 0;
  const auto& syms = w.symbols();
  while (i < syms.size()) {
    if (!g.is_nonterminal(syms[i])) {
      gap.push_back(syms[i]);
      ++i;
      continue;
    }
    BlockDecomposition::Segment seg;
    seg.gap = std::move(gap);
    gap.clear();
    while (i < syms.size() && g.is_nonterminal(syms[i])) seg.block.push_back(syms[i++]);
    d.segments.push_back(std::move(seg));
  }
  d.tail = std::move(gap);
  return d;
}

// Index of a derivation: maximal number of nonterminals over its forms.
// Consecutive forms must be related by a single derivation step.
inline std::uint32_t derivation_index(const Grammar& g,
                                      const std::vector<SententialForm>& forms) {
  for (std::size_t i = 0; i + 1 < forms.size(); ++i) {
    bool related = false;
    const auto& cur = forms[i].symbols();
    for (const Rule& r : g.rules) {
      if (related) break;
      if (cur.size() + r.rhs.size() < r.lhs.size()) continue;
      if (cur.size() - r.lhs.size() + r.rhs.size() != forms[i + 1].size()) continue;
      for (std::size_t p = 0; p + r.lhs.size() <= cur.size(); ++p) {
        if (!std::equal(r.lhs.begin(), r.lhs.end(), cur.begin() + static_cast<std::ptrdiff_t>(p)))
          continue;
        if (apply_rule_at(g, forms[i], r, p) == forms[i + 1]) {
          related = true;
          break;
        }
      }
    }
    if (!related)
      throw error("forms " + std::to_string(i) + " and " + std::to_string(i + 1) +
                  " are not related by a single derivation step");
  }
  std::uint32_t idx = 0;
  for (const SententialForm& f : forms) idx = std::max(idx, f.nonterminal_total());
  return idx;
}

// "A B C" -> ids; a single unseparated token falls back to per-character
// lookup so that paper-style strings like "aEFbCD" parse; "~" is lambda.
inline std::vector<SymbolId> parse_symbols(const Grammar& g, std::string_view text) {
  std::vector<std::string> toks;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (!cur.empty()) toks.push_back(std::move(cur)), cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) toks.push_back(cur);
  std::vector<SymbolId> out;
  if (toks.empty()) return out;
  if (toks.size() == 1 && toks[0] == "~") return out;
  for (const std::string& t : toks) {
    if (auto id = g.symbols.find(t)) {
      out.push_back(*id);
      continue;
    }
    for (char c : t) {
      auto cid = g.symbols.find(std::string(1, c));
      if (!cid) throw error("unknown symbol: " + t);
      out.push_back(*cid);
    }
  }
  return out;
}

inline std::string symbols_to_string(const Grammar& g, const std::vector<SymbolId>& syms) {
  if (syms.empty()) return "(empty)";
  std::string out;
  bool compact = g.compact_names();
  for (std::size_t i = 0; i < syms.size(); ++i) {
    if (i && !compact) out += ' ';
    out += g.name(syms[i]);
  }
  return out;
}

inline std::string form_to_string(const Grammar& g, const SententialForm& w) {
  return symbols_to_string(g, w.symbols());
}
inline std::string word_to_string(const Grammar& g, const Word& w) {
  return symbols_to_string(g, w);
}

// (length, lexicographic by terminal declaration order)
struct WordLess {
  explicit WordLess(const Grammar& g) {
    rank_.assign(g.symbols.size(), 0);
    for (std::size_t i = 0; i < g.terminals.size(); ++i)
      rank_[g.terminals[i]] = static_cast<std::uint32_t>(i);
  }
  bool operator()(const Word& a, const Word& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    for (std::size_t i = 0; i < a.size(); ++i)
      if (rank_[a[i]] != rank_[b[i]]) return rank_[a[i]] < rank_[b[i]];
    return false;
  }
  std::vector<std::uint32_t> rank_;
};

namespace detail {

struct U32VecHash {
  std::size_t operator()(const std::vector<std::uint32_t>& v) const {
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint32_t x : v) {
      h ^= x;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

// Deduplicating store for search states; keys kept exactly once, ids are
// insertion (= BFS discovery) order.
class KeyInterner {
 public:
  KeyInterner() : set_(16, Hash{&keys_}, Eq{&keys_}) {}

  std::pair<std::uint32_t, bool> intern(std::vector<std::uint32_t>&& key) {
    keys_.push_back(std::move(key));
    std::uint32_t id = static_cast<std::uint32_t>(keys_.size() - 1);
    auto [it, fresh] = set_.insert(id);
    if (!fresh) {
      keys_.pop_back();
      return {*it, false};
    }
    return {id, true};
  }
  const std::vector<std::uint32_t>& key(std::uint32_t id) const { return keys_[id]; }
  std::size_t size() const { return keys_.size(); }

 private:
  struct Hash {
    const std::vector<std::vector<std::uint32_t>>* keys;
    std::size_t operator()(std::uint32_t i) const { return U32VecHash{}((*keys)[i]); }
  };
  struct Eq {
    const std::vector<std::vector<std::uint32_t>>* keys;
    bool operator()(std::uint32_t a, std::uint32_t b) const { return (*keys)[a] == (*keys)[b]; }
  };
  std::vector<std::vector<std::uint32_t>> keys_;
  std::unordered_set<std::uint32_t, Hash, Eq> set_;
};

}  // namespace detail

}  // namespace capgram
