#pragma once
// Matrix, vector and semi-matrix grammars over context-free rule sequences,
// with capacity-bounded and index-bounded derivation modes.

#include <deque>
#include <map>
#include <optional>

#include "capgram/search.hpp"

namespace capgram {

struct Matrix {
  std::string label;
  std::vector<std::uint32_t> rule_indices;  // into base.rules, nonempty
};

enum class RegulationMode { matrix, vector, semi_matrix };

inline std::string to_string(RegulationMode m) {
  switch (m) {
    case RegulationMode::matrix: return "matrix";
    case RegulationMode::vector: return "vector";
    case RegulationMode::semi_matrix: return "semi-matrix";
  }
  return "?";
}

struct Restriction {
  enum class Kind { none, capacity, index };
  Kind kind = Kind::none;
  CapacityFunction capacity;       // when kind == capacity
  std::uint32_t index_bound = 0;   // when kind == index

  static Restriction none() { return Restriction{}; }
  static Restriction with_capacity(CapacityFunction k) {
    Restriction r;
    r.kind = Kind::capacity;
    r.capacity = std::move(k);
    return r;
  }
  static Restriction with_index(std::uint32_t k) {
    Restriction r;
    r.kind = Kind::index;
    r.index_bound = k;
    return r;
  }
};

struct RegulatedGrammar {
  Grammar base;  // context-free
  std::vector<Matrix> matrices;
  RegulationMode mode = RegulationMode::matrix;
  Restriction restriction;
};

inline ValidationReport validate_regulated(const RegulatedGrammar& rg) {
  Grammar checked = rg.base;
  checked.cf_flag = true;  // matrices are sequences of context-free rules
  ValidationReport rep = validate_grammar(checked);
  std::unordered_set<std::string> labels;
  for (const Matrix& m : rg.matrices) {
    if (!labels.insert(m.label).second)
      rep.violations.push_back("duplicate matrix label " + m.label);
    if (m.rule_indices.empty()) rep.violations.push_back("matrix " + m.label + ": no rules");
    for (std::uint32_t ri : m.rule_indices)
      if (ri >= rg.base.rules.size())
        rep.violations.push_back("matrix " + m.label + ": rule index out of range");
  }
  return rep;
}

// one matrix per rule; matrix-mode enumeration of this is plain CF enumeration
inline RegulatedGrammar singleton_matrix_wrap(const Grammar& g,
                                              Restriction restriction = Restriction::none()) {
  RegulatedGrammar rg;
  rg.base = g;
  rg.mode = RegulationMode::matrix;
  rg.restriction = std::move(restriction);
  for (std::uint32_t i = 0; i < rg.base.rules.size(); ++i)
    rg.matrices.push_back(Matrix{"m." + rg.base.rules[i].label, {i}});
  return rg;
}

struct RegulatedOptions {
  std::uint32_t max_open = 8;      // vector mode: simultaneously open matrices
  std::uint32_t semi_streams = 1;  // semi-matrix mode: concurrent passes per matrix
};

// Pending control: open streams as (matrix index, next rule position >= 1),
// kept sorted. A completed derivation has no open streams.
struct ControlState {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> open;
  bool completed() const { return open.empty(); }
};

struct RegulatedStep {
  std::string matrix_label;
  std::string rule_label;
  std::uint32_t position = 0;
};

struct RegulatedSuccessor {
  std::uint32_t matrix_index = 0;
  std::uint32_t rule_pos = 0;  // position of the fired rule within the matrix
  std::uint32_t position = 0;  // position in the sentential form
  SententialForm form;
  ControlState control;
};

struct RegulatedSuccessors {
  std::vector<RegulatedSuccessor> items;
  // vector mode only: an applicable open was blocked by the max_open budget;
  // matrix-mode exclusivity and the semi-matrix stream discipline are part
  // of the control semantics, not a search cutoff
  bool open_denied = false;
};

namespace detail {

inline bool regulated_form_admissible(const RegulatedGrammar& rg, const SententialForm& f,
                                      std::optional<std::uint32_t> extra_index) {
  switch (rg.restriction.kind) {
    case Restriction::Kind::none: break;
    case Restriction::Kind::capacity:
      if (!capacity_ok(f, rg.restriction.capacity)) return false;
      break;
    case Restriction::Kind::index:
      if (f.nonterminal_total() > rg.restriction.index_bound) return false;
      break;
  }
  if (extra_index && f.nonterminal_total() > *extra_index) return false;
  return true;
}

inline void insert_sorted(std::vector<std::pair<std::uint32_t, std::uint32_t>>& open,
                          std::pair<std::uint32_t, std::uint32_t> e) {
  open.insert(std::upper_bound(open.begin(), open.end(), e), e);
}

}  // namespace detail

// Successors respecting both the sentential-form restriction and the control
// mode. Order: advances of open streams (stream order, then position), then
// fresh opens (matrix order, then position).
inline RegulatedSuccessors regulated_successors(
    const RegulatedGrammar& rg, const SententialForm& w, const ControlState& cs,
    const RegulatedOptions& opt, std::optional<std::uint32_t> extra_index = std::nullopt) {
  RegulatedSuccessors out;
  const Grammar& g = rg.base;

  auto apply_everywhere = [&](std::uint32_t mi, std::uint32_t rule_pos, ControlState next,
                              bool advance_ok) {
    const Rule& r = g.rules[rg.matrices[mi].rule_indices[rule_pos]];
    const auto& syms = w.symbols();
    bool matched = false;
    for (std::size_t p = 0; p + r.lhs.size() <= syms.size(); ++p) {
      if (!std::equal(r.lhs.begin(), r.lhs.end(), syms.begin() + static_cast<std::ptrdiff_t>(p)))
        continue;
      SententialForm f = apply_rule_at(g, w, r, p);
      if (!detail::regulated_form_admissible(rg, f, extra_index)) continue;
      matched = true;
      if (!advance_ok) continue;  // probing applicability only
      out.items.push_back(RegulatedSuccessor{mi, rule_pos, static_cast<std::uint32_t>(p),
                                             std::move(f), next});
    }
    return matched;
  };

  // advance open streams
  for (std::size_t si = 0; si < cs.open.size(); ++si) {
    if (si > 0 && cs.open[si] == cs.open[si - 1]) continue;  // interchangeable streams
    auto [mi, pos] = cs.open[si];
    ControlState next;
    next.open = cs.open;
    next.open.erase(next.open.begin() + static_cast<std::ptrdiff_t>(si));
    if (pos + 1 < rg.matrices[mi].rule_indices.size())
      detail::insert_sorted(next.open, {mi, pos + 1});
    apply_everywhere(mi, pos, std::move(next), true);
  }

  // open a fresh matrix
  for (std::uint32_t mi = 0; mi < rg.matrices.size(); ++mi) {
    bool allowed = true;
    switch (rg.mode) {
      // probing below is only needed to report a binding max_open budget
      case RegulationMode::matrix:
        allowed = cs.open.empty();
        break;
      case RegulationMode::vector:
        allowed = cs.open.size() < opt.max_open;
        break;
      case RegulationMode::semi_matrix: {
        std::uint32_t streams = 0;
        for (const auto& [m, p] : cs.open)
          if (m == mi) ++streams;
        allowed = streams < opt.semi_streams;
        break;
      }
    }
    if (!allowed && rg.mode != RegulationMode::vector) continue;
    ControlState next;
    next.open = cs.open;
    if (rg.matrices[mi].rule_indices.size() > 1) detail::insert_sorted(next.open, {mi, 1});
    bool applicable = apply_everywhere(mi, 0, std::move(next), allowed);
    if (!allowed && applicable && rg.mode == RegulationMode::vector) out.open_denied = true;
  }
  return out;
}

struct RegulatedWord {
  Word word;
  std::vector<RegulatedStep> steps;
};

struct RegulatedEnumerationResult {
  std::vector<RegulatedWord> entries;
  bool exhaustive = false;
  std::uint64_t states = 0;

  std::vector<Word> word_list() const {
    std::vector<Word> out;
    out.reserve(entries.size());
    for (const RegulatedWord& e : entries) out.push_back(e.word);
    return out;
  }
};

namespace detail {

inline std::uint32_t regulated_max_form_len(const RegulatedGrammar& rg, const SearchBudget& b) {
  if (b.max_form_len != 0) {
    if (b.max_form_len < b.max_terminal_len)
      throw error("max_form_len must be at least max_terminal_len");
    return b.max_form_len;
  }
  std::uint64_t slack = 0;
  switch (rg.restriction.kind) {
    case Restriction::Kind::capacity:
      slack = rg.restriction.capacity.finite_total(rg.base) +
              8ull * rg.restriction.capacity.unbounded_count(rg.base);
      break;
    case Restriction::Kind::index:
      slack = rg.restriction.index_bound;
      break;
    case Restriction::Kind::none:
      slack = 8ull * (rg.base.nonterminals.size() + 1);
      break;
  }
  std::uint64_t v = static_cast<std::uint64_t>(b.max_terminal_len) + slack;
  return static_cast<std::uint32_t>(std::min<std::uint64_t>(v, 0xFFFFFFFEull));
}

}  // namespace detail

inline RegulatedEnumerationResult enumerate_regulated(
    const RegulatedGrammar& rg, const SearchBudget& b, const RegulatedOptions& opt = {},
    std::optional<std::uint32_t> extra_index = std::nullopt) {
  const Grammar& g = rg.base;
  const std::uint32_t max_form = detail::regulated_max_form_len(rg, b);
  constexpr std::uint32_t kSep = kUnbounded;

  RegulatedEnumerationResult out;
  detail::KeyInterner seen;
  std::vector<std::uint32_t> parent;
  std::vector<RegulatedStep> via;
  std::deque<std::uint32_t> queue;
  std::map<Word, std::uint32_t, WordLess> accepted{WordLess(g)};
  bool clipped = false, overflow = false, denied = false;

  auto encode = [&](const std::vector<SymbolId>& syms, const ControlState& cs) {
    std::vector<std::uint32_t> key = syms;
    key.push_back(kSep);
    for (const auto& [m, p] : cs.open) {
      key.push_back(m);
      key.push_back(p);
    }
    return key;
  };
  auto decode = [&](const std::vector<std::uint32_t>& key, std::vector<SymbolId>& syms,
                    ControlState& cs) {
    std::size_t i = 0;
    while (key[i] != kSep) syms.push_back(key[i++]);
    ++i;
    while (i < key.size()) {
      cs.open.emplace_back(key[i], key[i + 1]);
      i += 2;
    }
  };

  SententialForm start(g, {g.start});
  if (!detail::regulated_form_admissible(rg, start, extra_index)) {
    out.exhaustive = true;
    return out;
  }
  {
    auto [id, fresh] = seen.intern(encode(start.symbols(), ControlState{}));
    (void)fresh;
    parent.push_back(id);
    via.push_back({});
    queue.push_back(id);
  }

  while (!queue.empty() && !overflow) {
    std::uint32_t id = queue.front();
    queue.pop_front();
    std::vector<SymbolId> syms;
    ControlState cs;
    decode(seen.key(id), syms, cs);
    SententialForm w(g, std::move(syms));
    RegulatedSuccessors succ = regulated_successors(rg, w, cs, opt, extra_index);
    if (succ.open_denied) denied = true;
    for (RegulatedSuccessor& sc : succ.items) {
      if (sc.form.terminal_total() > b.max_terminal_len) continue;
      if (sc.form.size() > max_form) {
        clipped = true;
        continue;
      }
      auto [nid, fresh] = seen.intern(encode(sc.form.symbols(), sc.control));
      if (!fresh) continue;
      if (seen.size() > b.max_states) {
        overflow = true;
        break;
      }
      const Matrix& m = rg.matrices[sc.matrix_index];
      parent.push_back(id);
      via.push_back(RegulatedStep{m.label, g.rules[m.rule_indices[sc.rule_pos]].label,
                                  sc.position});
      if (sc.form.all_terminal() && sc.control.completed())
        accepted.emplace(sc.form.symbols(), nid);
      queue.push_back(nid);
    }
  }

  out.states = seen.size();
  out.exhaustive = queue.empty() && !overflow && !clipped && !denied;
  for (const auto& [w, node] : accepted) {
    std::vector<RegulatedStep> steps;
    std::uint32_t n = node;
    while (parent[n] != n) {
      steps.push_back(via[n]);
      n = parent[n];
    }
    std::reverse(steps.begin(), steps.end());
    out.entries.push_back(RegulatedWord{w, std::move(steps)});
  }
  return out;
}

struct IndexCheckResult {
  bool ok = false;
  bool conclusive = false;
  std::optional<Word> counterexample;
  std::vector<RegulatedStep> counterexample_steps;
};

// True when every enumerated word also has a derivation whose sentential
// forms never carry more than k nonterminals.
inline IndexCheckResult check_index_bound(const RegulatedGrammar& rg, std::uint32_t k,
                                          const SearchBudget& b,
                                          const RegulatedOptions& opt = {}) {
  RegulatedEnumerationResult full = enumerate_regulated(rg, b, opt);
  RegulatedEnumerationResult bounded = enumerate_regulated(rg, b, opt, k);
  IndexCheckResult out;
  out.conclusive = full.exhaustive && bounded.exhaustive;
  std::vector<Word> bw = bounded.word_list();
  out.ok = true;
  for (const RegulatedWord& e : full.entries) {
    if (std::find(bw.begin(), bw.end(), e.word) == bw.end()) {
      out.ok = false;
      out.counterexample = e.word;
      out.counterexample_steps = e.steps;
      break;
    }
  }
  return out;
}

// Replays regulated steps, checking the control discipline: every step must
// continue some open stream or open a fresh one, and the rule fired must be
// the stream's next matrix entry. Returns the forms along the run.
inline std::vector<SententialForm> replay_regulated(const RegulatedGrammar& rg,
                                                    const std::vector<RegulatedStep>& steps,
                                                    const RegulatedOptions& opt = {}) {
  const Grammar& g = rg.base;
  std::vector<SententialForm> forms;
  forms.emplace_back(g, std::vector<SymbolId>{g.start});
  ControlState cs;
  for (const RegulatedStep& st : steps) {
    std::optional<std::uint32_t> mi;
    for (std::uint32_t i = 0; i < rg.matrices.size(); ++i)
      if (rg.matrices[i].label == st.matrix_label) mi = i;
    if (!mi) throw error("unknown matrix " + st.matrix_label);
    const Matrix& m = rg.matrices[*mi];
    // continue an open stream if its next rule matches, else open
    std::optional<std::size_t> stream;
    for (std::size_t si = 0; si < cs.open.size(); ++si) {
      if (cs.open[si].first != *mi) continue;
      const Rule& next = g.rules[m.rule_indices[cs.open[si].second]];
      if (next.label == st.rule_label) {
        stream = si;
        break;
      }
    }
    std::uint32_t rule_pos;
    if (stream) {
      rule_pos = cs.open[*stream].second;
      cs.open.erase(cs.open.begin() + static_cast<std::ptrdiff_t>(*stream));
    } else {
      if (g.rules[m.rule_indices[0]].label != st.rule_label)
        throw error("step " + st.rule_label + " does not continue matrix " + st.matrix_label);
      switch (rg.mode) {
        case RegulationMode::matrix:
          if (!cs.open.empty()) throw error("matrix mode: open matrix left unfinished");
          break;
        case RegulationMode::vector:
          if (cs.open.size() >= opt.max_open) throw error("too many open matrices");
          break;
        case RegulationMode::semi_matrix: {
          std::uint32_t streams = 0;
          for (const auto& [mm, pp] : cs.open)
            if (mm == *mi) ++streams;
          if (streams >= opt.semi_streams) throw error("too many streams for matrix " + m.label);
          break;
        }
      }
      rule_pos = 0;
    }
    if (rule_pos + 1 < m.rule_indices.size())
      detail::insert_sorted(cs.open, {*mi, rule_pos + 1});
    const Rule& r = g.rules[m.rule_indices[rule_pos]];
    SententialForm f = apply_rule_at(g, forms.back(), r, st.position);
    if (!detail::regulated_form_admissible(rg, f, std::nullopt))
      throw error("replay violates the sentential-form restriction");
    forms.push_back(std::move(f));
  }
  if (!cs.open.empty()) throw error("replay ends with unfinished matrices");
  return forms;
}

}  // namespace capgram
