#pragma once
// Context-free Petri nets built from grammars, extended nets with chain and
// cycle control places, and synchronized grammar/net derivation search with
// weak or strong place capacities.

#include <deque>
#include <map>
#include <optional>

#include "capgram/petri.hpp"
#include "capgram/search.hpp"

namespace capgram {

// One place per nonterminal, one transition per rule; arc weights reflect
// how a rule changes nonterminal counts. Initially one token on the start
// symbol's place.
struct CfNet {
  PetriNet net;
  std::vector<SymbolId> place_symbol;        // beta: place -> nonterminal
  std::vector<std::uint32_t> transition_rule;  // gamma: transition -> rule index
  Marking initial;

  std::optional<PlaceId> place_of(SymbolId a) const {
    for (PlaceId p = 0; p < place_symbol.size(); ++p)
      if (place_symbol[p] == a) return p;
    return std::nullopt;
  }
};

inline CfNet build_cf_net(const Grammar& g) {
  if (!g.cf_flag) throw error("cf net construction requires a context-free grammar");
  ValidationReport rep = validate_grammar(g);
  if (!rep.ok()) throw error("invalid grammar: " + rep.violations.front());

  CfNet cn;
  for (SymbolId a : g.nonterminals) {
    cn.net.add_place(g.name(a));
    cn.place_symbol.push_back(a);
  }
  for (std::uint32_t i = 0; i < g.rules.size(); ++i) {
    const Rule& r = g.rules[i];
    TransitionId t = cn.net.add_transition(r.label);
    cn.transition_rule.push_back(i);
    cn.net.add_arc_pt(*cn.place_of(r.lhs[0]), t, 1);
    for (SymbolId a : g.nonterminals) {
      std::uint32_t c = 0;
      for (SymbolId s : r.rhs)
        if (s == a) ++c;
      if (c > 0) cn.net.add_arc_tp(t, *cn.place_of(a), c);
    }
  }
  cn.initial = Marking::zero(cn.net);
  cn.initial[*cn.place_of(g.start)] = 1;
  return cn;
}

// cap(place of A) = kappa(A); requires a finite bound for every nonterminal
inline CapacityAssignment attach_capacity(const CfNet& cn, const Grammar& g,
                                          const CapacityFunction& k) {
  CapacityAssignment c = CapacityAssignment::all_unbounded(cn.net);
  for (PlaceId p = 0; p < cn.place_symbol.size(); ++p) {
    std::uint32_t b = k.bound(cn.place_symbol[p]);
    if (b == kUnbounded)
      throw error("capacity for nonterminal " + g.name(cn.place_symbol[p]) + " is unbounded");
    c.set(p, b);
  }
  return c;
}

enum class ExtensionKind { chains, cycles, shared_cycles };  // h-, c-, s-nets

inline std::string to_string(ExtensionKind k) {
  switch (k) {
    case ExtensionKind::chains: return "h";
    case ExtensionKind::cycles: return "c";
    case ExtensionKind::shared_cycles: return "s";
  }
  return "?";
}

struct ExtendedNet {
  ExtensionKind kind = ExtensionKind::chains;
  PetriNet net;  // grammar places first, then control places
  std::uint32_t grammar_places = 0;
  std::vector<SymbolId> place_symbol;          // for the grammar places
  std::vector<std::uint32_t> transition_rule;  // gamma
  Marking initial;
  Marking final_marking;
  std::vector<std::vector<TransitionId>> partition;
  std::vector<PathSpec> paths;
  std::optional<PlaceId> shared_place;  // s-nets

  bool is_control_place(PlaceId p) const { return p >= grammar_places; }
};

// Threads the transitions of each partition class into a chain (h), a cycle
// (c), or cycles sharing one place (s), in the declared order.
inline ExtendedNet build_extended_net(const Grammar& g, ExtensionKind kind,
                                      const std::vector<std::vector<std::uint32_t>>& partition) {
  CfNet cn = build_cf_net(g);
  ExtendedNet xn;
  xn.kind = kind;
  xn.net = std::move(cn.net);
  xn.grammar_places = static_cast<std::uint32_t>(xn.net.places.size());
  xn.place_symbol = std::move(cn.place_symbol);
  xn.transition_rule = std::move(cn.transition_rule);

  std::vector<char> used(xn.net.transitions.size(), 0);
  for (const auto& cls : partition) {
    if (cls.empty()) throw error("empty partition class");
    for (std::uint32_t ri : cls) {
      if (ri >= xn.net.transitions.size()) throw error("partition names an unknown rule");
      if (used[ri]) throw error("partition classes overlap");
      used[ri] = 1;
    }
  }
  for (std::size_t t = 0; t < used.size(); ++t)
    if (!used[t])
      throw error("partition misses rule " + xn.net.transitions[t]);
  xn.partition.assign(partition.begin(), partition.end());

  auto control_name = [&](std::size_t i, std::size_t j) {
    std::string base = "q" + std::to_string(i + 1) + "." + std::to_string(j);
    while (xn.net.find_place(base) || xn.net.find_transition(base)) base += "'";
    return base;
  };

  std::optional<PlaceId> p0;
  if (kind == ExtensionKind::shared_cycles) {
    std::string base = "q0";
    while (xn.net.find_place(base) || xn.net.find_transition(base)) base += "'";
    p0 = xn.net.add_place(base);
    xn.shared_place = p0;
  }

  std::vector<PlaceId> first_cycle_place;  // c-nets: the token carrier per cycle
  for (std::size_t i = 0; i < partition.size(); ++i) {
    const auto& cls = partition[i];
    PathSpec path;
    switch (kind) {
      case ExtensionKind::chains: {
        path.kind = PathSpec::Kind::chain;
        path.elements.push_back({false, cls[0]});
        for (std::size_t j = 1; j < cls.size(); ++j) {
          PlaceId q = xn.net.add_place(control_name(i, j));
          xn.net.add_arc_tp(cls[j - 1], q, 1);
          xn.net.add_arc_pt(q, cls[j], 1);
          path.elements.push_back({true, q});
          path.elements.push_back({false, cls[j]});
        }
        break;
      }
      case ExtensionKind::cycles: {
        path.kind = PathSpec::Kind::cycle;
        PlaceId first = xn.net.add_place(control_name(i, 1));
        first_cycle_place.push_back(first);
        PlaceId prev = first;
        path.elements.push_back({true, first});
        for (std::size_t j = 0; j < cls.size(); ++j) {
          xn.net.add_arc_pt(prev, cls[j], 1);
          path.elements.push_back({false, cls[j]});
          PlaceId next = (j + 1 == cls.size()) ? first : xn.net.add_place(control_name(i, j + 2));
          xn.net.add_arc_tp(cls[j], next, 1);
          path.elements.push_back({true, next});
          prev = next;
        }
        break;
      }
      case ExtensionKind::shared_cycles: {
        path.kind = PathSpec::Kind::cycle;
        PlaceId prev = *p0;
        path.elements.push_back({true, *p0});
        for (std::size_t j = 0; j < cls.size(); ++j) {
          xn.net.add_arc_pt(prev, cls[j], 1);
          path.elements.push_back({false, cls[j]});
          PlaceId next = (j + 1 == cls.size()) ? *p0 : xn.net.add_place(control_name(i, j + 2));
          xn.net.add_arc_tp(cls[j], next, 1);
          path.elements.push_back({true, next});
          prev = next;
        }
        break;
      }
    }
    xn.paths.push_back(std::move(path));
  }

  xn.initial = Marking::zero(xn.net);
  xn.initial[*xn.net.find_place(g.name(g.start))] = 1;
  xn.final_marking = Marking::zero(xn.net);
  if (kind == ExtensionKind::cycles) {
    for (PlaceId q : first_cycle_place) {
      xn.initial[q] = 1;
      xn.final_marking[q] = 1;
    }
  } else if (kind == ExtensionKind::shared_cycles) {
    xn.initial[*p0] = 1;
    xn.final_marking[*p0] = 1;
  }

  std::vector<std::string> path_report =
      validate_paths(xn.net, xn.paths, xn.partition, xn.shared_place);
  if (!path_report.empty()) throw error("extended net construction: " + path_report.front());
  return xn;
}

// weak: only grammar places carry bounds; strong: control places too
struct CapacityMode {
  enum class Kind { weak, strong };
  Kind kind = Kind::weak;
  CapacityFunction grammar_caps;  // finite on every nonterminal
  std::uint32_t control_cap = 1;  // strong mode
};

struct ControlledStep {
  std::string transition;
  std::string rule_label;
  std::uint32_t position = 0;
};

struct ControlledWord {
  Word word;
  std::vector<ControlledStep> steps;
};

struct ControlledResult {
  std::vector<ControlledWord> entries;
  bool exhaustive = false;
  std::uint64_t states = 0;
  std::vector<std::uint32_t> max_tokens;  // per place, over all explored states

  std::vector<Word> word_list() const {
    std::vector<Word> out;
    out.reserve(entries.size());
    for (const ControlledWord& e : entries) out.push_back(e.word);
    return out;
  }
};

namespace detail {

// Synchronized search: the grammar applies gamma(t) wherever its left side
// occurs while the net fires t; a word is accepted on a terminal form whose
// marking is final (when a final marking is required).
inline ControlledResult controlled_search(const Grammar& g, const PetriNet& net,
                                          const std::vector<std::uint32_t>& transition_rule,
                                          const Marking& initial, const Marking* final_required,
                                          const CapacityAssignment* caps, const SearchBudget& b,
                                          std::uint64_t form_slack) {
  constexpr std::uint32_t kSep = kUnbounded;
  std::uint32_t max_form;
  if (b.max_form_len != 0) {
    if (b.max_form_len < b.max_terminal_len)
      throw error("max_form_len must be at least max_terminal_len");
    max_form = b.max_form_len;
  } else {
    max_form = static_cast<std::uint32_t>(std::min<std::uint64_t>(
        static_cast<std::uint64_t>(b.max_terminal_len) + form_slack, 0xFFFFFFFEull));
  }

  ControlledResult out;
  out.max_tokens.assign(net.places.size(), 0);
  detail::KeyInterner seen;
  std::vector<std::uint32_t> parent;
  std::vector<ControlledStep> via;
  std::deque<std::uint32_t> queue;
  std::map<Word, std::uint32_t, WordLess> accepted{WordLess(g)};
  bool clipped = false, overflow = false;

  auto encode = [&](const std::vector<SymbolId>& syms, const Marking& m) {
    std::vector<std::uint32_t> key = syms;
    key.push_back(kSep);
    key.insert(key.end(), m.tokens.begin(), m.tokens.end());
    return key;
  };
  auto note_tokens = [&](const Marking& m) {
    for (std::size_t p = 0; p < m.tokens.size(); ++p)
      out.max_tokens[p] = std::max(out.max_tokens[p], m.tokens[p]);
  };

  SententialForm start(g, {g.start});
  if (caps && !caps->valid(initial)) {
    out.exhaustive = true;
    return out;
  }
  {
    auto [id, fresh] = seen.intern(encode(start.symbols(), initial));
    (void)fresh;
    parent.push_back(id);
    via.push_back({});
    queue.push_back(id);
    note_tokens(initial);
  }

  while (!queue.empty() && !overflow) {
    std::uint32_t id = queue.front();
    queue.pop_front();
    std::vector<SymbolId> syms;
    Marking m;
    {
      const auto& key = seen.key(id);
      std::size_t i = 0;
      while (key[i] != kSep) syms.push_back(key[i++]);
      ++i;
      m.tokens.assign(key.begin() + static_cast<std::ptrdiff_t>(i), key.end());
    }
    SententialForm w(g, std::move(syms));
    for (TransitionId t = 0; t < net.transitions.size(); ++t) {
      if (overflow) break;
      if (!enabled(net, m, t, caps)) continue;
      const Rule& r = g.rules[transition_rule[t]];
      const auto& cur = w.symbols();
      std::int64_t succ_len =
          static_cast<std::int64_t>(cur.size()) - static_cast<std::int64_t>(r.lhs.size()) +
          static_cast<std::int64_t>(r.rhs.size());
      Marking fired = fire(net, m, t);
      for (std::size_t p = 0; p + r.lhs.size() <= cur.size(); ++p) {
        if (!std::equal(r.lhs.begin(), r.lhs.end(), cur.begin() + static_cast<std::ptrdiff_t>(p)))
          continue;
        SententialForm f = apply_rule_at(g, w, r, p);
        if (f.terminal_total() > b.max_terminal_len) continue;
        if (static_cast<std::int64_t>(f.size()) > static_cast<std::int64_t>(max_form)) {
          clipped = true;
          continue;
        }
        auto [nid, fresh] = seen.intern(encode(f.symbols(), fired));
        if (!fresh) continue;
        if (seen.size() > b.max_states) {
          overflow = true;
          break;
        }
        note_tokens(fired);
        parent.push_back(id);
        via.push_back(ControlledStep{net.transitions[t], r.label, static_cast<std::uint32_t>(p)});
        if (f.all_terminal() && (!final_required || fired == *final_required))
          accepted.emplace(f.symbols(), nid);
        queue.push_back(nid);
        (void)succ_len;
      }
    }
  }

  out.states = seen.size();
  out.exhaustive = queue.empty() && !overflow && !clipped;
  for (const auto& [w, node] : accepted) {
    std::vector<ControlledStep> steps;
    std::uint32_t n = node;
    while (parent[n] != n) {
      steps.push_back(via[n]);
      n = parent[n];
    }
    std::reverse(steps.begin(), steps.end());
    out.entries.push_back(ControlledWord{w, std::move(steps)});
  }
  return out;
}

}  // namespace detail

// cf net with place capacities; acceptance needs only a terminal form (the
// grammar places are then empty by the token/count correspondence)
inline ControlledResult enumerate_controlled(const Grammar& g, const CfNet& cn,
                                             const CapacityAssignment* caps,
                                             const SearchBudget& b) {
  std::uint64_t slack = 0;
  if (caps) {
    for (PlaceId p = 0; p < cn.place_symbol.size(); ++p)
      slack += (caps->at(p) == kUnbounded) ? 8 : caps->at(p);
  } else {
    slack = 8ull * (g.nonterminals.size() + 1);
  }
  return detail::controlled_search(g, cn.net, cn.transition_rule, cn.initial, nullptr, caps, b,
                                   slack);
}

inline CapacityAssignment place_caps_for(const ExtendedNet& xn, const CapacityMode& cm) {
  CapacityAssignment caps = CapacityAssignment::all_unbounded(xn.net);
  for (PlaceId p = 0; p < xn.grammar_places; ++p) {
    std::uint32_t bound = cm.grammar_caps.bound(xn.place_symbol[p]);
    if (bound == kUnbounded) throw error("weak/strong capacity must be finite on nonterminals");
    caps.set(p, bound);
  }
  if (cm.kind == CapacityMode::Kind::strong)
    for (PlaceId p = xn.grammar_places; p < xn.net.places.size(); ++p)
      caps.set(p, cm.control_cap);
  return caps;
}

// extended nets additionally require the final marking tau
inline ControlledResult enumerate_controlled(const Grammar& g, const ExtendedNet& xn,
                                             const std::optional<CapacityMode>& cm,
                                             const SearchBudget& b) {
  std::optional<CapacityAssignment> caps;
  std::uint64_t slack = 8ull * (g.nonterminals.size() + 1);
  if (cm) {
    caps = place_caps_for(xn, *cm);
    slack = 0;
    for (PlaceId p = 0; p < xn.grammar_places; ++p) slack += caps->at(p);
  }
  return detail::controlled_search(g, xn.net, xn.transition_rule, xn.initial, &xn.final_marking,
                                   caps ? &*caps : nullptr, b, slack);
}

// Replays a synchronized run; returns the forms and markings step by step so
// invariants (token count = nonterminal count) can be checked externally.
struct ControlledTrace {
  std::vector<SententialForm> forms;
  std::vector<Marking> markings;
};

inline ControlledTrace replay_controlled(const Grammar& g, const PetriNet& net,
                                         const std::vector<std::uint32_t>& transition_rule,
                                         const Marking& initial,
                                         const std::vector<ControlledStep>& steps,
                                         const CapacityAssignment* caps = nullptr) {
  ControlledTrace tr;
  tr.forms.emplace_back(g, std::vector<SymbolId>{g.start});
  tr.markings.push_back(initial);
  for (const ControlledStep& st : steps) {
    auto t = net.find_transition(st.transition);
    if (!t) throw error("unknown transition " + st.transition);
    const Rule& r = g.rules[transition_rule[*t]];
    if (r.label != st.rule_label) throw error("transition label mismatch in replay");
    if (!enabled(net, tr.markings.back(), *t, caps))
      throw error("transition " + st.transition + " not enabled in replay");
    tr.markings.push_back(fire(net, tr.markings.back(), *t));
    tr.forms.push_back(apply_rule_at(g, tr.forms.back(), r, st.position));
  }
  return tr;
}

}  // namespace capgram
