#pragma once
// Text formats. Grammar files:
//
//   nonterminals: S A B
//   terminals: a b
//   start: S
//   capacity: S=1 A=2 B=*        (omitted section: unbounded everywhere)
//   rules:
//     r1: S -> A B;
//     r2: A -> ~;                (~ is lambda)
//   mode: vector                 (with matrices: matrix|vector|semi-matrix)
//   matrices:
//     m1: (r1, r2);
//
// Net files use places:/transitions:/arcs:/marking:/capacity:/final: with
// arc lines `p -> t @ 2;` (weight defaults to 1). Comments start with '#';
// symbol names and labels are whitespace-free tokens without '#', ';' or
// '='. Partition files hold lines `part: T1 = r0 r1 r2;`.

#include <fstream>
#include <sstream>

#include "capgram/petri.hpp"
#include "capgram/regulated.hpp"

namespace capgram {

struct ParsedGrammarFile {
  Grammar grammar;
  CapacityFunction capacity;
  bool capacity_given = false;
  std::optional<RegulatedGrammar> regulated;  // when a matrices section exists
};

namespace detail {

struct Statement {
  int line = 0;
  std::vector<std::string> tokens;
};

struct Sections {
  std::vector<std::pair<std::string, std::vector<Statement>>> buckets;

  std::vector<Statement>& bucket(const std::string& name) {
    for (auto& [n, b] : buckets)
      if (n == name) return b;
    buckets.emplace_back(name, std::vector<Statement>{});
    return buckets.back().second;
  }
  const std::vector<Statement>* find(const std::string& name) const {
    for (const auto& [n, b] : buckets)
      if (n == name) return &b;
    return nullptr;
  }
};

inline std::vector<std::string> tokenize_line(std::string_view line) {
  std::vector<std::string> toks;
  std::string cur;
  for (char c : line) {
    if (c == '#') break;
    if (c == ' ' || c == '\t' || c == '\r') {
      if (!cur.empty()) toks.push_back(std::move(cur)), cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) toks.push_back(cur);
  return toks;
}

inline Sections split_sections(std::string_view text,
                               const std::vector<std::string>& known_sections) {
  Sections out;
  std::string current;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                          : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    std::vector<std::string> toks = tokenize_line(line);
    if (toks.empty()) continue;
    std::string head = toks[0];
    if (!head.empty() && head.back() == ':') {
      std::string name = head.substr(0, head.size() - 1);
      if (std::find(known_sections.begin(), known_sections.end(), name) !=
          known_sections.end()) {
        current = name;
        out.bucket(current);
        if (toks.size() > 1)
          out.bucket(current).push_back(
              Statement{lineno, {toks.begin() + 1, toks.end()}});
        continue;
      }
    }
    if (current.empty()) throw parse_error(lineno, "content before any section header");
    out.bucket(current).push_back(Statement{lineno, std::move(toks)});
  }
  return out;
}

inline void check_plain_name(const Statement& st, const std::string& name) {
  if (name.empty() || name.find('=') != std::string::npos ||
      name.find(';') != std::string::npos)
    throw parse_error(st.line, "bad symbol name: " + name);
}

// `label: A B -> c D ;`
struct RuleLine {
  std::string label;
  std::vector<std::string> lhs, rhs;
};

inline RuleLine parse_rule_statement(const Statement& st) {
  RuleLine out;
  std::vector<std::string> toks = st.tokens;
  if (toks.empty()) throw parse_error(st.line, "empty rule");
  if (toks[0].back() != ':') throw parse_error(st.line, "rule must start with `label:`");
  out.label = toks[0].substr(0, toks[0].size() - 1);
  if (out.label.empty()) throw parse_error(st.line, "empty rule label");
  if (toks.back() == ";") {
    toks.pop_back();
  } else if (toks.back().size() > 1 && toks.back().back() == ';') {
    toks.back().pop_back();
  } else {
    throw parse_error(st.line, "rule must end with ';'");
  }
  std::size_t arrow = 0;
  bool found = false;
  for (std::size_t i = 1; i < toks.size(); ++i)
    if (toks[i] == "->") {
      arrow = i;
      found = true;
      break;
    }
  if (!found) throw parse_error(st.line, "rule needs '->'");
  out.lhs.assign(toks.begin() + 1, toks.begin() + static_cast<std::ptrdiff_t>(arrow));
  out.rhs.assign(toks.begin() + static_cast<std::ptrdiff_t>(arrow) + 1, toks.end());
  if (out.lhs.empty()) throw parse_error(st.line, "rule has an empty left side");
  if (out.rhs.size() == 1 && out.rhs[0] == "~") out.rhs.clear();
  for (const std::string& s : out.rhs)
    if (s == "~") throw parse_error(st.line, "'~' must stand alone");
  return out;
}

inline std::pair<std::string, std::string> split_assignment(const Statement& st,
                                                            const std::string& tok) {
  std::size_t eq = tok.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= tok.size())
    throw parse_error(st.line, "expected name=value, got: " + tok);
  return {tok.substr(0, eq), tok.substr(eq + 1)};
}

inline std::uint32_t parse_number(const Statement& st, const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw parse_error(st.line, "expected a number, got: " + s);
  unsigned long long v = std::stoull(s);
  if (v > 0xFFFFFFFFull) throw parse_error(st.line, "number out of range: " + s);
  return static_cast<std::uint32_t>(v);
}

}  // namespace detail

inline ParsedGrammarFile parse_grammar_text(std::string_view text) {
  using detail::Statement;
  detail::Sections sec = detail::split_sections(
      text, {"nonterminals", "terminals", "start", "capacity", "rules", "matrices", "mode"});

  ParsedGrammarFile out;
  Grammar& g = out.grammar;

  auto decls = [&](const char* name, bool nonterminal) {
    const auto* b = sec.find(name);
    if (!b) return;
    for (const Statement& st : *b)
      for (const std::string& tok : st.tokens) {
        detail::check_plain_name(st, tok);
        try {
          if (nonterminal)
            g.add_nonterminal(tok);
          else
            g.add_terminal(tok);
        } catch (const error& e) {
          throw parse_error(st.line, e.what());
        }
      }
  };
  decls("nonterminals", true);
  decls("terminals", false);
  if (g.nonterminals.empty()) throw parse_error(1, "no nonterminals declared");

  const auto* startb = sec.find("start");
  if (!startb || startb->empty() || (*startb)[0].tokens.size() != 1)
    throw parse_error(1, "exactly one start symbol required");
  {
    const Statement& st = (*startb)[0];
    auto id = g.symbols.find(st.tokens[0]);
    if (!id || !g.is_nonterminal(*id))
      throw parse_error(st.line, "start symbol is not a declared nonterminal");
    g.start = *id;
  }

  if (const auto* rb = sec.find("rules")) {
    for (const Statement& st : *rb) {
      detail::RuleLine rl = detail::parse_rule_statement(st);
      if (g.find_rule(rl.label)) throw parse_error(st.line, "duplicate rule label " + rl.label);
      auto ids = [&](const std::vector<std::string>& names) {
        std::vector<SymbolId> v;
        for (const std::string& n : names) {
          auto id = g.symbols.find(n);
          if (!id) throw parse_error(st.line, "undeclared symbol " + n);
          v.push_back(*id);
        }
        return v;
      };
      std::vector<SymbolId> lhs = ids(rl.lhs);
      for (SymbolId s : lhs)
        if (!g.is_nonterminal(s))
          throw parse_error(st.line, "rule " + rl.label + ": terminal in lhs");
      g.add_rule(rl.label, std::move(lhs), ids(rl.rhs));
    }
  }
  g.cf_flag = true;
  for (const Rule& r : g.rules)
    if (r.lhs.size() > 1) g.cf_flag = false;

  if (const auto* cb = sec.find("capacity")) {
    out.capacity_given = true;
    std::unordered_set<SymbolId> seen;
    for (const Statement& st : *cb)
      for (const std::string& tok : st.tokens) {
        auto [name, val] = detail::split_assignment(st, tok);
        auto id = g.symbols.find(name);
        if (!id || !g.is_nonterminal(*id))
          throw parse_error(st.line, "capacity for unknown nonterminal " + name);
        if (!seen.insert(*id).second)
          throw parse_error(st.line, "capacity for " + name + " given twice");
        if (val == "*") continue;  // unbounded
        std::uint32_t v = detail::parse_number(st, val);
        if (v == 0) throw parse_error(st.line, "capacity for " + name + " must be at least 1");
        out.capacity.set(*id, v);
      }
  }

  const auto* mb = sec.find("matrices");
  const auto* modeb = sec.find("mode");
  if (mb || modeb) {
    RegulatedGrammar rg;
    rg.base = g;
    rg.mode = RegulationMode::matrix;
    if (modeb) {
      if (modeb->empty() || (*modeb)[0].tokens.size() != 1)
        throw parse_error(1, "mode section needs exactly one value");
      const Statement& st = (*modeb)[0];
      const std::string& m = st.tokens[0];
      if (m == "matrix")
        rg.mode = RegulationMode::matrix;
      else if (m == "vector")
        rg.mode = RegulationMode::vector;
      else if (m == "semi-matrix")
        rg.mode = RegulationMode::semi_matrix;
      else
        throw parse_error(st.line, "mode must be matrix, vector or semi-matrix");
    }
    if (mb) {
      for (const Statement& st : *mb) {
        // `m1: (r1, r2);`  with (),; acting as separators
        std::string flat;
        for (const std::string& t : st.tokens) flat += t + " ";
        for (char& c : flat)
          if (c == '(' || c == ')' || c == ',' || c == ';') c = ' ';
        std::vector<std::string> toks = detail::tokenize_line(flat);
        if (toks.empty() || toks[0].back() != ':')
          throw parse_error(st.line, "matrix must start with `label:`");
        Matrix m;
        m.label = toks[0].substr(0, toks[0].size() - 1);
        for (auto& existing : rg.matrices)
          if (existing.label == m.label)
            throw parse_error(st.line, "duplicate matrix label " + m.label);
        for (std::size_t i = 1; i < toks.size(); ++i) {
          auto ri = rg.base.rule_index(toks[i]);
          if (!ri) throw parse_error(st.line, "matrix references unknown rule " + toks[i]);
          m.rule_indices.push_back(static_cast<std::uint32_t>(*ri));
        }
        if (m.rule_indices.empty()) throw parse_error(st.line, "matrix " + m.label + " is empty");
        rg.matrices.push_back(std::move(m));
      }
    }
    rg.restriction = out.capacity_given ? Restriction::with_capacity(out.capacity)
                                        : Restriction::none();
    out.regulated = std::move(rg);
  }

  ValidationReport rep =
      out.regulated ? validate_regulated(*out.regulated) : validate_grammar(g);
  if (!rep.ok()) throw error("invalid grammar: " + rep.violations.front());
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw error("cannot write " + path);
  outf << content;
}

inline ParsedGrammarFile parse_grammar_file(const std::string& path) {
  return parse_grammar_text(read_file(path));
}

inline std::string print_grammar(const Grammar& g, const CapacityFunction* k = nullptr) {
  std::ostringstream os;
  os << "nonterminals:";
  for (SymbolId a : g.nonterminals) os << ' ' << g.name(a);
  os << "\nterminals:";
  for (SymbolId a : g.terminals) os << ' ' << g.name(a);
  os << "\nstart: " << g.name(g.start) << "\n";
  if (k) {
    bool any = false;
    for (SymbolId a : g.nonterminals)
      if (k->bound(a) != kUnbounded) any = true;
    if (any) {
      os << "capacity:";
      for (SymbolId a : g.nonterminals) {
        os << ' ' << g.name(a) << '=';
        if (k->bound(a) == kUnbounded)
          os << '*';
        else
          os << k->bound(a);
      }
      os << "\n";
    }
  }
  os << "rules:\n";
  for (const Rule& r : g.rules) {
    os << "  " << r.label << ":";
    for (SymbolId s : r.lhs) os << ' ' << g.name(s);
    os << " ->";
    if (r.rhs.empty()) {
      os << " ~";
    } else {
      for (SymbolId s : r.rhs) os << ' ' << g.name(s);
    }
    os << ";\n";
  }
  return os.str();
}

inline std::string print_regulated(const RegulatedGrammar& rg) {
  const CapacityFunction* k = rg.restriction.kind == Restriction::Kind::capacity
                                  ? &rg.restriction.capacity
                                  : nullptr;
  std::ostringstream os;
  os << print_grammar(rg.base, k);
  os << "mode: " << to_string(rg.mode) << "\n";
  os << "matrices:\n";
  for (const Matrix& m : rg.matrices) {
    os << "  " << m.label << ": (";
    for (std::size_t i = 0; i < m.rule_indices.size(); ++i) {
      if (i) os << ", ";
      os << rg.base.rules[m.rule_indices[i]].label;
    }
    os << ");\n";
  }
  return os.str();
}

// -------------------------------------------------------------- net files

struct ParsedNetFile {
  PetriNet net;
  Marking marking;
  CapacityAssignment caps;
  bool caps_given = false;
  std::optional<Marking> final_marking;
};

inline ParsedNetFile parse_net_text(std::string_view text) {
  using detail::Statement;
  detail::Sections sec = detail::split_sections(
      text, {"places", "transitions", "arcs", "marking", "capacity", "final"});
  ParsedNetFile out;
  PetriNet& n = out.net;

  if (const auto* b = sec.find("places"))
    for (const Statement& st : *b)
      for (const std::string& tok : st.tokens) {
        detail::check_plain_name(st, tok);
        try {
          n.add_place(tok);
        } catch (const error& e) {
          throw parse_error(st.line, e.what());
        }
      }
  if (const auto* b = sec.find("transitions"))
    for (const Statement& st : *b)
      for (const std::string& tok : st.tokens) {
        detail::check_plain_name(st, tok);
        try {
          n.add_transition(tok);
        } catch (const error& e) {
          throw parse_error(st.line, e.what());
        }
      }

  if (const auto* b = sec.find("arcs")) {
    for (const Statement& st : *b) {
      std::vector<std::string> toks = st.tokens;
      if (toks.empty()) continue;
      if (toks.back() == ";")
        toks.pop_back();
      else if (toks.back().size() > 1 && toks.back().back() == ';')
        toks.back().pop_back();
      else
        throw parse_error(st.line, "arc must end with ';'");
      std::uint32_t w = 1;
      if (toks.size() == 5 && toks[3] == "@") {
        w = detail::parse_number(st, toks[4]);
        toks.resize(3);
      }
      if (toks.size() != 3 || toks[1] != "->")
        throw parse_error(st.line, "arc must be `x -> y [@ w];`");
      auto p = n.find_place(toks[0]);
      auto t = n.find_transition(toks[0]);
      try {
        if (p) {
          auto dst = n.find_transition(toks[2]);
          if (!dst) throw parse_error(st.line, "arc target must be a transition: " + toks[2]);
          n.add_arc_pt(*p, *dst, w);
        } else if (t) {
          auto dst = n.find_place(toks[2]);
          if (!dst) throw parse_error(st.line, "arc target must be a place: " + toks[2]);
          n.add_arc_tp(*t, *dst, w);
        } else {
          throw parse_error(st.line, "unknown arc source " + toks[0]);
        }
      } catch (const parse_error&) {
        throw;
      } catch (const error& e) {
        throw parse_error(st.line, e.what());
      }
    }
  }

  auto read_marking = [&](const char* name, Marking& m) {
    m = Marking::zero(n);
    const auto* b = sec.find(name);
    if (!b) return false;
    for (const Statement& st : *b)
      for (const std::string& tok : st.tokens) {
        auto [pname, val] = detail::split_assignment(st, tok);
        auto p = n.find_place(pname);
        if (!p) throw parse_error(st.line, "marking for unknown place " + pname);
        m[*p] = detail::parse_number(st, val);
      }
    return true;
  };
  read_marking("marking", out.marking);
  Marking fin;
  if (read_marking("final", fin)) out.final_marking = fin;

  out.caps = CapacityAssignment::all_unbounded(n);
  if (const auto* b = sec.find("capacity")) {
    out.caps_given = true;
    for (const Statement& st : *b)
      for (const std::string& tok : st.tokens) {
        auto [pname, val] = detail::split_assignment(st, tok);
        auto p = n.find_place(pname);
        if (!p) throw parse_error(st.line, "capacity for unknown place " + pname);
        if (val == "*") continue;
        std::uint32_t v = detail::parse_number(st, val);
        if (v == 0) throw parse_error(st.line, "place capacity must be at least 1");
        out.caps.set(*p, v);
      }
  }
  return out;
}

inline ParsedNetFile parse_net_file(const std::string& path) {
  return parse_net_text(read_file(path));
}

inline std::string print_net(const PetriNet& n, const Marking* marking = nullptr,
                             const CapacityAssignment* caps = nullptr,
                             const Marking* final_marking = nullptr) {
  std::ostringstream os;
  os << "places:";
  for (const std::string& p : n.places) os << ' ' << p;
  os << "\ntransitions:";
  for (const std::string& t : n.transitions) os << ' ' << t;
  os << "\narcs:\n";
  for (TransitionId t = 0; t < n.transitions.size(); ++t) {
    for (const auto& [p, w] : n.pre[t]) {
      os << "  " << n.places[p] << " -> " << n.transitions[t];
      if (w != 1) os << " @ " << w;
      os << ";\n";
    }
    for (const auto& [p, w] : n.post[t]) {
      os << "  " << n.transitions[t] << " -> " << n.places[p];
      if (w != 1) os << " @ " << w;
      os << ";\n";
    }
  }
  if (marking) {
    bool any = false;
    for (std::uint32_t v : marking->tokens) any |= (v != 0);
    if (any) {
      os << "marking:";
      for (PlaceId p = 0; p < n.places.size(); ++p)
        if ((*marking)[p] != 0) os << ' ' << n.places[p] << '=' << (*marking)[p];
      os << "\n";
    }
  }
  if (caps) {
    bool any = false;
    for (PlaceId p = 0; p < n.places.size(); ++p) any |= (caps->at(p) != kUnbounded);
    if (any) {
      os << "capacity:";
      for (PlaceId p = 0; p < n.places.size(); ++p)
        if (caps->at(p) != kUnbounded) os << ' ' << n.places[p] << '=' << caps->at(p);
      os << "\n";
    }
  }
  if (final_marking) {
    os << "final:";
    for (PlaceId p = 0; p < n.places.size(); ++p)
      if ((*final_marking)[p] != 0) os << ' ' << n.places[p] << '=' << (*final_marking)[p];
    os << "\n";
  }
  return os.str();
}

// -------------------------------------------------------- partition files

// lines `part: T1 = r0 r1 r2;`
inline std::vector<std::pair<std::string, std::vector<std::string>>> parse_partition_text(
    std::string_view text) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                          : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    std::vector<std::string> toks = detail::tokenize_line(line);
    if (toks.empty()) continue;
    detail::Statement st{lineno, toks};
    if (toks[0] != "part:") throw parse_error(lineno, "expected `part: NAME = labels... ;`");
    if (toks.back() == ";")
      toks.pop_back();
    else if (toks.back().size() > 1 && toks.back().back() == ';')
      toks.back().pop_back();
    else
      throw parse_error(lineno, "partition line must end with ';'");
    if (toks.size() < 4 || toks[2] != "=")
      throw parse_error(lineno, "expected `part: NAME = labels... ;`");
    out.emplace_back(toks[1], std::vector<std::string>(toks.begin() + 3, toks.end()));
  }
  if (out.empty()) throw error("partition file declares no classes");
  return out;
}

inline std::vector<std::pair<std::string, std::vector<std::string>>> parse_partition_file(
    const std::string& path) {
  return parse_partition_text(read_file(path));
}

// homomorphism map files: lines `a -> x y;`
inline std::vector<std::pair<std::string, std::vector<std::string>>> parse_symbol_map_text(
    std::string_view text) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                          : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    std::vector<std::string> toks = detail::tokenize_line(line);
    if (toks.empty()) continue;
    if (toks.back() == ";")
      toks.pop_back();
    else if (toks.back().size() > 1 && toks.back().back() == ';')
      toks.back().pop_back();
    else
      throw parse_error(lineno, "map line must end with ';'");
    if (toks.size() < 2 || toks[1] != "->")
      throw parse_error(lineno, "expected `a -> image... ;`");
    std::vector<std::string> image(toks.begin() + 2, toks.end());
    if (image.size() == 1 && image[0] == "~") image.clear();
    out.emplace_back(toks[0], std::move(image));
  }
  return out;
}

inline std::vector<std::pair<std::string, std::vector<std::string>>> parse_symbol_map_file(
    const std::string& path) {
  return parse_symbol_map_text(read_file(path));
}

}  // namespace capgram
