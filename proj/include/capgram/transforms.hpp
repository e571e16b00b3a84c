#pragma once
// Constructive grammar transformations: capacity normalization, blockwise
// closure, the matrix-grammar simulation of capacity-one block rewriting,
// closure constructions (union, concatenation, star, homomorphism), and the
// finite-index form of capacity-one vector grammars. Every transformation is
// deterministic and reports a provenance map from new labels to source rule
// labels.

#include <map>
#include <sstream>

#include "capgram/regulated.hpp"

namespace capgram {

struct TransformLimits {
  std::uint32_t max_symbols = 10'000;
  std::uint64_t max_rules = 200'000;
};

struct Provenance {
  std::vector<std::pair<std::string, std::string>> entries;  // new label -> source label

  void add(std::string nw, std::string src) { entries.emplace_back(std::move(nw), std::move(src)); }
  std::string text() const {
    std::ostringstream os;
    for (const auto& [n, s] : entries) os << n << " <- " << (s.empty() ? "(new)" : s) << "\n";
    return os.str();
  }
};

namespace detail {

inline void check_symbol_budget(std::size_t n, const TransformLimits& lim) {
  if (n > lim.max_symbols)
    throw error("transformation exceeds the symbol budget (" + std::to_string(lim.max_symbols) +
                ")");
}
inline void check_rule_budget(std::size_t n, const TransformLimits& lim) {
  if (n > lim.max_rules)
    throw error("transformation exceeds the rule budget (" + std::to_string(lim.max_rules) + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// capacity normalization: kappa -> all-ones over indexed copies (A,i)

struct NormalizeResult {
  Grammar grammar;
  CapacityFunction capacity;  // all-ones
  Provenance provenance;
  std::unordered_map<std::string, std::string> label_to_source;

  // positions carry over unchanged; only labels map back
  std::vector<DerivationStep> lift(const std::vector<DerivationStep>& steps) const {
    std::vector<DerivationStep> out;
    out.reserve(steps.size());
    for (const DerivationStep& s : steps)
      out.push_back(DerivationStep{label_to_source.at(s.rule_label), s.position});
    return out;
  }
};

inline NormalizeResult normalize_capacity_to_one(const Grammar& g, const CapacityFunction& k,
                                                 const TransformLimits& lim = {}) {
  if (!k.all_finite(g)) throw error("capacity normalization requires finite bounds");
  NormalizeResult res;
  Grammar& out = res.grammar;

  // (A,i) for 1 <= i <= kappa(A)
  std::unordered_map<SymbolId, std::vector<SymbolId>> variants;
  for (SymbolId a : g.nonterminals) {
    std::vector<SymbolId>& vs = variants[a];
    for (std::uint32_t i = 1; i <= k.bound(a); ++i) {
      detail::check_symbol_budget(out.symbols.size() + 1, lim);
      vs.push_back(out.add_nonterminal("(" + g.name(a) + "," + std::to_string(i) + ")"));
    }
  }
  std::unordered_map<SymbolId, SymbolId> term_map;
  for (SymbolId a : g.terminals) term_map[a] = out.add_terminal(g.name(a));
  out.start = variants.at(g.start)[0];
  out.cf_flag = g.cf_flag;

  for (const Rule& r : g.rules) {
    std::vector<std::size_t> occ;  // nonterminal occurrence slots across lhs+rhs
    std::vector<SymbolId> flat = r.lhs;
    flat.insert(flat.end(), r.rhs.begin(), r.rhs.end());
    for (std::size_t i = 0; i < flat.size(); ++i)
      if (g.is_nonterminal(flat[i])) occ.push_back(i);

    std::uint64_t combos = 1;
    for (std::size_t i : occ) {
      combos *= k.bound(flat[i]);
      detail::check_rule_budget(combos, lim);
    }
    detail::check_rule_budget(out.rules.size() + combos, lim);

    std::vector<std::uint32_t> pick(occ.size(), 0);  // 0-based variant indices
    for (std::uint64_t v = 0; v < combos; ++v) {
      std::vector<SymbolId> image(flat.size());
      for (std::size_t i = 0; i < flat.size(); ++i)
        image[i] = g.is_nonterminal(flat[i]) ? 0 : term_map.at(flat[i]);
      for (std::size_t oi = 0; oi < occ.size(); ++oi)
        image[occ[oi]] = variants.at(flat[occ[oi]])[pick[oi]];
      std::string label = combos == 1 ? r.label : r.label + "." + std::to_string(v + 1);
      out.add_rule(label,
                   std::vector<SymbolId>(image.begin(),
                                         image.begin() + static_cast<std::ptrdiff_t>(r.lhs.size())),
                   std::vector<SymbolId>(image.begin() + static_cast<std::ptrdiff_t>(r.lhs.size()),
                                         image.end()));
      res.provenance.add(label, r.label);
      res.label_to_source[label] = r.label;
      // odometer, rightmost occurrence fastest
      for (std::size_t oi = occ.size(); oi-- > 0;) {
        if (++pick[oi] < k.bound(flat[occ[oi]])) break;
        pick[oi] = 0;
      }
    }
  }
  res.capacity = CapacityFunction::uniform(out, 1);
  return res;
}

// ---------------------------------------------------------------------------
// blockwise closure: pad every rule with all repetition-free nonterminal
// contexts so a capacity-one derivation can always rewrite a maximal block

struct BlockwiseResult {
  Grammar grammar;
  CapacityFunction capacity;  // all-ones
  Provenance provenance;
  // new label -> (source label, offset of the original lhs inside the padded lhs)
  std::unordered_map<std::string, std::pair<std::string, std::uint32_t>> label_to_source;

  std::vector<DerivationStep> lift(const std::vector<DerivationStep>& steps) const {
    std::vector<DerivationStep> out;
    out.reserve(steps.size());
    for (const DerivationStep& s : steps) {
      const auto& [src, off] = label_to_source.at(s.rule_label);
      out.push_back(DerivationStep{src, s.position + off});
    }
    return out;
  }
};

namespace detail {

// all (alpha1, alpha2) pairs of disjoint repetition-free strings over
// `avail`, emitted in a fixed preorder; cb(prefix, divider)
template <class Fn>
inline void enumerate_contexts(const std::vector<SymbolId>& avail, Fn&& cb) {
  std::vector<SymbolId> prefix;
  std::vector<char> used(avail.size(), 0);
  auto rec = [&](auto&& self) -> void {
    for (std::size_t d = 0; d <= prefix.size(); ++d) cb(prefix, d);
    for (std::size_t i = 0; i < avail.size(); ++i) {
      if (used[i]) continue;
      used[i] = 1;
      prefix.push_back(avail[i]);
      self(self);
      prefix.pop_back();
      used[i] = 0;
    }
  };
  rec(rec);
}

}  // namespace detail

inline BlockwiseResult blockwise_closure(const Grammar& g, const CapacityFunction& k,
                                         const TransformLimits& lim = {}) {
  if (!k.all_one(g)) throw error("blockwise closure requires the all-ones capacity");
  BlockwiseResult res;
  res.grammar = g;
  res.grammar.rules.clear();
  Grammar& out = res.grammar;

  for (const Rule& r : g.rules) {
    // rules whose lhs repeats a nonterminal admit no context at all
    auto lhs_counts = detail::count_nonterminals(g, r.lhs);
    bool lhs_ok = true;
    for (const auto& [a, c] : lhs_counts)
      if (c > 1) lhs_ok = false;
    if (!lhs_ok) continue;

    std::vector<SymbolId> avail;
    for (SymbolId a : g.nonterminals)
      if (std::find(r.lhs.begin(), r.lhs.end(), a) == r.lhs.end()) avail.push_back(a);

    std::uint32_t counter = 0;
    detail::enumerate_contexts(avail, [&](const std::vector<SymbolId>& ctx, std::size_t d) {
      ++counter;
      detail::check_rule_budget(out.rules.size() + 1, lim);
      std::vector<SymbolId> lhs(ctx.begin(), ctx.begin() + static_cast<std::ptrdiff_t>(d));
      std::uint32_t offset = static_cast<std::uint32_t>(lhs.size());
      lhs.insert(lhs.end(), r.lhs.begin(), r.lhs.end());
      std::vector<SymbolId> rhs(lhs.begin(), lhs.begin() + offset);
      rhs.insert(rhs.end(), r.rhs.begin(), r.rhs.end());
      lhs.insert(lhs.end(), ctx.begin() + static_cast<std::ptrdiff_t>(d), ctx.end());
      rhs.insert(rhs.end(), ctx.begin() + static_cast<std::ptrdiff_t>(d), ctx.end());
      std::string label = counter == 1 ? r.label : r.label + "." + std::to_string(counter);
      out.add_rule(label, std::move(lhs), std::move(rhs));
      res.provenance.add(label, r.label);
      res.label_to_source[label] = {r.label, offset};
    });
  }
  out.cf_flag = true;
  for (const Rule& r : out.rules)
    if (r.lhs.size() > 1) out.cf_flag = false;
  res.capacity = CapacityFunction::uniform(out, 1);
  return res;
}

// ---------------------------------------------------------------------------
// matrix grammar of finite index simulating capacity-one block rewriting

struct MatrixFinResult {
  RegulatedGrammar grammar;  // matrix mode, no restriction
  Provenance provenance;
  std::unordered_map<SymbolId, std::vector<SymbolId>> block_content;  // [w] -> w (new ids)
  std::vector<SymbolId> tally_order;  // plain copies, start symbol first
  std::unordered_map<SymbolId, SymbolId> bar_of;
  SymbolId fresh_start = 0;
};

// Builds the simulation directly over reachable encoded blocks: starting
// from [S], each padded rule whose left side equals a known block and whose
// right side repeats no nonterminal becomes one matrix
//   ( [lhs] -> encoded rhs,  A -> _A for vanished A,  _A -> A for new A )
// plus the start matrix (S' -> [S] S _A1 ... _Am) and the finishing matrix
// erasing all bars. Right sides that repeat a nonterminal can never occur in
// a capacity-one derivation, so skipping them loses nothing.
inline MatrixFinResult to_finite_index_matrix_grammar(const Grammar& g_in,
                                                      const CapacityFunction& k_in,
                                                      const TransformLimits& lim = {}) {
  Grammar base;
  Provenance chain;
  std::unordered_map<std::string, std::string> to_original;
  if (k_in.all_one(g_in)) {
    base = g_in;
    for (const Rule& r : base.rules) to_original[r.label] = r.label;
  } else {
    NormalizeResult n = normalize_capacity_to_one(g_in, k_in, lim);
    base = std::move(n.grammar);
    to_original = std::move(n.label_to_source);
  }

  MatrixFinResult res;
  Grammar& out = res.grammar.base;
  res.grammar.mode = RegulationMode::matrix;
  res.grammar.restriction = Restriction::none();

  // tally order: start symbol first, the rest in declaration order
  std::vector<SymbolId> tally_src;
  tally_src.push_back(base.start);
  for (SymbolId a : base.nonterminals)
    if (a != base.start) tally_src.push_back(a);

  res.fresh_start = out.add_nonterminal(fresh_name(out.symbols, "S'"));
  std::unordered_map<SymbolId, SymbolId> plain, bar;
  for (SymbolId a : tally_src) {
    plain[a] = out.add_nonterminal(fresh_name(out.symbols, base.name(a)));
    bar[a] = out.add_nonterminal(fresh_name(out.symbols, "_" + base.name(a)));
  }
  std::unordered_map<SymbolId, SymbolId> term_map;
  for (SymbolId a : base.terminals) term_map[a] = out.add_terminal(base.name(a));
  out.start = res.fresh_start;
  out.cf_flag = true;
  for (SymbolId a : tally_src) {
    res.tally_order.push_back(plain[a]);
    res.bar_of[plain[a]] = bar[a];
  }

  bool one_char = base.compact_names();
  auto block_name = [&](const std::vector<SymbolId>& content) {
    std::string s = "[";
    for (std::size_t i = 0; i < content.size(); ++i) {
      if (i && !one_char) s += '.';
      s += base.name(content[i]);
    }
    s += ']';
    return fresh_name(out.symbols, s);
  };

  std::map<std::vector<SymbolId>, SymbolId> block_ids;  // content in base ids
  std::vector<std::vector<SymbolId>> worklist;
  auto block_of = [&](const std::vector<SymbolId>& content) {
    auto it = block_ids.find(content);
    if (it != block_ids.end()) return it->second;
    detail::check_symbol_budget(out.symbols.size() + 1, lim);
    SymbolId id = out.add_nonterminal(block_name(content));
    std::vector<SymbolId> mapped;
    for (SymbolId a : content) mapped.push_back(plain.at(a));
    res.block_content[id] = std::move(mapped);
    block_ids.emplace(content, id);
    worklist.push_back(content);
    return id;
  };

  // shared tally bookkeeping rules, declared once
  std::unordered_map<SymbolId, std::uint32_t> clear_rule, set_rule, erase_rule;
  for (SymbolId a : tally_src) {
    clear_rule[a] = static_cast<std::uint32_t>(out.rules.size());
    out.add_rule("clear." + base.name(a), {plain[a]}, {bar[a]});
    set_rule[a] = static_cast<std::uint32_t>(out.rules.size());
    out.add_rule("set." + base.name(a), {bar[a]}, {plain[a]});
    erase_rule[a] = static_cast<std::uint32_t>(out.rules.size());
    out.add_rule("erase." + base.name(a), {bar[a]}, {});
  }

  // start matrix: S' -> [S] S _A1 ... _Am
  {
    std::vector<SymbolId> rhs;
    rhs.push_back(block_of({base.start}));
    rhs.push_back(plain[base.start]);
    for (std::size_t i = 1; i < tally_src.size(); ++i) rhs.push_back(bar[tally_src[i]]);
    std::uint32_t ri = static_cast<std::uint32_t>(out.rules.size());
    out.add_rule("start", {res.fresh_start}, std::move(rhs));
    res.grammar.matrices.push_back(Matrix{"m.start", {ri}});
    res.provenance.add("m.start", "");
  }

  std::unordered_map<std::string, std::uint32_t> per_source;
  std::size_t processed = 0;
  while (processed < worklist.size()) {
    std::vector<SymbolId> blk = worklist[processed++];
    SymbolId blk_sym = block_ids.at(blk);
    for (const Rule& r : base.rules) {
      if (r.lhs.size() > blk.size()) continue;
      for (std::size_t p = 0; p + r.lhs.size() <= blk.size(); ++p) {
        if (!std::equal(r.lhs.begin(), r.lhs.end(), blk.begin() + static_cast<std::ptrdiff_t>(p)))
          continue;
        // padded rhs = alpha1 rhs alpha2; skip if some nonterminal repeats
        std::vector<SymbolId> full;
        full.insert(full.end(), blk.begin(), blk.begin() + static_cast<std::ptrdiff_t>(p));
        full.insert(full.end(), r.rhs.begin(), r.rhs.end());
        full.insert(full.end(), blk.begin() + static_cast<std::ptrdiff_t>(p + r.lhs.size()),
                    blk.end());
        bool repeats = false;
        {
          auto counts = detail::count_nonterminals(base, full);
          for (const auto& [a, c] : counts)
            if (c > 1) repeats = true;
        }
        if (repeats) continue;

        // encode: maximal nonterminal runs become block symbols
        std::vector<SymbolId> encoded;
        std::vector<SymbolId> run;
        auto flush_run = [&]() {
          if (run.empty()) return;
          encoded.push_back(block_of(run));
          run.clear();
        };
        for (SymbolId s : full) {
          if (base.is_nonterminal(s)) {
            run.push_back(s);
          } else {
            flush_run();
            encoded.push_back(term_map.at(s));
          }
        }
        flush_run();

        std::string src = to_original.at(r.label);
        std::uint32_t ord = ++per_source[r.label];
        std::string mlabel = r.label + "." + std::to_string(ord);
        detail::check_rule_budget(out.rules.size() + 1, lim);
        std::uint32_t block_rule = static_cast<std::uint32_t>(out.rules.size());
        out.add_rule("b." + mlabel, {blk_sym}, std::move(encoded));

        Matrix m;
        m.label = mlabel;
        m.rule_indices.push_back(block_rule);
        for (SymbolId a : tally_src) {
          std::uint32_t in_lhs = 0, in_rhs = 0;
          for (SymbolId s : blk)
            if (s == a) ++in_lhs;
          for (SymbolId s : full)
            if (s == a) ++in_rhs;
          if (in_lhs == 1 && in_rhs == 0) m.rule_indices.push_back(clear_rule[a]);
        }
        for (SymbolId a : tally_src) {
          std::uint32_t in_lhs = 0, in_rhs = 0;
          for (SymbolId s : blk)
            if (s == a) ++in_lhs;
          for (SymbolId s : full)
            if (s == a) ++in_rhs;
          if (in_lhs == 0 && in_rhs == 1) m.rule_indices.push_back(set_rule[a]);
        }
        res.grammar.matrices.push_back(std::move(m));
        res.provenance.add(mlabel, src);
      }
    }
  }

  // finishing matrix erases the whole tally
  {
    Matrix fin;
    fin.label = "m.finish";
    for (SymbolId a : tally_src) fin.rule_indices.push_back(erase_rule[a]);
    res.grammar.matrices.push_back(std::move(fin));
    res.provenance.add("m.finish", "");
  }
  return res;
}

// Checks the shape every reachable form of the simulation has between
// matrices: encoded prefix over blocks and terminals, then one tally symbol
// (plain or barred) per nonterminal in order, the plain ones exactly for the
// nonterminals occurring in the decoded prefix.
inline bool matrixfin_shape_ok(const MatrixFinResult& mf, const SententialForm& form) {
  const Grammar& g = mf.grammar.base;
  const auto& syms = form.symbols();
  std::size_t n = syms.size();
  if (n == 1 && syms[0] == mf.fresh_start) return true;  // before the start matrix
  std::size_t tail = mf.tally_order.size();
  if (n < tail) return false;
  std::unordered_map<SymbolId, std::uint32_t> decoded;  // plain id -> count in prefix
  for (std::size_t i = 0; i < n - tail; ++i) {
    SymbolId s = syms[i];
    auto it = mf.block_content.find(s);
    if (it != mf.block_content.end()) {
      for (SymbolId a : it->second) ++decoded[a];
    } else if (g.is_nonterminal(s)) {
      return false;  // prefix may contain only blocks and terminals
    }
  }
  for (std::size_t i = 0; i < tail; ++i) {
    SymbolId want_plain = mf.tally_order[i];
    SymbolId got = syms[n - tail + i];
    std::uint32_t cnt = decoded.count(want_plain) ? decoded[want_plain] : 0;
    if (cnt > 1) return false;
    SymbolId expect = cnt == 1 ? want_plain : mf.bar_of.at(want_plain);
    if (got != expect) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// finite index -> capacity bound: pair a context-free grammar with the
// constant capacity k

struct ConstantCapacityResult {
  Grammar grammar;
  CapacityFunction capacity;
};

inline ConstantCapacityResult with_constant_capacity(const Grammar& g, std::uint32_t k) {
  if (!g.cf_flag) throw error("constant-capacity pairing requires a context-free grammar");
  if (k == 0) throw error("capacity bound must be at least 1");
  ConstantCapacityResult res;
  res.grammar = g;
  res.capacity = CapacityFunction::uniform(res.grammar, k);
  return res;
}

// ---------------------------------------------------------------------------
// closure constructions for capacity-one context-free grammars

struct ClosureResult {
  Grammar grammar;
  CapacityFunction capacity;  // all-ones
  Provenance provenance;
};

namespace detail {

inline Grammar normalized_cf(const Grammar& g, const CapacityFunction& k, Provenance& prov,
                             const TransformLimits& lim) {
  if (!g.cf_flag) throw error("closure constructions require context-free grammars");
  if (k.all_one(g)) return g;
  NormalizeResult n = normalize_capacity_to_one(g, k, lim);
  for (auto& e : n.provenance.entries) prov.entries.push_back(e);
  return std::move(n.grammar);
}

// copies src into dst with nonterminals and labels suffixed by tag
inline SymbolId merge_renamed(Grammar& dst, const Grammar& src, const std::string& tag,
                              Provenance& prov) {
  std::unordered_map<SymbolId, SymbolId> map;
  for (SymbolId a : src.nonterminals)
    map[a] = dst.add_nonterminal(fresh_name(dst.symbols, src.name(a) + tag));
  for (SymbolId a : src.terminals) {
    if (auto id = dst.symbols.find(src.name(a)))
      map[a] = *id;
    else
      map[a] = dst.add_terminal(src.name(a));
  }
  auto image = [&](const std::vector<SymbolId>& v) {
    std::vector<SymbolId> out;
    out.reserve(v.size());
    for (SymbolId s : v) out.push_back(map.at(s));
    return out;
  };
  for (const Rule& r : src.rules) {
    dst.add_rule(r.label + tag, image(r.lhs), image(r.rhs));
    prov.add(r.label + tag, r.label);
  }
  return map.at(src.start);
}

}  // namespace detail

inline ClosureResult closure_star(const Grammar& g_in, const CapacityFunction& k_in,
                                  const TransformLimits& lim = {}) {
  ClosureResult res;
  Grammar g = detail::normalized_cf(g_in, k_in, res.provenance, lim);
  res.grammar = std::move(g);
  Grammar& out = res.grammar;
  SymbolId s2 = out.add_nonterminal(fresh_name(out.symbols, "S'"));
  SymbolId s1 = out.start;
  out.start = s2;
  out.add_rule("star.step", {s2}, {s1, s2});
  out.add_rule("star.done", {s2}, {});
  res.provenance.add("star.step", "");
  res.provenance.add("star.done", "");
  res.capacity = CapacityFunction::uniform(out, 1);
  return res;
}

inline ClosureResult closure_union(const Grammar& g1_in, const CapacityFunction& k1,
                                   const Grammar& g2_in, const CapacityFunction& k2,
                                   const TransformLimits& lim = {}) {
  ClosureResult res;
  Grammar g1 = detail::normalized_cf(g1_in, k1, res.provenance, lim);
  Grammar g2 = detail::normalized_cf(g2_in, k2, res.provenance, lim);
  Grammar& out = res.grammar;
  SymbolId s = out.add_nonterminal(fresh_name(out.symbols, "S'"));
  out.start = s;
  out.cf_flag = true;
  SymbolId s1 = detail::merge_renamed(out, g1, ".1", res.provenance);
  SymbolId s2 = detail::merge_renamed(out, g2, ".2", res.provenance);
  out.add_rule("start.1", {s}, {s1});
  out.add_rule("start.2", {s}, {s2});
  res.provenance.add("start.1", "");
  res.provenance.add("start.2", "");
  detail::check_symbol_budget(out.symbols.size(), lim);
  res.capacity = CapacityFunction::uniform(out, 1);
  return res;
}

inline ClosureResult closure_concat(const Grammar& g1_in, const CapacityFunction& k1,
                                    const Grammar& g2_in, const CapacityFunction& k2,
                                    const TransformLimits& lim = {}) {
  ClosureResult res;
  Grammar g1 = detail::normalized_cf(g1_in, k1, res.provenance, lim);
  Grammar g2 = detail::normalized_cf(g2_in, k2, res.provenance, lim);
  Grammar& out = res.grammar;
  SymbolId s = out.add_nonterminal(fresh_name(out.symbols, "S'"));
  out.start = s;
  out.cf_flag = true;
  SymbolId s1 = detail::merge_renamed(out, g1, ".1", res.provenance);
  SymbolId s2 = detail::merge_renamed(out, g2, ".2", res.provenance);
  out.add_rule("concat", {s}, {s1, s2});
  res.provenance.add("concat", "");
  detail::check_symbol_budget(out.symbols.size(), lim);
  res.capacity = CapacityFunction::uniform(out, 1);
  return res;
}

// terminal-wise image; terminals without an image map to themselves
inline ClosureResult apply_terminal_homomorphism(
    const Grammar& g_in, const CapacityFunction& k_in,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& images,
    const TransformLimits& lim = {}) {
  ClosureResult res;
  Grammar g = detail::normalized_cf(g_in, k_in, res.provenance, lim);

  std::unordered_map<std::string, std::vector<std::string>> img;
  for (const auto& [from, to] : images) {
    if (!g.symbols.find(from) || g.is_nonterminal(*g.symbols.find(from)))
      throw error("homomorphism maps unknown terminal " + from);
    if (!img.emplace(from, to).second) throw error("homomorphism maps " + from + " twice");
  }

  Grammar& out = res.grammar;
  std::unordered_map<SymbolId, SymbolId> nt_map;
  for (SymbolId a : g.nonterminals) nt_map[a] = out.add_nonterminal(g.name(a));
  std::unordered_map<SymbolId, std::vector<SymbolId>> t_map;
  auto terminal_id = [&](const std::string& name) {
    if (auto id = out.symbols.find(name)) return *id;
    detail::check_symbol_budget(out.symbols.size() + 1, lim);
    return out.add_terminal(name);
  };
  for (SymbolId a : g.terminals) {
    auto it = img.find(g.name(a));
    std::vector<SymbolId> image;
    if (it == img.end()) {
      image.push_back(terminal_id(g.name(a)));
    } else {
      for (const std::string& n : it->second) image.push_back(terminal_id(n));
    }
    t_map[a] = std::move(image);
  }
  out.start = nt_map.at(g.start);
  out.cf_flag = g.cf_flag;
  for (const Rule& r : g.rules) {
    std::vector<SymbolId> lhs, rhs;
    for (SymbolId s : r.lhs) lhs.push_back(nt_map.at(s));
    for (SymbolId s : r.rhs) {
      if (g.is_nonterminal(s)) {
        rhs.push_back(nt_map.at(s));
      } else {
        for (SymbolId x : t_map.at(s)) rhs.push_back(x);
      }
    }
    out.add_rule(r.label, std::move(lhs), std::move(rhs));
    res.provenance.add(r.label, r.label);
  }
  res.capacity = CapacityFunction::uniform(out, 1);
  return res;
}

// ---------------------------------------------------------------------------
// capacity-one vector grammar -> vector grammar of finite index 2|V|+1

struct VectorFinResult {
  RegulatedGrammar grammar;  // vector mode, no restriction
  Provenance provenance;
  std::uint32_t claimed_index_bound = 0;  // 2|V|+1
};

// Every rule r: A -> alpha becomes the locked chunk
//   mu(r) = (C -> C', s_0, ..., s_m, r, C' -> C)
// where s_i flips the presence tally B_i/B'_i of A_i when r removes or
// introduces it. Matrices whose rules repeat a nonterminal on the right are
// dead under capacity one and are dropped.
inline VectorFinResult vector_to_finite_index(const RegulatedGrammar& rg,
                                              const TransformLimits& lim = {}) {
  if (rg.mode != RegulationMode::vector)
    throw error("the finite-index construction expects a vector grammar");
  if (rg.restriction.kind != Restriction::Kind::capacity ||
      !rg.restriction.capacity.all_one(rg.base))
    throw error("the finite-index construction expects the all-ones capacity");

  // repetition-free matrices: duplicate a rule that occurs twice in one matrix
  Grammar src = rg.base;
  std::vector<Matrix> matrices = rg.matrices;
  for (Matrix& m : matrices) {
    std::unordered_set<std::uint32_t> seen;
    for (std::uint32_t& ri : m.rule_indices) {
      if (seen.insert(ri).second) continue;
      Rule copy = src.rules[ri];
      std::uint32_t n = 2;
      while (src.find_rule(copy.label + ".dup" + std::to_string(n))) ++n;
      copy.label += ".dup" + std::to_string(n);
      src.rules.push_back(copy);
      ri = static_cast<std::uint32_t>(src.rules.size() - 1);
    }
  }

  VectorFinResult res;
  Grammar& out = res.grammar.base;
  res.grammar.mode = RegulationMode::vector;
  res.grammar.restriction = Restriction::none();

  std::vector<SymbolId> order;  // A_0 = start, then declaration order
  order.push_back(src.start);
  for (SymbolId a : src.nonterminals)
    if (a != src.start) order.push_back(a);
  std::size_t m_count = order.size();
  res.claimed_index_bound = static_cast<std::uint32_t>(2 * m_count + 1);

  SymbolId s2 = out.add_nonterminal(fresh_name(out.symbols, "S'"));
  std::unordered_map<SymbolId, SymbolId> copy_nt;
  for (SymbolId a : src.nonterminals) copy_nt[a] = out.add_nonterminal(src.name(a));
  std::vector<SymbolId> b_plain, b_primed;
  for (std::size_t i = 0; i < m_count; ++i) {
    b_plain.push_back(out.add_nonterminal(fresh_name(out.symbols, "B" + std::to_string(i))));
    b_primed.push_back(out.add_nonterminal(fresh_name(out.symbols, "B" + std::to_string(i) + "'")));
  }
  SymbolId c_sym = out.add_nonterminal(fresh_name(out.symbols, "C"));
  SymbolId c_primed = out.add_nonterminal(fresh_name(out.symbols, "C'"));
  for (SymbolId a : src.terminals) out.add_terminal(src.name(a));
  out.start = s2;
  out.cf_flag = true;
  detail::check_symbol_budget(out.symbols.size(), lim);

  auto image = [&](const std::vector<SymbolId>& v) {
    std::vector<SymbolId> outv;
    for (SymbolId s : v)
      outv.push_back(src.is_nonterminal(s) ? copy_nt.at(s) : *out.symbols.find(src.name(s)));
    return outv;
  };

  auto label_fresh = [&](std::string base) {
    while (out.find_rule(base)) base += "'";
    return base;
  };

  // copies of the source rules keep their labels
  std::unordered_map<std::uint32_t, std::uint32_t> rule_copy;
  for (std::uint32_t i = 0; i < src.rules.size(); ++i) {
    const Rule& r = src.rules[i];
    rule_copy[i] = static_cast<std::uint32_t>(out.rules.size());
    out.add_rule(r.label, image(r.lhs), image(r.rhs));
    res.provenance.add(r.label, r.label);
  }
  std::uint32_t lock = static_cast<std::uint32_t>(out.rules.size());
  out.add_rule(label_fresh("lock"), {c_sym}, {c_primed});
  std::uint32_t unlock = static_cast<std::uint32_t>(out.rules.size());
  out.add_rule(label_fresh("unlock"), {c_primed}, {c_sym});
  std::vector<std::uint32_t> set_rule(m_count), clear_rule(m_count);
  for (std::size_t i = 0; i < m_count; ++i) {
    clear_rule[i] = static_cast<std::uint32_t>(out.rules.size());
    out.add_rule(label_fresh("clear." + src.name(order[i])), {b_plain[i]}, {b_primed[i]});
    set_rule[i] = static_cast<std::uint32_t>(out.rules.size());
    out.add_rule(label_fresh("set." + src.name(order[i])), {b_primed[i]}, {b_plain[i]});
  }

  // start matrix: S' -> A_0 B_0 B'_1 ... B'_m C
  {
    std::vector<SymbolId> rhs;
    rhs.push_back(copy_nt.at(src.start));
    rhs.push_back(b_plain[0]);
    for (std::size_t i = 1; i < m_count; ++i) rhs.push_back(b_primed[i]);
    rhs.push_back(c_sym);
    std::uint32_t ri = static_cast<std::uint32_t>(out.rules.size());
    out.add_rule(label_fresh("start"), {s2}, std::move(rhs));
    res.grammar.matrices.push_back(Matrix{"m.start", {ri}});
    res.provenance.add("m.start", "");
  }

  auto mu = [&](std::uint32_t src_rule) {
    std::vector<std::uint32_t> chunk;
    const Rule& r = src.rules[src_rule];
    chunk.push_back(lock);
    for (std::size_t i = 0; i < m_count; ++i) {
      SymbolId ai = order[i];
      std::uint32_t in_rhs = 0;
      for (SymbolId s : r.rhs)
        if (s == ai) ++in_rhs;
      if (r.lhs[0] == ai && in_rhs == 0)
        chunk.push_back(clear_rule[i]);
      else if (r.lhs[0] != ai && in_rhs == 1)
        chunk.push_back(set_rule[i]);
    }
    chunk.push_back(rule_copy.at(src_rule));
    chunk.push_back(unlock);
    return chunk;
  };

  for (const Matrix& m : matrices) {
    bool dead = false;
    for (std::uint32_t ri : m.rule_indices) {
      auto counts = detail::count_nonterminals(src, src.rules[ri].rhs);
      for (const auto& [a, c] : counts)
        if (c > 1) dead = true;
    }
    if (dead) {
      res.provenance.add(m.label, "(dropped: repeated nonterminal on a right side)");
      continue;
    }
    Matrix flat;
    flat.label = m.label;
    for (std::uint32_t ri : m.rule_indices) {
      auto chunk = mu(ri);
      flat.rule_indices.insert(flat.rule_indices.end(), chunk.begin(), chunk.end());
    }
    detail::check_rule_budget(out.rules.size() + flat.rule_indices.size(), lim);
    res.grammar.matrices.push_back(std::move(flat));
    res.provenance.add(m.label, m.label);
  }

  // finishing matrix: (C -> lambda, B'_0 -> lambda, ..., B'_m -> lambda)
  {
    Matrix fin;
    fin.label = "m.finish";
    std::uint32_t ri = static_cast<std::uint32_t>(out.rules.size());
    out.add_rule(label_fresh("fin.C"), {c_sym}, {});
    fin.rule_indices.push_back(ri);
    for (std::size_t i = 0; i < m_count; ++i) {
      std::uint32_t rj = static_cast<std::uint32_t>(out.rules.size());
      out.add_rule(label_fresh("fin.B" + std::to_string(i)), {b_primed[i]}, {});
      fin.rule_indices.push_back(rj);
    }
    res.grammar.matrices.push_back(std::move(fin));
    res.provenance.add("m.finish", "");
  }
  return res;
}

}  // namespace capgram
