// Command-line front end: grammar validation, fragment enumeration,
// membership, transformations, fragment equality, index checking, and net
// building/replay/reachability/DOT export.
//
// Exit codes: 0 success, 1 domain error (bad input, failed replay),
// 2 usage error.

#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "capgram/cfnet.hpp"
#include "capgram/dot.hpp"
#include "capgram/textio.hpp"
#include "capgram/transforms.hpp"

namespace {

using namespace capgram;

struct RunConfig {
  std::uint32_t max_len = 10;
  std::uint32_t max_form_len = 0;  // 0: derived
  std::uint64_t max_states = 2'000'000;
  std::uint32_t max_open = 8;
  std::uint32_t semi_streams = 1;
  std::string out_path;

  SearchBudget budget() const {
    SearchBudget b;
    b.max_terminal_len = max_len;
    b.max_form_len = max_form_len;
    b.max_states = max_states;
    return b;
  }
  RegulatedOptions regulated() const { return RegulatedOptions{max_open, semi_streams}; }
};

void add_common(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--max-len", cfg.max_len, "terminal length cutoff");
  cmd->add_option("--max-form-len", cfg.max_form_len, "sentential form length cutoff");
  cmd->add_option("--max-states", cfg.max_states, "explored state cutoff");
  cmd->add_option("--max-open", cfg.max_open, "vector mode: concurrently open matrices");
  cmd->add_option("--semi-streams", cfg.semi_streams, "semi-matrix mode: streams per matrix");
  cmd->add_option("--out", cfg.out_path, "write output to a file instead of stdout");
}

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.out_path.empty())
    std::cout << text;
  else
    write_file(cfg.out_path, text);
}

// capacity overrides: --cap-all K, --cap A=K (repeatable)
struct CapOverride {
  std::optional<std::uint32_t> all;
  std::vector<std::string> entries;

  CapacityFunction apply(const Grammar& g, const CapacityFunction& from_file) const {
    CapacityFunction k = from_file;
    if (all) k = CapacityFunction::uniform(g, *all);
    for (const std::string& e : entries) {
      std::size_t eq = e.find('=');
      if (eq == std::string::npos) throw error("--cap expects NAME=BOUND, got " + e);
      std::string name = e.substr(0, eq), val = e.substr(eq + 1);
      auto id = g.symbols.find(name);
      if (!id || !g.is_nonterminal(*id)) throw error("--cap names unknown nonterminal " + name);
      if (val == "*") continue;
      k.set(*id, static_cast<std::uint32_t>(std::stoul(val)));
    }
    return k;
  }
};

void add_caps(CLI::App* cmd, CapOverride& ov) {
  cmd->add_option("--cap-all", ov.all, "override: constant capacity for every nonterminal");
  cmd->add_option("--cap", ov.entries, "override: capacity entry NAME=BOUND");
}

std::vector<std::vector<std::uint32_t>> resolve_partition(const Grammar& g,
                                                          const std::string& path) {
  if (path.empty()) throw error("this net kind needs --partition FILE");
  auto classes = parse_partition_file(path);
  std::vector<std::vector<std::uint32_t>> out;
  for (const auto& [name, labels] : classes) {
    std::vector<std::uint32_t> cls;
    for (const std::string& l : labels) {
      auto ri = g.rule_index(l);
      if (!ri) throw error("partition class " + name + " names unknown rule " + l);
      cls.push_back(static_cast<std::uint32_t>(*ri));
    }
    out.push_back(std::move(cls));
  }
  return out;
}

ExtensionKind parse_kind(const std::string& kind) {
  if (kind == "h") return ExtensionKind::chains;
  if (kind == "c") return ExtensionKind::cycles;
  if (kind == "s") return ExtensionKind::shared_cycles;
  throw error("net kind must be cf, h, c or s");
}

std::string words_listing(const Grammar& g, const std::vector<Word>& words, bool exhaustive) {
  std::string out = "# exhaustive: ";
  out += exhaustive ? "true" : "false";
  out += "\n";
  for (const Word& w : words) {
    out += word_to_string(g, w);
    out += "\n";
  }
  return out;
}

// words as terminal-name sequences, comparable across grammars
std::vector<std::vector<std::string>> name_words(const Grammar& g,
                                                 const std::vector<Word>& ws) {
  std::vector<std::vector<std::string>> out;
  out.reserve(ws.size());
  for (const Word& w : ws) {
    std::vector<std::string> v;
    v.reserve(w.size());
    for (SymbolId s : w) v.push_back(g.name(s));
    out.push_back(std::move(v));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return out;
}

std::string join_word(const std::vector<std::string>& w) {
  if (w.empty()) return "(empty)";
  bool compact = true;
  for (const std::string& s : w) compact &= s.size() == 1;
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i && !compact) out += ' ';
    out += w[i];
  }
  return out;
}

struct FragmentResult {
  std::vector<std::vector<std::string>> words;
  bool exhaustive = false;
};

FragmentResult enumerate_file(const std::string& path, const RunConfig& cfg,
                              const CapOverride& caps) {
  ParsedGrammarFile pf = parse_grammar_file(path);
  FragmentResult out;
  if (pf.regulated) {
    RegulatedGrammar rg = *pf.regulated;
    if (caps.all || !caps.entries.empty())
      rg.restriction = Restriction::with_capacity(caps.apply(rg.base, pf.capacity));
    RegulatedEnumerationResult r = enumerate_regulated(rg, cfg.budget(), cfg.regulated());
    out.words = name_words(rg.base, r.word_list());
    out.exhaustive = r.exhaustive;
  } else {
    CapacityFunction k = caps.apply(pf.grammar, pf.capacity);
    EnumerationResult r = enumerate_language(pf.grammar, k, cfg.budget());
    out.words = name_words(pf.grammar, r.word_list());
    out.exhaustive = r.exhaustive;
  }
  return out;
}

int cmd_validate(const std::string& path) {
  std::string text = read_file(path);
  try {
    parse_grammar_text(text);
  } catch (const error& e) {
    std::cout << e.what() << "\n";
    return 1;
  }
  std::cout << "ok\n";
  return 0;
}

int cmd_enumerate(const std::string& path, const RunConfig& cfg, const CapOverride& caps,
                  const std::string& filter, const std::string& control,
                  const std::string& partition_path, const std::string& capacity_mode,
                  std::uint32_t control_cap) {
  ParsedGrammarFile pf = parse_grammar_file(path);
  const Grammar& g = pf.regulated ? pf.regulated->base : pf.grammar;

  std::vector<Word> words;
  bool exhaustive = false;
  if (!control.empty()) {
    if (pf.regulated) throw error("net control applies to plain grammars");
    CapacityFunction k = caps.apply(g, pf.capacity);
    if (control == "cf") {
      CfNet cn = build_cf_net(g);
      std::optional<CapacityAssignment> pc;
      if (k.all_finite(g)) pc = attach_capacity(cn, g, k);
      ControlledResult r = enumerate_controlled(g, cn, pc ? &*pc : nullptr, cfg.budget());
      words = r.word_list();
      exhaustive = r.exhaustive;
    } else {
      ExtendedNet xn = build_extended_net(g, parse_kind(control),
                                          resolve_partition(g, partition_path));
      std::optional<CapacityMode> cm;
      if (k.all_finite(g)) {
        CapacityMode m;
        m.kind = capacity_mode == "strong" ? CapacityMode::Kind::strong
                                           : CapacityMode::Kind::weak;
        m.grammar_caps = k;
        m.control_cap = control_cap;
        cm = std::move(m);
      } else if (capacity_mode == "strong") {
        throw error("strong capacity needs finite bounds on every nonterminal");
      }
      ControlledResult r = enumerate_controlled(g, xn, cm, cfg.budget());
      words = r.word_list();
      exhaustive = r.exhaustive;
    }
  } else if (pf.regulated) {
    RegulatedGrammar rg = *pf.regulated;
    if (caps.all || !caps.entries.empty())
      rg.restriction = Restriction::with_capacity(caps.apply(rg.base, pf.capacity));
    RegulatedEnumerationResult r = enumerate_regulated(rg, cfg.budget(), cfg.regulated());
    words = r.word_list();
    exhaustive = r.exhaustive;
  } else {
    CapacityFunction k = caps.apply(g, pf.capacity);
    EnumerationResult r = enumerate_language(g, k, cfg.budget());
    words = r.word_list();
    exhaustive = r.exhaustive;
  }

  if (!filter.empty()) {
    SimplePattern p = SimplePattern::parse(filter);
    words = filter_pattern(g, words, p);
  }
  emit(cfg, words_listing(g, words, exhaustive));
  return 0;
}

int cmd_member(const std::string& path, const std::string& word_text, const RunConfig& cfg,
               const CapOverride& caps) {
  ParsedGrammarFile pf = parse_grammar_file(path);
  if (pf.regulated) throw error("membership applies to plain grammars");
  const Grammar& g = pf.grammar;
  Word w = parse_symbols(g, word_text);
  CapacityFunction k = caps.apply(g, pf.capacity);
  MembershipResult r = decide_membership(w, g, k, cfg.budget());
  std::string out;
  switch (r.verdict) {
    case Tri::yes: out = "yes\n"; break;
    case Tri::no: out = "no\n"; break;
    case Tri::unknown: out = "unknown\n"; break;
  }
  if (r.witness) {
    out += "derivation:";
    for (const DerivationStep& s : r.witness->steps)
      out += " " + s.rule_label + "@" + std::to_string(s.position);
    out += "\n";
    for (const SententialForm& f : r.witness->forms) out += "  " + form_to_string(g, f) + "\n";
  }
  emit(cfg, out);
  return 0;
}

int cmd_transform(const std::string& path, const std::string& to, const std::string& second,
                  const std::string& map_path, std::uint32_t k_value, const RunConfig& cfg) {
  ParsedGrammarFile pf = parse_grammar_file(path);
  std::string text;
  std::string prov;
  if (to == "cap1") {
    if (pf.regulated) throw error("cap1 applies to plain grammars");
    NormalizeResult r = normalize_capacity_to_one(pf.grammar, pf.capacity);
    text = print_grammar(r.grammar, &r.capacity);
    prov = r.provenance.text();
  } else if (to == "blockwise") {
    if (pf.regulated) throw error("blockwise applies to plain grammars");
    BlockwiseResult r = blockwise_closure(pf.grammar, pf.capacity);
    text = print_grammar(r.grammar, &r.capacity);
    prov = r.provenance.text();
  } else if (to == "mat-fin") {
    if (pf.regulated) throw error("mat-fin applies to plain grammars");
    MatrixFinResult r = to_finite_index_matrix_grammar(pf.grammar, pf.capacity);
    text = print_regulated(r.grammar);
    prov = r.provenance.text();
  } else if (to == "vec-fin") {
    if (!pf.regulated) throw error("vec-fin applies to vector grammars");
    VectorFinResult r = vector_to_finite_index(*pf.regulated);
    text = print_regulated(r.grammar);
    prov = r.provenance.text();
  } else if (to == "star") {
    if (pf.regulated) throw error("star applies to plain grammars");
    ClosureResult r = closure_star(pf.grammar, pf.capacity);
    text = print_grammar(r.grammar, &r.capacity);
    prov = r.provenance.text();
  } else if (to == "union" || to == "concat") {
    if (second.empty()) throw error(to + " needs a second grammar file");
    ParsedGrammarFile pf2 = parse_grammar_file(second);
    if (pf.regulated || pf2.regulated) throw error(to + " applies to plain grammars");
    ClosureResult r = to == "union"
                          ? closure_union(pf.grammar, pf.capacity, pf2.grammar, pf2.capacity)
                          : closure_concat(pf.grammar, pf.capacity, pf2.grammar, pf2.capacity);
    text = print_grammar(r.grammar, &r.capacity);
    prov = r.provenance.text();
  } else if (to == "hom") {
    if (pf.regulated) throw error("hom applies to plain grammars");
    if (map_path.empty()) throw error("hom needs --map FILE");
    ClosureResult r =
        apply_terminal_homomorphism(pf.grammar, pf.capacity, parse_symbol_map_file(map_path));
    text = print_grammar(r.grammar, &r.capacity);
    prov = r.provenance.text();
  } else {
    throw error("unknown transformation " + to);
  }
  (void)k_value;
  emit(cfg, text);
  if (!cfg.out_path.empty()) write_file(cfg.out_path + ".prov", prov);
  return 0;
}

int cmd_check_equal(const std::string& a, const std::string& b, const RunConfig& cfg,
                    const CapOverride& caps) {
  FragmentResult ra = enumerate_file(a, cfg, caps);
  FragmentResult rb = enumerate_file(b, cfg, caps);
  std::string out;
  if (!ra.exhaustive || !rb.exhaustive) {
    out = "inconclusive\n";
  } else if (ra.words == rb.words) {
    out = "equal\n";
  } else {
    out = "differs\n";
    int shown = 0;
    for (const auto& w : ra.words) {
      if (shown >= 3) break;
      if (std::find(rb.words.begin(), rb.words.end(), w) == rb.words.end()) {
        out += "only in A: " + join_word(w) + "\n";
        ++shown;
      }
    }
    for (const auto& w : rb.words) {
      if (shown >= 3) break;
      if (std::find(ra.words.begin(), ra.words.end(), w) == ra.words.end()) {
        out += "only in B: " + join_word(w) + "\n";
        ++shown;
      }
    }
  }
  emit(cfg, out);
  return 0;
}

int cmd_index_check(const std::string& path, std::uint32_t k, const RunConfig& cfg) {
  ParsedGrammarFile pf = parse_grammar_file(path);
  RegulatedGrammar rg;
  if (pf.regulated) {
    rg = *pf.regulated;
  } else {
    if (!pf.grammar.cf_flag) throw error("index-check needs a context-free grammar");
    rg = singleton_matrix_wrap(pf.grammar, pf.capacity_given
                                               ? Restriction::with_capacity(pf.capacity)
                                               : Restriction::none());
  }
  IndexCheckResult r = check_index_bound(rg, k, cfg.budget(), cfg.regulated());
  std::string out;
  if (!r.conclusive && r.ok)
    out = "inconclusive\n";
  else if (r.ok)
    out = "holds\n";
  else {
    out = "violated\n";
    out += "counterexample: " + word_to_string(rg.base, *r.counterexample) + "\n";
  }
  emit(cfg, out);
  return 0;
}

int cmd_net_build(const std::string& path, const std::string& kind,
                  const std::string& partition_path, const RunConfig& cfg,
                  const CapOverride& caps) {
  ParsedGrammarFile pf = parse_grammar_file(path);
  const Grammar& g = pf.regulated ? pf.regulated->base : pf.grammar;
  if (kind == "cf") {
    CfNet cn = build_cf_net(g);
    CapacityFunction k = caps.apply(g, pf.capacity);
    std::optional<CapacityAssignment> pc;
    if (k.all_finite(g)) pc = attach_capacity(cn, g, k);
    emit(cfg, print_net(cn.net, &cn.initial, pc ? &*pc : nullptr, nullptr));
    return 0;
  }
  ExtendedNet xn = build_extended_net(g, parse_kind(kind), resolve_partition(g, partition_path));
  emit(cfg, print_net(xn.net, &xn.initial, nullptr, &xn.final_marking));
  return 0;
}

int cmd_net_run(const std::string& path, const std::string& seq_text, const RunConfig& cfg) {
  ParsedNetFile nf = parse_net_file(path);
  std::vector<TransitionId> seq;
  {
    std::string cur;
    auto flush = [&]() {
      if (cur.empty()) return;
      auto t = nf.net.find_transition(cur);
      if (!t) throw error("unknown transition " + cur);
      seq.push_back(*t);
      cur.clear();
    };
    for (char c : seq_text) {
      if (c == ' ' || c == '\t' || c == ',')
        flush();
      else
        cur += c;
    }
    flush();
  }
  RunResult r = run_sequence(nf.net, nf.marking, seq, nf.caps_given ? &nf.caps : nullptr);
  if (!r.ok()) {
    std::string reason;
    switch (r.failure->reason) {
      case RunFailure::Reason::insufficient_input: reason = "insufficient input"; break;
      case RunFailure::Reason::capacity_overflow: reason = "capacity overflow"; break;
      case RunFailure::Reason::unknown_transition: reason = "unknown transition"; break;
    }
    std::cerr << "step " << r.failure->step << ": " << reason;
    if (!r.failure->detail.empty()) std::cerr << " (" << r.failure->detail << ")";
    std::cerr << "\n";
    return 1;
  }
  std::string out = "marking:";
  for (PlaceId p = 0; p < nf.net.places.size(); ++p)
    out += " " + nf.net.places[p] + "=" + std::to_string((*r.final)[p]);
  out += "\n";
  emit(cfg, out);
  return 0;
}

int cmd_net_reach(const std::string& path, std::uint64_t limit, const RunConfig& cfg) {
  ParsedNetFile nf = parse_net_file(path);
  ReachabilityResult r =
      reachability_set(nf.net, nf.marking, nf.caps_given ? &nf.caps : nullptr, limit);
  std::uint32_t max_tokens = 0;
  for (const Marking& m : r.markings)
    for (std::uint32_t v : m.tokens) max_tokens = std::max(max_tokens, v);
  std::string out = "markings: " + std::to_string(r.markings.size()) + "\n";
  out += std::string("exhaustive: ") + (r.exhaustive ? "true" : "false") + "\n";
  out += "max-tokens: " + std::to_string(max_tokens) + "\n";
  emit(cfg, out);
  return 0;
}

int cmd_net_export(const std::string& path, const RunConfig& cfg) {
  ParsedNetFile nf = parse_net_file(path);
  emit(cfg, export_dot(nf.net, &nf.marking, nf.caps_given ? &nf.caps : nullptr));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capacity-bounded grammar and Petri net toolkit"};
  app.require_subcommand(1);

  RunConfig cfg;
  if (const char* env = std::getenv("CAPGRAM_MAX_STATES")) cfg.max_states = std::strtoull(env, nullptr, 10);
  CapOverride caps;
  std::string path, second, word_text, filter, to, map_path, control, partition_path;
  std::string capacity_mode = "weak", kind = "cf", seq_text;
  std::uint32_t k_value = 1, control_cap = 1;
  std::uint64_t reach_limit = 1'000'000;

  CLI::App* validate = app.add_subcommand("validate", "check a grammar file");
  validate->add_option("file", path)->required();

  CLI::App* enumerate = app.add_subcommand("enumerate", "list the language fragment");
  enumerate->add_option("file", path)->required();
  enumerate->add_option("--filter", filter, "simple pattern filter, e.g. a*ccb*a*cb*");
  enumerate->add_option("--control", control, "control by a net: cf, h, c or s");
  enumerate->add_option("--partition", partition_path, "transition partition file (h/c/s)");
  enumerate->add_option("--capacity-mode", capacity_mode, "weak or strong (extended nets)");
  enumerate->add_option("--control-cap", control_cap, "strong mode: capacity of control places");
  add_caps(enumerate, caps);
  add_common(enumerate, cfg);

  CLI::App* member = app.add_subcommand("member", "decide membership with a witness");
  member->add_option("file", path)->required();
  member->add_option("--word", word_text, "terminal word; (empty) or ~ for the empty word")
      ->required();
  add_caps(member, caps);
  add_common(member, cfg);

  CLI::App* transform = app.add_subcommand("transform", "emit a transformed grammar");
  transform->add_option("file", path)->required();
  transform->add_option("file2", second, "second input for union/concat");
  transform->add_option("--to", to, "cap1|blockwise|mat-fin|vec-fin|star|union|concat|hom")
      ->required();
  transform->add_option("--map", map_path, "terminal homomorphism map file");
  transform->add_option("--k", k_value, "reserved numeric parameter");
  add_common(transform, cfg);

  CLI::App* check = app.add_subcommand("check-equal", "compare two language fragments");
  check->add_option("fileA", path)->required();
  check->add_option("fileB", second)->required();
  add_caps(check, caps);
  add_common(check, cfg);

  CLI::App* index = app.add_subcommand("index-check", "check a derivation index bound");
  index->add_option("file", path)->required();
  index->add_option("--k", k_value, "index bound")->required();
  add_common(index, cfg);

  CLI::App* net = app.add_subcommand("net", "place/transition net commands");
  net->require_subcommand(1);
  CLI::App* nb = net->add_subcommand("build", "build a net from a grammar");
  nb->add_option("file", path)->required();
  nb->add_option("--kind", kind, "cf, h, c or s");
  nb->add_option("--partition", partition_path, "transition partition file (h/c/s)");
  add_caps(nb, caps);
  add_common(nb, cfg);
  CLI::App* nr = net->add_subcommand("run", "replay a transition sequence");
  nr->add_option("file", path)->required();
  nr->add_option("--seq", seq_text, "transition names, space separated")->required();
  add_common(nr, cfg);
  CLI::App* nreach = net->add_subcommand("reach", "reachability statistics");
  nreach->add_option("file", path)->required();
  nreach->add_option("--limit", reach_limit, "marking cutoff");
  add_common(nreach, cfg);
  CLI::App* nx = net->add_subcommand("export", "write DOT");
  nx->add_option("file", path)->required();
  add_common(nx, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) return cmd_validate(path);
    if (*enumerate)
      return cmd_enumerate(path, cfg, caps, filter, control, partition_path, capacity_mode,
                           control_cap);
    if (*member) return cmd_member(path, word_text, cfg, caps);
    if (*transform) return cmd_transform(path, to, second, map_path, k_value, cfg);
    if (*check) return cmd_check_equal(path, second, cfg, caps);
    if (*index) return cmd_index_check(path, k_value, cfg);
    if (*net) {
      if (*nb) return cmd_net_build(path, kind, partition_path, cfg, caps);
      if (*nr) return cmd_net_run(path, seq_text, cfg);
      if (*nreach) return cmd_net_reach(path, reach_limit, cfg);
      if (*nx) return cmd_net_export(path, cfg);
    }
  } catch (const capgram::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
