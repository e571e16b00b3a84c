#pragma once
// Place/transition nets: capacity-constrained firing, occurrence sequences,
// reachability and boundedness, chain/cycle path validation.

#include <deque>
#include <optional>

#include "capgram/core.hpp"

namespace capgram {

using PlaceId = std::uint32_t;
using TransitionId = std::uint32_t;

struct PetriNet {
  std::vector<std::string> places;
  std::vector<std::string> transitions;
  // weight function, stored sparsely per transition (absent arc = 0)
  std::vector<std::vector<std::pair<PlaceId, std::uint32_t>>> pre;   // consumed
  std::vector<std::vector<std::pair<PlaceId, std::uint32_t>>> post;  // produced

  PlaceId add_place(std::string name) {
    check_fresh(name);
    places.push_back(std::move(name));
    return static_cast<PlaceId>(places.size() - 1);
  }
  TransitionId add_transition(std::string name) {
    check_fresh(name);
    transitions.push_back(std::move(name));
    pre.emplace_back();
    post.emplace_back();
    return static_cast<TransitionId>(transitions.size() - 1);
  }
  void add_arc_pt(PlaceId p, TransitionId t, std::uint32_t w = 1) {
    if (w == 0) throw error("arc weight must be positive");
    for (auto& [q, v] : pre.at(t))
      if (q == p) throw error("duplicate arc " + places[p] + " -> " + transitions[t]);
    pre[t].emplace_back(p, w);
  }
  void add_arc_tp(TransitionId t, PlaceId p, std::uint32_t w = 1) {
    if (w == 0) throw error("arc weight must be positive");
    for (auto& [q, v] : post.at(t))
      if (q == p) throw error("duplicate arc " + transitions[t] + " -> " + places[p]);
    post[t].emplace_back(p, w);
  }
  std::uint32_t weight_pt(PlaceId p, TransitionId t) const {
    for (const auto& [q, w] : pre.at(t))
      if (q == p) return w;
    return 0;
  }
  std::uint32_t weight_tp(TransitionId t, PlaceId p) const {
    for (const auto& [q, w] : post.at(t))
      if (q == p) return w;
    return 0;
  }
  std::optional<PlaceId> find_place(std::string_view name) const {
    for (PlaceId i = 0; i < places.size(); ++i)
      if (places[i] == name) return i;
    return std::nullopt;
  }
  std::optional<TransitionId> find_transition(std::string_view name) const {
    for (TransitionId i = 0; i < transitions.size(); ++i)
      if (transitions[i] == name) return i;
    return std::nullopt;
  }

 private:
  // places and transitions live in one name space so text formats stay
  // unambiguous
  void check_fresh(const std::string& name) const {
    if (name.empty()) throw error("empty node name");
    for (const std::string& s : places)
      if (s == name) throw error("duplicate net node: " + name);
    for (const std::string& s : transitions)
      if (s == name) throw error("duplicate net node: " + name);
  }
};

struct Marking {
  std::vector<std::uint32_t> tokens;  // indexed by PlaceId

  static Marking zero(const PetriNet& n) {
    Marking m;
    m.tokens.assign(n.places.size(), 0);
    return m;
  }
  std::uint32_t operator[](PlaceId p) const { return tokens.at(p); }
  std::uint32_t& operator[](PlaceId p) { return tokens.at(p); }
  bool operator==(const Marking& o) const { return tokens == o.tokens; }
};

struct CapacityAssignment {
  std::vector<std::uint32_t> cap;  // kUnbounded where unconstrained

  static CapacityAssignment all_unbounded(const PetriNet& n) {
    CapacityAssignment c;
    c.cap.assign(n.places.size(), kUnbounded);
    return c;
  }
  static CapacityAssignment uniform(const PetriNet& n, std::uint32_t k) {
    if (k == 0) throw error("place capacity must be at least 1");
    CapacityAssignment c;
    c.cap.assign(n.places.size(), k);
    return c;
  }
  void set(PlaceId p, std::uint32_t k) {
    if (k == 0) throw error("place capacity must be at least 1");
    cap.at(p) = k;
  }
  std::uint32_t at(PlaceId p) const { return p < cap.size() ? cap[p] : kUnbounded; }
  bool valid(const Marking& m) const {
    for (std::size_t p = 0; p < m.tokens.size(); ++p)
      if (m.tokens[p] > at(static_cast<PlaceId>(p))) return false;
    return true;
  }
};

// mu(p) >= phi(p,t) for all p; with a capacity, the successor marking must
// additionally be valid
inline bool enabled(const PetriNet& n, const Marking& m, TransitionId t,
                    const CapacityAssignment* c = nullptr) {
  if (t >= n.transitions.size()) throw error("unknown transition");
  for (const auto& [p, w] : n.pre[t])
    if (m[p] < w) return false;
  if (c) {
    for (const auto& [p, w] : n.post[t]) {
      std::uint32_t into = m[p] - n.weight_pt(p, t) + w;
      if (into > c->at(p)) return false;
    }
  }
  return true;
}

// mu'(p) = mu(p) - phi(p,t) + phi(t,p)
inline Marking fire(const PetriNet& n, const Marking& m, TransitionId t) {
  if (!enabled(n, m, t)) throw error("transition " + n.transitions.at(t) + " is not enabled");
  Marking out = m;
  for (const auto& [p, w] : n.pre[t]) out[p] -= w;
  for (const auto& [p, w] : n.post[t]) out[p] += w;
  return out;
}

struct RunFailure {
  enum class Reason { insufficient_input, capacity_overflow, unknown_transition };
  std::size_t step = 0;  // 1-based
  Reason reason = Reason::insufficient_input;
  std::string detail;
};

struct RunResult {
  std::optional<Marking> final;
  std::optional<RunFailure> failure;
  bool ok() const { return final.has_value(); }
};

inline RunResult run_sequence(const PetriNet& n, const Marking& m0,
                              const std::vector<TransitionId>& seq,
                              const CapacityAssignment* c = nullptr) {
  RunResult out;
  Marking m = m0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    TransitionId t = seq[i];
    if (t >= n.transitions.size()) {
      out.failure = RunFailure{i + 1, RunFailure::Reason::unknown_transition, "no such transition"};
      return out;
    }
    if (!enabled(n, m, t)) {
      std::string detail;
      for (const auto& [p, w] : n.pre[t])
        if (m[p] < w) {
          detail = "insufficient input at place " + n.places[p];
          break;
        }
      out.failure =
          RunFailure{i + 1, RunFailure::Reason::insufficient_input, std::move(detail)};
      return out;
    }
    if (c && !enabled(n, m, t, c)) {
      std::string detail;
      for (const auto& [p, w] : n.post[t]) {
        std::uint32_t into = m[p] - n.weight_pt(p, t) + w;
        if (into > c->at(p)) {
          detail = "capacity exceeded at place " + n.places[p];
          break;
        }
      }
      out.failure = RunFailure{i + 1, RunFailure::Reason::capacity_overflow, std::move(detail)};
      return out;
    }
    m = fire(n, m, t);
  }
  out.final = std::move(m);
  return out;
}

struct ReachabilityResult {
  std::vector<Marking> markings;  // discovery (BFS) order
  bool exhaustive = false;
};

inline ReachabilityResult reachability_set(const PetriNet& n, const Marking& m0,
                                           const CapacityAssignment* c = nullptr,
                                           std::uint64_t limit = 1'000'000) {
  ReachabilityResult out;
  detail::KeyInterner seen;
  std::deque<std::uint32_t> queue;
  bool overflow = false;
  {
    auto [id, fresh] = seen.intern(std::vector<std::uint32_t>(m0.tokens));
    (void)fresh;
    queue.push_back(id);
  }
  while (!queue.empty() && !overflow) {
    std::uint32_t id = queue.front();
    queue.pop_front();
    Marking m;
    m.tokens = seen.key(id);
    for (TransitionId t = 0; t < n.transitions.size(); ++t) {
      if (!enabled(n, m, t, c)) continue;
      Marking next = fire(n, m, t);
      auto [nid, fresh] = seen.intern(std::move(next.tokens));
      if (!fresh) continue;
      if (seen.size() > limit) {
        overflow = true;
        break;
      }
      queue.push_back(nid);
    }
  }
  for (std::uint32_t i = 0; i < seen.size(); ++i) {
    Marking m;
    m.tokens = seen.key(i);
    out.markings.push_back(std::move(m));
  }
  out.exhaustive = queue.empty() && !overflow;
  return out;
}

struct BoundednessResult {
  Tri verdict = Tri::unknown;
  std::optional<Marking> witness;  // a reachable marking exceeding k
};

inline BoundednessResult is_k_bounded(const PetriNet& n, const Marking& m0, std::uint32_t k,
                                      std::uint64_t limit = 1'000'000) {
  BoundednessResult out;
  auto exceeds = [&](const Marking& m) {
    for (std::uint32_t v : m.tokens)
      if (v > k) return true;
    return false;
  };
  if (exceeds(m0)) {
    out.verdict = Tri::no;
    out.witness = m0;
    return out;
  }
  detail::KeyInterner seen;
  std::deque<std::uint32_t> queue;
  bool overflow = false;
  {
    auto [id, fresh] = seen.intern(std::vector<std::uint32_t>(m0.tokens));
    (void)fresh;
    queue.push_back(id);
  }
  while (!queue.empty() && !overflow) {
    std::uint32_t id = queue.front();
    queue.pop_front();
    Marking m;
    m.tokens = seen.key(id);
    for (TransitionId t = 0; t < n.transitions.size(); ++t) {
      if (!enabled(n, m, t)) continue;
      Marking next = fire(n, m, t);
      if (exceeds(next)) {
        out.verdict = Tri::no;
        out.witness = std::move(next);
        return out;
      }
      auto [nid, fresh] = seen.intern(std::move(next.tokens));
      if (!fresh) continue;
      if (seen.size() > limit) {
        overflow = true;
        break;
      }
      queue.push_back(nid);
    }
  }
  out.verdict = (queue.empty() && !overflow) ? Tri::yes : Tri::unknown;
  return out;
}

// Chains t p t p ... t and cycles p t p t ... p over existing arcs.
struct PathSpec {
  enum class Kind { chain, cycle };
  struct Node {
    bool is_place = false;
    std::uint32_t id = 0;
    bool operator==(const Node&) const = default;
  };
  Kind kind = Kind::chain;
  std::vector<Node> elements;

  std::vector<PlaceId> path_places() const {
    std::vector<PlaceId> out;
    for (const Node& e : elements)
      if (e.is_place) out.push_back(e.id);
    return out;
  }
  std::vector<TransitionId> path_transitions() const {
    std::vector<TransitionId> out;
    for (const Node& e : elements)
      if (!e.is_place) out.push_back(e.id);
    return out;
  }
};

// Structure, pairwise disjointness (all places shared only through `shared`
// when given) and coverage of the declared partition.
inline std::vector<std::string> validate_paths(
    const PetriNet& n, const std::vector<PathSpec>& specs,
    const std::vector<std::vector<TransitionId>>& partition = {},
    std::optional<PlaceId> shared = std::nullopt, bool allow_chain_endpoint_repeat = false) {
  std::vector<std::string> report;
  auto blame = [&](std::size_t i, const std::string& msg) {
    report.push_back("path " + std::to_string(i + 1) + ": " + msg);
  };

  for (std::size_t i = 0; i < specs.size(); ++i) {
    const PathSpec& sp = specs[i];
    const auto& el = sp.elements;
    if (el.empty()) {
      blame(i, "empty");
      continue;
    }
    // alternation and endpoints
    if (sp.kind == PathSpec::Kind::chain) {
      if (el.front().is_place || el.back().is_place)
        blame(i, "chain must start and end with transitions");
      if (el.size() % 2 == 0) blame(i, "chain must alternate transition/place");
    } else {
      if (!el.front().is_place || !el.back().is_place)
        blame(i, "cycle must start and end with a place");
      if (el.size() < 3 || el.size() % 2 == 0) blame(i, "cycle must alternate place/transition");
      if (!(el.front() == el.back())) blame(i, "cycle endpoints differ");
    }
    for (std::size_t j = 0; j + 1 < el.size(); ++j)
      if (el[j].is_place == el[j + 1].is_place) blame(i, "consecutive elements of one kind");
    // connectivity
    for (std::size_t j = 0; j + 1 < el.size(); ++j) {
      const auto& a = el[j];
      const auto& b = el[j + 1];
      std::uint32_t w = a.is_place ? n.weight_pt(a.id, b.id) : n.weight_tp(a.id, b.id);
      if (w == 0) blame(i, "missing arc between consecutive elements");
    }
    // repetitions: none, except the cycle closing on its first place
    std::size_t limit = sp.kind == PathSpec::Kind::cycle ? el.size() - 1 : el.size();
    for (std::size_t a = 0; a < limit; ++a)
      for (std::size_t b = a + 1; b < limit; ++b)
        if (el[a] == el[b]) blame(i, "repeated element");
    if (sp.kind == PathSpec::Kind::chain && el.size() > 1 && el.front() == el.back() &&
        !allow_chain_endpoint_repeat)
      blame(i, "chain endpoints coincide");
  }

  // pairwise disjointness
  for (std::size_t a = 0; a < specs.size(); ++a) {
    for (std::size_t b = a + 1; b < specs.size(); ++b) {
      auto ta = specs[a].path_transitions();
      auto tb = specs[b].path_transitions();
      for (TransitionId x : ta)
        for (TransitionId y : tb)
          if (x == y)
            report.push_back("paths " + std::to_string(a + 1) + " and " + std::to_string(b + 1) +
                             " share transition " + n.transitions[x]);
      auto pa = specs[a].path_places();
      auto pb = specs[b].path_places();
      for (PlaceId x : pa)
        for (PlaceId y : pb)
          if (x == y && !(shared && *shared == x))
            report.push_back("paths " + std::to_string(a + 1) + " and " + std::to_string(b + 1) +
                             " share place " + n.places[x]);
    }
  }
  if (shared) {
    for (std::size_t a = 0; a < specs.size(); ++a) {
      auto pa = specs[a].path_places();
      if (std::find(pa.begin(), pa.end(), *shared) == pa.end())
        report.push_back("path " + std::to_string(a + 1) + " misses the shared place");
    }
  }

  // coverage of the declared partition
  if (!partition.empty()) {
    if (partition.size() != specs.size()) {
      report.push_back("partition size differs from the number of paths");
    } else {
      for (std::size_t i = 0; i < specs.size(); ++i) {
        auto got = specs[i].path_transitions();
        std::vector<TransitionId> want = partition[i];
        std::sort(got.begin(), got.end());
        std::sort(want.begin(), want.end());
        if (got != want)
          report.push_back("path " + std::to_string(i + 1) +
                           " does not cover its partition class");
      }
    }
    std::vector<char> covered(n.transitions.size(), 0);
    for (const auto& cls : partition)
      for (TransitionId t : cls) {
        if (t >= covered.size() || covered[t])
          report.push_back("partition is not a partition of the transitions");
        else
          covered[t] = 1;
      }
    for (std::size_t t = 0; t < covered.size(); ++t)
      if (!covered[t])
        report.push_back("transition " + n.transitions[t] + " not covered by the partition");
  }
  return report;
}

}  // namespace capgram
