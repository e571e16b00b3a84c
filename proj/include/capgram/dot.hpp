#pragma once
// DOT rendering of place/transition nets: places as circles with marking and
// capacity annotations, transitions as boxes, arc weights as edge labels.
// Node emission is sorted so output is byte-stable for a fixed input.

#include <sstream>

#include "capgram/cfnet.hpp"

namespace capgram {

namespace detail {
inline std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}
}  // namespace detail

inline std::string export_dot(const PetriNet& n, const Marking* marking = nullptr,
                              const CapacityAssignment* caps = nullptr) {
  std::ostringstream os;
  os << "digraph petri {\n";
  os << "  rankdir=LR;\n";

  std::vector<PlaceId> ps(n.places.size());
  for (PlaceId i = 0; i < ps.size(); ++i) ps[i] = i;
  std::sort(ps.begin(), ps.end(),
            [&](PlaceId a, PlaceId b) { return n.places[a] < n.places[b]; });
  for (PlaceId p : ps) {
    std::string label = n.places[p];
    if (marking && (*marking)[p] > 0) label += "\\nm=" + std::to_string((*marking)[p]);
    if (caps && caps->at(p) != kUnbounded) label += "\\ncap=" + std::to_string(caps->at(p));
    os << "  " << detail::dot_quote(n.places[p]) << " [shape=circle, label="
       << detail::dot_quote(label) << "];\n";
  }

  std::vector<TransitionId> ts(n.transitions.size());
  for (TransitionId i = 0; i < ts.size(); ++i) ts[i] = i;
  std::sort(ts.begin(), ts.end(),
            [&](TransitionId a, TransitionId b) { return n.transitions[a] < n.transitions[b]; });
  for (TransitionId t : ts)
    os << "  " << detail::dot_quote(n.transitions[t]) << " [shape=box];\n";

  std::vector<std::pair<std::pair<std::string, std::string>, std::uint32_t>> edges;
  for (TransitionId t = 0; t < n.transitions.size(); ++t) {
    for (const auto& [p, w] : n.pre[t]) edges.push_back({{n.places[p], n.transitions[t]}, w});
    for (const auto& [p, w] : n.post[t]) edges.push_back({{n.transitions[t], n.places[p]}, w});
  }
  std::sort(edges.begin(), edges.end());
  for (const auto& [e, w] : edges) {
    os << "  " << detail::dot_quote(e.first) << " -> " << detail::dot_quote(e.second);
    if (w != 1) os << " [label=\"" << w << "\"]";
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

inline std::string export_dot(const CfNet& cn, const CapacityAssignment* caps = nullptr) {
  return export_dot(cn.net, &cn.initial, caps);
}

inline std::string export_dot(const ExtendedNet& xn,
                              const std::optional<CapacityMode>& cm = std::nullopt) {
  if (cm) {
    CapacityAssignment caps = place_caps_for(xn, *cm);
    return export_dot(xn.net, &xn.initial, &caps);
  }
  return export_dot(xn.net, &xn.initial, nullptr);
}

}  // namespace capgram
