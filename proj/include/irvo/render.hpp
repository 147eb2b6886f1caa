#pragma once

#include <string>

#include "irvo/model.hpp"

namespace irvo {

struct RenderOptions {
  bool show_dashed = true;
  bool show_transducers = true;
  bool cluster_places = true;
};

// Deterministic DOT text: a real-world cluster and a virtual-world cluster
// with transducers between them, places as sub-clusters, merge nodes as
// junction dots. Structurally equal models yield identical bytes.
std::string to_dot(const Model& m, const RenderOptions& opts = {});

}  // namespace irvo
