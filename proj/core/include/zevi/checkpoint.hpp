#pragma once

#include <string>

#include "zevi/flow.hpp"
#include "zevi/latent.hpp"

namespace zevi {

struct Checkpoint {
  FlowModel flow;
  LatentModel latent;
};

// Versioned plain-text model file. All floats are written as shortest
// round-trip decimals, so save -> load reproduces model outputs
// bit-identically. Layout (whitespace-separated tokens):
//
//   zevi-checkpoint 1
//   dim <n>
//   coupling_layers <L>
//   mu <mu>
//   layer <k>
//     mask <n ints>
//     net scale|translate
//       layers <m>
//       dense <in> <out> <none|leaky_relu|tanh> [<slope>]
//       weights <in*out floats>   bias <out floats>
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace zevi
