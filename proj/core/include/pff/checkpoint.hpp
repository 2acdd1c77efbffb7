#pragma once

#include <optional>
#include <string>

#include "pff/net.hpp"
#include "pff/trainer.hpp"

namespace pff {

// Self-describing binary container: "PFFC" magic, version, the NetConfig as
// key=value text, then every tensor as {name, shape, f32 payload}. When a
// TrainState is given its step counter, rng words and ADAM moments are
// included, so training resumes exactly. Round trips are bit-exact.
void save_checkpoint(Network& net, const TrainState* state, const std::string& path);

struct LoadedCheckpoint {
    Network net;
    std::optional<TrainState> state;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace pff
