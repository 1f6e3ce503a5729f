#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "mixagg/model.hpp"

namespace mixagg {

/// Writes each hidden unit of the first mixer block's first affine layer as
/// an h x w binary graymap `neuron_<idx>.pgm`. Values are min-max scaled per
/// neuron to 0..255; a constant row maps to 0. `count` limits the number of
/// neurons (default: all mlp_ratio * n). Throws ContractError if L == 0,
/// IoError if the directory cannot be written.
std::vector<std::filesystem::path> export_first_layer_weights(
    const MixVprParams& params, const std::filesystem::path& out_dir,
    std::optional<std::size_t> count = std::nullopt);

}  // namespace mixagg
