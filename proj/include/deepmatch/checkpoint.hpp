#pragma once

#include <string>

#include "deepmatch/model.hpp"

namespace deepmatch {

/// Binary checkpoint layout (all integers little-endian):
///   magic "DMCP" | u32 version (1) | u64 config length | config JSON bytes |
///   for each parameter block, then each running-stat block, in
///   DeepModel::param_blocks() / state_blocks() order:
///     u64 count | count x f64 |
///   magic "DMND"
/// A round trip reproduces the config, every parameter, and every running
/// statistic bit-exactly.
void save_checkpoint(DeepModel& model, const std::string& path);
DeepModel load_checkpoint(const std::string& path);

}  // namespace deepmatch
