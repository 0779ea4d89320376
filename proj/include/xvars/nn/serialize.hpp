#pragma once

#include <filesystem>
#include <string>

#include "xvars/autograd/tape.hpp"

namespace xvars::nn {

// Weight blob layout (little-endian):
//   "XVW1" | u32 count | count x { u32 name_len | name | u32 rows | u32 cols | f64[rows*cols] row-major }
// Documented in docs/checkpoint_format.md.

std::string serialize_parameters(const ConstParameterList& params);
/// Writes the blob and returns its digest.
std::string save_parameters(const std::filesystem::path& path, const ConstParameterList& params);
/// Loads by name; every parameter in `params` must be present with the same shape.
void load_parameters(const std::filesystem::path& path, const ParameterList& params);
/// Digest of the serialized bytes; equal digests mean byte-identical weights.
std::string parameter_digest(const ConstParameterList& params);
long long parameter_count(const ConstParameterList& params);

}  // namespace xvars::nn
