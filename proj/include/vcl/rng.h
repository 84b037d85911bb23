#ifndef VCL_RNG_H_
#define VCL_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace vcl {

using Rng = std::mt19937_64;

// Derives an independent engine for a named stream ("data", "init",
// "batching", "composition", ...) from one experiment seed, so consumers of
// one stream never shift the draws of another.
Rng MakeStream(uint64_t seed, std::string_view name);

}  // namespace vcl

#endif  // VCL_RNG_H_
