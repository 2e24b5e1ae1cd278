#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "aftvo/nn.hpp"
#include "json.hpp"

namespace aftvo::cli {

inline constexpr int kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;
};

/// Text header (version, step, config snapshot, array table) followed by the
/// arrays as raw little-endian 64-bit reals in table order.
struct Checkpoint {
  std::uint64_t step = 0;
  nlohmann::json config;
  nlohmann::json meta;  // free-form training state (phase, epochs done, ...)
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Appends every entry of the store (parameters and buffers).
void append_store(Checkpoint& ckpt, const num::ParameterStore& store);
/// Copies arrays into the store by name; every store entry must be present
/// with a matching shape.
void restore_store(const Checkpoint& ckpt, num::ParameterStore& store);

/// Adam moments under "optim/<prefix>/m/<name>" and ".../v/<name>".
void append_optimiser(Checkpoint& ckpt, const std::string& prefix, const num::Adam& adam);
void restore_optimiser(const Checkpoint& ckpt, const std::string& prefix, num::Adam& adam);

}  // namespace aftvo::cli
