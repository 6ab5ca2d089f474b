#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "liftgeo/nn.hpp"

namespace liftgeo::nn {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedTensor {
  std::string name;
  Tensor<float> data;
};

/// Little-endian binary parameter file:
///
///   "LGN1" | u32 kind length | kind bytes | u32 entry count
///   per entry: u32 name length | name bytes | u32 rows | u32 cols | rows*cols f32
struct Checkpoint {
  std::string kind;
  std::vector<NamedTensor> entries;

  const NamedTensor* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<char>& bytes);

}  // namespace liftgeo::nn
