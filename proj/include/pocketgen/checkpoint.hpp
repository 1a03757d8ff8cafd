#ifndef POCKETGEN_CHECKPOINT_HPP_
#define POCKETGEN_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "pocketgen/error.hpp"
#include "pocketgen/trainer.hpp"

// Layout (all integers and floats little-endian):
//   "TDSBDD"                      6 bytes
//   version                       u32 (kCheckpointVersion)
//   d_model n_layers n_heads d_ff max_positions vocab_size   i64 x 6
//   d_t hidden diffusion_d_model  i64 x 3
//   T                             i64
//   beta_start beta_end coord_scale   f64 x 3
//   freeze_head                   u8
//   step                          i64
//   then six tensors, each as (u64 count, count x f64):
//     backbone params, head params, backbone m, backbone v, head m, head v
//   rng state                     u64 length + bytes
// Tensors inside the backbone and head blocks follow ParamTable order.
namespace pocketgen {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class VersionMismatch : public DataError {
 public:
  using DataError::DataError;
};

class CorruptFile : public DataError {
 public:
  CorruptFile(std::size_t offset, const std::string& what)
      : DataError("corrupt checkpoint at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

std::string encode_checkpoint(const TrainState& state);
TrainState decode_checkpoint(std::string_view bytes);

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace pocketgen

#endif  // POCKETGEN_CHECKPOINT_HPP_
