#ifndef ENTROFUSE_TENSOR_IO_HPP
#define ENTROFUSE_TENSOR_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "entrofuse/types.hpp"

namespace entrofuse {

// PTEN probability tensor file layout:
//   bytes 0..4    ASCII "PTEN" + version byte 0x01
//   bytes 5..8    unsigned 32-bit little-endian header length L
//   bytes 9..9+L  UTF-8 JSON header:
//                   {"dtype":"f32","order":"row-major","shape":[K,M,H,W],
//                    "model_names":[...]}        (model_names optional)
//   remainder     exactly K*M*H*W raw little-endian 32-bit floats
inline constexpr char kPtenMagic[4] = {'P', 'T', 'E', 'N'};
inline constexpr unsigned char kPtenVersion = 0x01;

/// Reads and validates a probability stack. Throws MagicMismatch,
/// HeaderMalformed, PayloadTruncated, ProbabilityOutOfRange,
/// RowNotNormalized, or IoFailure.
ProbabilityStack read_stack(const std::filesystem::path& path);

/// Model names stored in the PTEN header, empty if the header had none.
std::vector<std::string> read_stack_model_names(
    const std::filesystem::path& path);

/// Writes a validated stack; read_stack(write_stack(s)) reproduces s
/// bit-for-bit. Optional model names are embedded in the header.
void write_stack(const ProbabilityStack& stack,
                 const std::filesystem::path& path,
                 const std::vector<std::string>& model_names = {});

/// Reads a binary PGM (P5, maxval 255) label mask; pixel byte = class index.
/// Throws NotP5 or IoFailure. Labels are checked against M at pairing time,
/// not here.
LabelMask read_mask(const std::filesystem::path& path);

/// Writes a mask as binary PGM (P5, maxval 255); round-trip identity.
void write_mask(const LabelMask& mask, const std::filesystem::path& path);

} // namespace entrofuse

#endif
