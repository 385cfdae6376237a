#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "wmt/key_value.hpp"
#include "wmt/model.hpp"

namespace wmt {

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
    /// Free-form metadata (epoch, training config, ...).
    KeyValueConfig metadata;
};

/// Versioned text format. Values are written as C hexfloats so a
/// save/load round trip is bit-exact:
///
///   wmt-checkpoint 1
///   config <n>        followed by n key=value lines
///   metadata <n>      followed by n key=value lines
///   param <name> <rank> <dims...>
///   <values, whitespace separated>
///   end
void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in, std::string_view origin = "<stream>");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws InputError on a malformed file, an unknown version, or parameters
/// that do not match the stored config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wmt
