#ifndef PRBT_DUMP_HPP
#define PRBT_DUMP_HPP

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "prbt/pipeline.hpp"

namespace prbt {

class DumpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A tube dump read back from disk.
struct TubeDump {
  PiecewiseTube prbt;
  ReachParams params;
};

/// JSON document with the model name, the parameters, every tube with its
/// boxes and certificates, and the guard events. Numbers are written in
/// shortest round-trip form, so load_dump(dump_json(...)) is exact.
std::string dump_json(const PiecewiseTube& prbt, const ReachParams& params);

/// Throws DumpError naming the offending field on malformed input.
TubeDump parse_dump(std::string_view text);
TubeDump load_dump(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace prbt

#endif  // PRBT_DUMP_HPP
