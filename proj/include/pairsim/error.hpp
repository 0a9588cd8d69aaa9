#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pairsim {

/// Error categories surfaced by every module.
enum class Errc {
  corrupt_header,
  version_unsupported,
  unsorted_record,
  truncated_file,
  io_failure,
  invariant_violation,
  duration_mismatch,
  invalid_range,
  empty_stream,
  no_coincidences,
  flat_curve,
  nonpositive_input,
  zero_trigger,
  grid_too_coarse,
  invalid_threshold,
  target_exceeds_source,
  schema_violation,
  missing_channel,
  unknown_formula,
  bad_args,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  /// Error tied to a byte position in an input file.
  Error(Errc code, const std::string& what, std::uint64_t byte_offset);

  Errc code() const noexcept { return code_; }
  std::optional<std::uint64_t> byte_offset() const noexcept { return offset_; }

 private:
  Errc code_;
  std::optional<std::uint64_t> offset_;
};

}  // namespace pairsim
