#include "pairsim/error.hpp"

namespace pairsim {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::corrupt_header: return "corrupt-header";
    case Errc::version_unsupported: return "version-unsupported";
    case Errc::unsorted_record: return "unsorted-record";
    case Errc::truncated_file: return "truncated-file";
    case Errc::io_failure: return "io-failure";
    case Errc::invariant_violation: return "invariant-violation";
    case Errc::duration_mismatch: return "duration-mismatch";
    case Errc::invalid_range: return "invalid-range";
    case Errc::empty_stream: return "empty-stream";
    case Errc::no_coincidences: return "no-coincidences";
    case Errc::flat_curve: return "flat-curve";
    case Errc::nonpositive_input: return "nonpositive-input";
    case Errc::zero_trigger: return "zero-trigger";
    case Errc::grid_too_coarse: return "grid-too-coarse";
    case Errc::invalid_threshold: return "invalid-threshold";
    case Errc::target_exceeds_source: return "target-exceeds-source";
    case Errc::schema_violation: return "schema-violation";
    case Errc::missing_channel: return "missing-channel";
    case Errc::unknown_formula: return "unknown-formula";
    case Errc::bad_args: return "bad-args";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

Error::Error(Errc code, const std::string& what, std::uint64_t byte_offset)
    : std::runtime_error(std::string(to_string(code)) + " at byte " +
                         std::to_string(byte_offset) + ": " + what),
      code_(code),
      offset_(byte_offset) {}

}  // namespace pairsim
