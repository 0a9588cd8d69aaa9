#pragma once

// TTAG: little-endian binary detection-event file.
//
//   offset size  field
//   0      4     magic "TTAG"
//   4      2     version (1)
//   6      2     resolution, ps per tick (1)
//   8      2     channel mask, bit i set <=> channel i declared
//   10     8     duration_ps
//   18     8     record_count
//   26     9*n   records {channel u8, timestamp u64}, sorted by (timestamp, channel)

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "pairsim/timetag.hpp"

namespace pairsim {

inline constexpr std::size_t kTtagHeaderSize = 26;
inline constexpr std::size_t kTtagRecordSize = 9;
inline constexpr std::uint16_t kTtagVersion = 1;
inline constexpr unsigned kTtagMaxChannels = 16;

struct TtagHeader {
  std::uint16_t version = kTtagVersion;
  std::uint16_t resolution_ps = 1;
  std::uint16_t channel_mask = 0;
  std::uint64_t duration_ps = 0;
  std::uint64_t record_count = 0;

  bool declares(ChannelId id) const { return id.value < 16 && (channel_mask >> id.value) & 1u; }
};

struct TtagRecord {
  ChannelId channel;
  TimeTag timestamp = 0;

  friend bool operator==(const TtagRecord&, const TtagRecord&) = default;
};

/// Sequential validating reader. Every violation is reported with its byte offset.
class TtagReader {
 public:
  explicit TtagReader(const std::filesystem::path& path);

  const TtagHeader& header() const noexcept { return header_; }
  std::uint64_t records_read() const noexcept { return read_; }
  bool done() const noexcept { return read_ == header_.record_count; }

  /// Appends up to max_records to out; returns how many were read.
  std::size_t read(std::vector<TtagRecord>& out, std::size_t max_records);

 private:
  std::ifstream in_;
  std::uint64_t file_size_ = 0;
  TtagHeader header_;
  std::uint64_t read_ = 0;
  TtagRecord last_{};
  std::vector<unsigned char> buffer_;
};

/// Sequential writer; the record count is patched into the header by close().
class TtagWriter {
 public:
  TtagWriter(const std::filesystem::path& path, std::uint16_t channel_mask,
             std::uint64_t duration_ps);
  ~TtagWriter();
  TtagWriter(const TtagWriter&) = delete;
  TtagWriter& operator=(const TtagWriter&) = delete;

  /// Records must arrive in (timestamp, channel) order, on declared channels,
  /// below the duration; throws invariant_violation otherwise.
  void write(const TtagRecord& record);
  void write(std::span<const TtagRecord> records);
  void close();

  std::uint64_t records_written() const noexcept { return count_; }

 private:
  void flush_buffer();

  std::ofstream out_;
  std::filesystem::path path_;
  std::uint16_t mask_;
  std::uint64_t duration_;
  std::uint64_t count_ = 0;
  TtagRecord last_{};
  std::vector<unsigned char> buffer_;
  bool closed_ = false;
};

/// Channel mask declaring every stream of a set. Throws invariant_violation
/// for channel ids >= 16.
std::uint16_t channel_mask_of(const StreamSet& set);

StreamSet read_ttag(const std::filesystem::path& path);
void write_ttag(const StreamSet& set, const std::filesystem::path& path);

/// Merges a set's streams into (timestamp, channel) order.
std::vector<TtagRecord> interleave(const StreamSet& set);

}  // namespace pairsim
