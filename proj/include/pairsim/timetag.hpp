#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pairsim/random.hpp"

namespace pairsim {

/// Picoseconds since acquisition start.
using TimeTag = std::uint64_t;

/// Signed picosecond quantity (delays, offsets, histogram delays).
using Picoseconds = std::int64_t;

inline constexpr double kPsPerSecond = 1e12;

/// Detector channel. Conventional roles are listed in `channel`.
struct ChannelId {
  std::uint8_t value = 0;

  friend constexpr bool operator==(ChannelId, ChannelId) = default;
  friend constexpr auto operator<=>(ChannelId, ChannelId) = default;
};

namespace channel {
inline constexpr ChannelId stokes{0};
inline constexpr ChannelId anti_stokes{1};  // AS, or AS1 behind a splitter
inline constexpr ChannelId anti_stokes_2{2};
inline constexpr ChannelId stokes_2{3};  // second Stokes detector of an HBT pair
}  // namespace channel

/// Sorted detection times of one channel over an acquisition of known length.
/// Immutable once built.
class TimeTagStream {
 public:
  /// Throws invariant_violation unless tags are sorted and all < duration_ps.
  TimeTagStream(ChannelId channel, std::vector<TimeTag> tags, Picoseconds duration_ps);

  /// Empty stream.
  TimeTagStream(ChannelId channel, Picoseconds duration_ps);

  ChannelId channel() const noexcept { return channel_; }
  std::span<const TimeTag> tags() const noexcept { return tags_; }
  Picoseconds duration_ps() const noexcept { return duration_ps_; }
  std::size_t size() const noexcept { return tags_.size(); }
  bool empty() const noexcept { return tags_.empty(); }

  /// Same tags relabelled to another channel.
  TimeTagStream relabel(ChannelId channel) const;

  friend bool operator==(const TimeTagStream&, const TimeTagStream&) = default;

 private:
  ChannelId channel_;
  std::vector<TimeTag> tags_;
  Picoseconds duration_ps_;
};

/// Streams of one acquisition. All members share duration_ps; channel ids are unique.
class StreamSet {
 public:
  explicit StreamSet(Picoseconds duration_ps);

  Picoseconds duration_ps() const noexcept { return duration_ps_; }
  const std::vector<TimeTagStream>& streams() const noexcept { return streams_; }

  /// Adds a stream, keeping streams ordered by channel id. Throws
  /// duration_mismatch or invariant_violation (duplicate channel).
  void add(TimeTagStream stream);

  bool has(ChannelId id) const;
  /// Throws missing_channel.
  const TimeTagStream& at(ChannelId id) const;
  std::size_t total_tags() const;

  std::map<std::string, std::string>& metadata() noexcept { return metadata_; }
  const std::map<std::string, std::string>& metadata() const noexcept { return metadata_; }

 private:
  Picoseconds duration_ps_;
  std::vector<TimeTagStream> streams_;
  std::map<std::string, std::string> metadata_;
};

/// Stateful 50/50-style router: each call independently returns true with
/// probability p. Shared by split_hbt and the streaming analyzers.
class BernoulliRouter {
 public:
  BernoulliRouter(double p, std::uint64_t seed);
  bool next();

 private:
  double p_;
  Rng rng_;
};

/// Routes each tag independently to the first output with probability p,
/// otherwise to the second. Outputs keep the input channel id.
std::pair<TimeTagStream, TimeTagStream> split_hbt(const TimeTagStream& stream, double p,
                                                  std::uint64_t seed);

/// Sorted union of streams sharing a duration; ties keep input order.
/// The result takes the channel of the first stream.
TimeTagStream merge(std::span<const TimeTagStream> streams);

/// Detections per second.
double count_rate(const TimeTagStream& stream);

/// True if every consecutive pair is non-decreasing.
bool is_sorted_tags(std::span<const TimeTag> tags);

}  // namespace pairsim
