#include "pairsim/timetag.hpp"

#include <algorithm>
#include <iterator>

#include "pairsim/error.hpp"

namespace pairsim {

bool is_sorted_tags(std::span<const TimeTag> tags) {
  return std::is_sorted(tags.begin(), tags.end());
}

TimeTagStream::TimeTagStream(ChannelId channel, std::vector<TimeTag> tags,
                             Picoseconds duration_ps)
    : channel_(channel), tags_(std::move(tags)), duration_ps_(duration_ps) {
  if (duration_ps_ <= 0) {
    throw Error(Errc::invariant_violation, "stream duration must be positive");
  }
  if (!is_sorted_tags(tags_)) {
    throw Error(Errc::invariant_violation,
                "tags of channel " + std::to_string(channel.value) + " are not sorted");
  }
  if (!tags_.empty() && tags_.back() >= static_cast<TimeTag>(duration_ps_)) {
    throw Error(Errc::invariant_violation,
                "tag " + std::to_string(tags_.back()) + " not below duration " +
                    std::to_string(duration_ps_));
  }
}

TimeTagStream::TimeTagStream(ChannelId channel, Picoseconds duration_ps)
    : TimeTagStream(channel, {}, duration_ps) {}

TimeTagStream TimeTagStream::relabel(ChannelId channel) const {
  TimeTagStream out = *this;
  out.channel_ = channel;
  return out;
}

StreamSet::StreamSet(Picoseconds duration_ps) : duration_ps_(duration_ps) {
  if (duration_ps <= 0) {
    throw Error(Errc::invariant_violation, "stream set duration must be positive");
  }
}

void StreamSet::add(TimeTagStream stream) {
  if (stream.duration_ps() != duration_ps_) {
    throw Error(Errc::duration_mismatch, "stream duration " +
                                             std::to_string(stream.duration_ps()) +
                                             " != set duration " + std::to_string(duration_ps_));
  }
  auto pos = std::lower_bound(
      streams_.begin(), streams_.end(), stream.channel(),
      [](const TimeTagStream& s, ChannelId id) { return s.channel() < id; });
  if (pos != streams_.end() && pos->channel() == stream.channel()) {
    throw Error(Errc::invariant_violation,
                "duplicate channel " + std::to_string(stream.channel().value));
  }
  streams_.insert(pos, std::move(stream));
}

bool StreamSet::has(ChannelId id) const {
  return std::any_of(streams_.begin(), streams_.end(),
                     [id](const TimeTagStream& s) { return s.channel() == id; });
}

const TimeTagStream& StreamSet::at(ChannelId id) const {
  for (const auto& s : streams_) {
    if (s.channel() == id) return s;
  }
  throw Error(Errc::missing_channel, "channel " + std::to_string(id.value) + " not present");
}

std::size_t StreamSet::total_tags() const {
  std::size_t n = 0;
  for (const auto& s : streams_) n += s.size();
  return n;
}

BernoulliRouter::BernoulliRouter(double p, std::uint64_t seed)
    : p_(p), rng_(make_rng(seed, 0x4842u)) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(Errc::bad_args, "split probability must lie in [0, 1]");
  }
}

bool BernoulliRouter::next() { return uniform01(rng_) < p_; }

std::pair<TimeTagStream, TimeTagStream> split_hbt(const TimeTagStream& stream, double p,
                                                  std::uint64_t seed) {
  BernoulliRouter router(p, seed);
  std::vector<TimeTag> a;
  std::vector<TimeTag> b;
  a.reserve(static_cast<std::size_t>(p * static_cast<double>(stream.size())) + 16);
  b.reserve(stream.size() - std::min(stream.size(), a.capacity()) + 16);
  for (TimeTag t : stream.tags()) {
    (router.next() ? a : b).push_back(t);
  }
  return {TimeTagStream(stream.channel(), std::move(a), stream.duration_ps()),
          TimeTagStream(stream.channel(), std::move(b), stream.duration_ps())};
}

TimeTagStream merge(std::span<const TimeTagStream> streams) {
  if (streams.empty()) {
    throw Error(Errc::bad_args, "merge needs at least one stream");
  }
  const Picoseconds duration = streams.front().duration_ps();
  std::size_t total = 0;
  for (const auto& s : streams) {
    if (s.duration_ps() != duration) {
      throw Error(Errc::duration_mismatch, "merge of streams with different durations");
    }
    total += s.size();
  }
  std::vector<TimeTag> out(streams.front().tags().begin(), streams.front().tags().end());
  out.reserve(total);
  std::vector<TimeTag> scratch;
  for (std::size_t i = 1; i < streams.size(); ++i) {
    auto tags = streams[i].tags();
    scratch.clear();
    scratch.reserve(out.size() + tags.size());
    // std::merge is stable: on ties, elements of the earlier input come first.
    std::merge(out.begin(), out.end(), tags.begin(), tags.end(), std::back_inserter(scratch));
    out.swap(scratch);
  }
  return TimeTagStream(streams.front().channel(), std::move(out), duration);
}

double count_rate(const TimeTagStream& stream) {
  return static_cast<double>(stream.size()) /
         (static_cast<double>(stream.duration_ps()) / kPsPerSecond);
}

}  // namespace pairsim
