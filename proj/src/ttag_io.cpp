#include "pairsim/ttag_io.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <queue>

#include "pairsim/error.hpp"

namespace pairsim {
namespace {

constexpr std::array<unsigned char, 4> kMagic{0x54, 0x54, 0x41, 0x47};
constexpr std::size_t kIoBlockRecords = 1 << 16;

template <typename T>
void put_le(unsigned char* dst, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    dst[i] = static_cast<unsigned char>(static_cast<std::uint64_t>(value) >> (8 * i));
  }
}

template <typename T>
T get_le(const unsigned char* src) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(src[i]) << (8 * i);
  return static_cast<T>(v);
}

bool record_less(const TtagRecord& a, const TtagRecord& b) {
  return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.channel < b.channel;
}

}  // namespace

TtagReader::TtagReader(const std::filesystem::path& path) {
  std::error_code ec;
  file_size_ = std::filesystem::file_size(path, ec);
  if (ec) throw Error(Errc::io_failure, "cannot stat " + path.string() + ": " + ec.message());
  in_.open(path, std::ios::binary);
  if (!in_) throw Error(Errc::io_failure, "cannot open " + path.string());

  std::array<unsigned char, kTtagHeaderSize> raw{};
  const auto got = static_cast<std::size_t>(
      in_.read(reinterpret_cast<char*>(raw.data()), raw.size()).gcount());
  if (got < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), raw.begin())) {
    throw Error(Errc::corrupt_header, "missing TTAG magic", 0);
  }
  if (got < kTtagHeaderSize) {
    throw Error(Errc::truncated_file, "header is shorter than 26 bytes", got);
  }
  header_.version = get_le<std::uint16_t>(raw.data() + 4);
  header_.resolution_ps = get_le<std::uint16_t>(raw.data() + 6);
  header_.channel_mask = get_le<std::uint16_t>(raw.data() + 8);
  header_.duration_ps = get_le<std::uint64_t>(raw.data() + 10);
  header_.record_count = get_le<std::uint64_t>(raw.data() + 18);

  if (header_.version != kTtagVersion) {
    throw Error(Errc::version_unsupported,
                "version " + std::to_string(header_.version) + " (expected 1)", 4);
  }
  if (header_.resolution_ps != 1) {
    throw Error(Errc::corrupt_header, "resolution must be 1 ps per tick", 6);
  }
  if (header_.duration_ps == 0 ||
      header_.duration_ps > static_cast<std::uint64_t>(INT64_MAX)) {
    throw Error(Errc::corrupt_header, "duration out of range", 10);
  }
  const std::uint64_t payload = file_size_ - kTtagHeaderSize;
  const std::uint64_t expected = header_.record_count * kTtagRecordSize;
  if (header_.record_count > payload / kTtagRecordSize + 1 || payload < expected) {
    throw Error(Errc::truncated_file,
                "header declares " + std::to_string(header_.record_count) + " records",
                file_size_);
  }
  if (payload > expected) {
    throw Error(Errc::corrupt_header, "trailing bytes after declared records",
                kTtagHeaderSize + expected);
  }
}

std::size_t TtagReader::read(std::vector<TtagRecord>& out, std::size_t max_records) {
  const auto n = static_cast<std::size_t>(
      std::min<std::uint64_t>(max_records, header_.record_count - read_));
  if (n == 0) return 0;
  buffer_.resize(n * kTtagRecordSize);
  in_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
  const auto got = static_cast<std::size_t>(in_.gcount());
  if (got != buffer_.size()) {
    throw Error(Errc::truncated_file, "file ended inside the record section",
                kTtagHeaderSize + read_ * kTtagRecordSize + got);
  }
  out.reserve(out.size() + n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* p = buffer_.data() + i * kTtagRecordSize;
    TtagRecord rec{ChannelId{p[0]}, get_le<std::uint64_t>(p + 1)};
    const std::uint64_t offset = kTtagHeaderSize + (read_ + i) * kTtagRecordSize;
    if (!header_.declares(rec.channel)) {
      throw Error(Errc::corrupt_header,
                  "record on undeclared channel " + std::to_string(rec.channel.value), offset);
    }
    if (rec.timestamp >= header_.duration_ps) {
      throw Error(Errc::corrupt_header, "record timestamp beyond declared duration", offset);
    }
    if (read_ + i > 0 && record_less(rec, last_)) {
      throw Error(Errc::unsorted_record, "record precedes its predecessor", offset);
    }
    last_ = rec;
    out.push_back(rec);
  }
  read_ += n;
  return n;
}

TtagWriter::TtagWriter(const std::filesystem::path& path, std::uint16_t channel_mask,
                       std::uint64_t duration_ps)
    : path_(path), mask_(channel_mask), duration_(duration_ps) {
  if (duration_ps == 0) throw Error(Errc::invariant_violation, "duration must be positive");
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(Errc::io_failure, "cannot create " + path.string());
  std::array<unsigned char, kTtagHeaderSize> raw{};
  std::copy(kMagic.begin(), kMagic.end(), raw.begin());
  put_le<std::uint16_t>(raw.data() + 4, kTtagVersion);
  put_le<std::uint16_t>(raw.data() + 6, 1);
  put_le<std::uint16_t>(raw.data() + 8, mask_);
  put_le<std::uint64_t>(raw.data() + 10, duration_);
  put_le<std::uint64_t>(raw.data() + 18, 0);
  out_.write(reinterpret_cast<const char*>(raw.data()), raw.size());
  if (!out_) throw Error(Errc::io_failure, "write failed on " + path.string());
  buffer_.reserve(kIoBlockRecords * kTtagRecordSize);
}

TtagWriter::~TtagWriter() {
  if (!closed_) {
    try {
      close();
    } catch (...) {
    }
  }
}

void TtagWriter::write(const TtagRecord& record) {
  if (!((mask_ >> record.channel.value) & 1u) || record.channel.value >= kTtagMaxChannels) {
    throw Error(Errc::invariant_violation,
                "record on undeclared channel " + std::to_string(record.channel.value));
  }
  if (record.timestamp >= duration_) {
    throw Error(Errc::invariant_violation, "record timestamp beyond duration");
  }
  if (count_ > 0 && record_less(record, last_)) {
    throw Error(Errc::invariant_violation, "records out of order");
  }
  last_ = record;
  unsigned char rec[kTtagRecordSize];
  rec[0] = record.channel.value;
  put_le<std::uint64_t>(rec + 1, record.timestamp);
  buffer_.insert(buffer_.end(), rec, rec + kTtagRecordSize);
  ++count_;
  if (buffer_.size() >= kIoBlockRecords * kTtagRecordSize) flush_buffer();
}

void TtagWriter::write(std::span<const TtagRecord> records) {
  for (const auto& r : records) write(r);
}

void TtagWriter::flush_buffer() {
  out_.write(reinterpret_cast<const char*>(buffer_.data()),
             static_cast<std::streamsize>(buffer_.size()));
  if (!out_) throw Error(Errc::io_failure, "write failed on " + path_.string());
  buffer_.clear();
}

void TtagWriter::close() {
  if (closed_) return;
  closed_ = true;
  flush_buffer();
  unsigned char count[8];
  put_le<std::uint64_t>(count, count_);
  out_.seekp(18);
  out_.write(reinterpret_cast<const char*>(count), sizeof count);
  out_.close();
  if (!out_) throw Error(Errc::io_failure, "finalizing " + path_.string() + " failed");
}

std::uint16_t channel_mask_of(const StreamSet& set) {
  std::uint16_t mask = 0;
  for (const auto& s : set.streams()) {
    if (s.channel().value >= kTtagMaxChannels) {
      throw Error(Errc::invariant_violation, "TTAG supports channel ids 0..15");
    }
    mask = static_cast<std::uint16_t>(mask | (1u << s.channel().value));
  }
  return mask;
}

std::vector<TtagRecord> interleave(const StreamSet& set) {
  struct Cursor {
    TimeTag t;
    ChannelId ch;
    std::size_t stream;
    std::size_t index;
  };
  auto later = [](const Cursor& a, const Cursor& b) {
    return a.t != b.t ? a.t > b.t : a.ch > b.ch;
  };
  std::priority_queue<Cursor, std::vector<Cursor>, decltype(later)> heap(later);
  const auto& streams = set.streams();
  for (std::size_t s = 0; s < streams.size(); ++s) {
    if (!streams[s].empty()) heap.push({streams[s].tags()[0], streams[s].channel(), s, 0});
  }
  std::vector<TtagRecord> out;
  out.reserve(set.total_tags());
  while (!heap.empty()) {
    Cursor c = heap.top();
    heap.pop();
    out.push_back({c.ch, c.t});
    const auto tags = streams[c.stream].tags();
    if (++c.index < tags.size()) {
      c.t = tags[c.index];
      heap.push(c);
    }
  }
  return out;
}

StreamSet read_ttag(const std::filesystem::path& path) {
  TtagReader reader(path);
  const auto& h = reader.header();
  std::vector<std::vector<TimeTag>> per_channel(kTtagMaxChannels);
  std::vector<TtagRecord> block;
  while (!reader.done()) {
    block.clear();
    reader.read(block, kIoBlockRecords);
    for (const auto& r : block) per_channel[r.channel.value].push_back(r.timestamp);
  }
  StreamSet set(static_cast<Picoseconds>(h.duration_ps));
  for (unsigned ch = 0; ch < kTtagMaxChannels; ++ch) {
    if (h.declares(ChannelId{static_cast<std::uint8_t>(ch)})) {
      set.add(TimeTagStream(ChannelId{static_cast<std::uint8_t>(ch)},
                            std::move(per_channel[ch]), set.duration_ps()));
    }
  }
  return set;
}

void write_ttag(const StreamSet& set, const std::filesystem::path& path) {
  TtagWriter writer(path, channel_mask_of(set), static_cast<std::uint64_t>(set.duration_ps()));
  writer.write(interleave(set));
  writer.close();
}

}  // namespace pairsim
