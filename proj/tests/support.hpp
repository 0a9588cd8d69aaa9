#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "pairsim/random.hpp"
#include "pairsim/timetag.hpp"

namespace testing {

inline pairsim::TimeTagStream uniform_stream(pairsim::ChannelId ch, std::size_t n,
                                             pairsim::Picoseconds duration, pairsim::Rng& rng) {
  std::vector<pairsim::TimeTag> tags(n);
  for (auto& t : tags) {
    t = static_cast<pairsim::TimeTag>(pairsim::uniform01(rng) * static_cast<double>(duration));
  }
  std::sort(tags.begin(), tags.end());
  return pairsim::TimeTagStream(ch, std::move(tags), duration);
}

/// Homogeneous Poisson arrivals at rate_hz over duration_ps.
inline pairsim::TimeTagStream poisson_stream(pairsim::ChannelId ch, double rate_hz,
                                             pairsim::Picoseconds duration, pairsim::Rng& rng) {
  std::vector<pairsim::TimeTag> tags;
  const double mean_gap = pairsim::kPsPerSecond / rate_hz;
  double t = mean_gap * pairsim::std_exponential(rng);
  while (t < static_cast<double>(duration)) {
    tags.push_back(static_cast<pairsim::TimeTag>(t));
    t += mean_gap * pairsim::std_exponential(rng);
  }
  return pairsim::TimeTagStream(ch, std::move(tags), duration);
}

inline std::vector<unsigned char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pairsim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
