#include <algorithm>
#include <cmath>

#include "aftvo/aft.hpp"

namespace aftvo::aft {

void DiscretiserConfig::validate() const {
  if (step <= 0) throw std::invalid_argument("discretiser step must be positive");
  if (max_bins == 0) throw std::invalid_argument("discretiser needs at least one bin");
}

std::size_t discretise(Timestamp t, Timestamp window_min, const DiscretiserConfig& config) {
  config.validate();
  if (t < window_min) throw std::invalid_argument("timestamp precedes the window minimum");
  const auto bin = static_cast<std::size_t>((t - window_min) / config.step);
  if (bin >= config.max_bins)
    throw WindowTooLongError("bin " + std::to_string(bin) + " exceeds max_bins " + std::to_string(config.max_bins));
  return bin;
}

std::vector<std::size_t> discretise(std::span<const Timestamp> stamps, const DiscretiserConfig& config) {
  if (stamps.empty()) return {};
  const Timestamp lo = *std::min_element(stamps.begin(), stamps.end());
  std::vector<std::size_t> out;
  out.reserve(stamps.size());
  for (Timestamp t : stamps) out.push_back(discretise(t, lo, config));
  return out;
}

PositionalTable::PositionalTable(std::size_t max_bins, std::size_t width)
    : bins_(max_bins), width_(width), table_(max_bins * width) {
  if (max_bins == 0 || width == 0) throw std::invalid_argument("empty positional table");
  for (std::size_t d = 0; d < max_bins; ++d)
    for (std::size_t j = 0; j < width; ++j) {
      const double exponent = static_cast<double>(j - j % 2) / static_cast<double>(width);
      const double angle = static_cast<double>(d) / std::pow(10000.0, exponent);
      table_[d * width + j] = j % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
}

num::Tensor PositionalTable::rows(std::span<const std::size_t> bins) const {
  std::vector<double> out;
  out.reserve(bins.size() * width_);
  for (std::size_t d : bins) {
    if (d >= bins_) throw WindowTooLongError("positional bin " + std::to_string(d) + " out of range");
    out.insert(out.end(), table_.begin() + static_cast<std::ptrdiff_t>(d * width_),
               table_.begin() + static_cast<std::ptrdiff_t>((d + 1) * width_));
  }
  return num::Tensor({bins.size(), width_}, std::move(out));
}

num::Tensor PositionalTable::row(std::size_t bin) const {
  const std::size_t one[] = {bin};
  return rows(one);
}

Variant parse_variant(const std::string& tag) {
  if (tag == "full") return Variant::Full;
  if (tag == "no_discretiser_equidistant" || tag == "-D-Equi") return Variant::Equidistant;
  if (tag == "no_time" || tag == "-D-None") return Variant::NoTime;
  if (tag == "no_source" || tag == "-SE") return Variant::NoSource;
  throw std::invalid_argument("unknown variant tag '" + tag + "'");
}

std::string variant_tag(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::Equidistant: return "no_discretiser_equidistant";
    case Variant::NoTime: return "no_time";
    case Variant::NoSource: return "no_source";
  }
  return "full";
}

std::string variant_table_tag(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::Equidistant: return "-D-Equi";
    case Variant::NoTime: return "-D-None";
    case Variant::NoSource: return "-SE";
  }
  return "full";
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v = {Variant::Full, Variant::Equidistant, Variant::NoTime, Variant::NoSource};
  return v;
}

void canonicalise(std::vector<FusionItem>& items) {
  std::stable_sort(items.begin(), items.end(), [](const FusionItem& a, const FusionItem& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.source_id < b.source_id;
  });
}

Timestamp window_minimum(std::span<const FusionItem> items) {
  if (items.empty()) throw std::invalid_argument("empty fusion window");
  Timestamp lo = items.front().timestamp;
  for (const auto& it : items) lo = std::min(lo, it.timestamp);
  return lo;
}

}  // namespace aftvo::aft
