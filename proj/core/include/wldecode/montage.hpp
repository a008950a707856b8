#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wld {

enum class Region { frontal, central, temporal, parietal, occipital };

std::string_view region_name(Region r);

// 2-D scalp coordinates on the unit disk, nose at +y.
struct ChannelPos {
  double x = 0.0;
  double y = 0.0;
};

struct Montage {
  std::vector<std::string> eeg_channels;  // 30 scalp electrodes
  std::vector<std::string> eog_channels;  // 4 ocular electrodes
  std::vector<ChannelPos> positions;      // one per EEG channel
  std::vector<Region> regions;            // one per EEG channel

  int eeg_index(std::string_view name) const;  // -1 if absent
  std::vector<int> channels_in(Region r) const;
};

// The fixed 30-channel recording montage.  Pure constant.
const Montage& standard_montage();

}  // namespace wld
