#include "wldecode/montage.hpp"

namespace wld {

std::string_view region_name(Region r) {
  switch (r) {
    case Region::frontal: return "frontal";
    case Region::central: return "central";
    case Region::temporal: return "temporal";
    case Region::parietal: return "parietal";
    case Region::occipital: return "occipital";
  }
  return "?";
}

int Montage::eeg_index(std::string_view name) const {
  for (std::size_t i = 0; i < eeg_channels.size(); ++i)
    if (eeg_channels[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<int> Montage::channels_in(Region r) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (regions[i] == r) out.push_back(static_cast<int>(i));
  return out;
}

namespace {

struct Entry {
  const char* name;
  double x, y;
  Region region;
};

// 10-20 layout flattened onto the unit disk (azimuthal projection), nose up.
constexpr Entry kChannels[30] = {
    {"Fp1", -0.25, 0.78, Region::frontal},
    {"Fp2", 0.25, 0.78, Region::frontal},
    {"F7", -0.66, 0.48, Region::frontal},
    {"F3", -0.39, 0.45, Region::frontal},
    {"Fz", 0.00, 0.45, Region::frontal},
    {"F4", 0.39, 0.45, Region::frontal},
    {"F8", 0.66, 0.48, Region::frontal},
    {"FC5", -0.57, 0.23, Region::central},
    {"FC1", -0.19, 0.22, Region::central},
    {"FC2", 0.19, 0.22, Region::central},
    {"FC6", 0.57, 0.23, Region::central},
    {"T7", -0.81, 0.00, Region::temporal},
    {"C3", -0.40, 0.00, Region::central},
    {"Cz", 0.00, 0.00, Region::central},
    {"C4", 0.40, 0.00, Region::central},
    {"T8", 0.81, 0.00, Region::temporal},
    {"CP5", -0.57, -0.23, Region::parietal},
    {"CP1", -0.19, -0.22, Region::parietal},
    {"CP2", 0.19, -0.22, Region::parietal},
    {"CP6", 0.57, -0.23, Region::parietal},
    {"P7", -0.66, -0.48, Region::parietal},
    {"P3", -0.39, -0.45, Region::parietal},
    {"Pz", 0.00, -0.45, Region::parietal},
    {"P4", 0.39, -0.45, Region::parietal},
    {"P8", 0.66, -0.48, Region::parietal},
    {"PO9", -0.55, -0.72, Region::occipital},
    {"O1", -0.25, -0.78, Region::occipital},
    {"Oz", 0.00, -0.81, Region::occipital},
    {"O2", 0.25, -0.78, Region::occipital},
    {"PO10", 0.55, -0.72, Region::occipital},
};

Montage build_standard() {
  Montage m;
  m.eeg_channels.reserve(30);
  m.positions.reserve(30);
  m.regions.reserve(30);
  for (const Entry& e : kChannels) {
    m.eeg_channels.emplace_back(e.name);
    m.positions.push_back({e.x, e.y});
    m.regions.push_back(e.region);
  }
  m.eog_channels = {"vEOG-up", "vEOG-down", "hEOG-left", "hEOG-right"};
  return m;
}

}  // namespace

const Montage& standard_montage() {
  static const Montage m = build_standard();
  return m;
}

}  // namespace wld
