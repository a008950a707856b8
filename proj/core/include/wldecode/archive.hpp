#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "wldecode/epochs.hpp"
#include "wldecode/session.hpp"

namespace wld {

// On-disk containers. Payloads are little-endian 32-bit floats (storage);
// everything upstream computes in 64-bit, converted exactly once at load.
// Manifests are line-oriented "key: value" text with a format-version
// field; unknown or duplicate fields are rejected rather than ignored.
//
// Session archive directory:
//   manifest.txt   format version, participant, rate, units, channel
//                  order, timeline events
//   eeg.f32le      time-major frames, all EEG channels per frame
//   eog.f32le      time-major frames, all EOG channels per frame
//
// Epoch archive directory:
//   manifest.txt   format version, participant, shape, preprocessing
//                  provenance
//   epochs.f32le   one row-major rows x cols block per epoch
//   labels.u8      one byte per epoch (0 NS, 1 LW, 2 HW)
//   trials.i32le   source trial per epoch, -1 when unknown

inline constexpr int kManifestVersion = 1;

void write_session_archive(const std::filesystem::path& dir, const RawSession& session);
RawSession read_session_archive(const std::filesystem::path& dir);

void write_epoch_archive(const std::filesystem::path& dir, const EpochSet& set);
EpochSet read_epoch_archive(const std::filesystem::path& dir);

// Whole-file helpers with the write-temp-then-rename contract.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_bytes_atomic(const std::filesystem::path& path, const void* bytes,
                        std::size_t count);
std::string read_text_file(const std::filesystem::path& path);

// Shortest decimal form that parses back to exactly the same double,
// so rewriting a parsed manifest reproduces its bytes.
std::string format_double(double value);
double parse_double(const std::string& text, const std::string& context);

}  // namespace wld
