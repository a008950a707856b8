#include "wldecode/archive.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>
#include <vector>

#include "wldecode/errors.hpp"
#include "wldecode/montage.hpp"

static_assert(std::endian::native == std::endian::little,
              "payloads are little-endian; big-endian hosts need byte swaps");

namespace wld {

namespace {

namespace fs = std::filesystem;

void rename_over(const fs::path& tmp, const fs::path& final_path) {
  std::error_code ec;
  fs::rename(tmp, final_path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + final_path.string() + ": " +
                  ec.message());
  }
}

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> bytes(static_cast<std::size_t>(size));
  if (size > 0) in.read(bytes.data(), size);
  if (!in) throw IoError("cannot read " + path.string());
  return bytes;
}

// float payload of rows x per_row values; dims names the layout in errors
std::vector<float> read_f32_payload(const fs::path& path, std::int64_t rows,
                                    std::int64_t per_row, const std::string& dims) {
  const std::vector<char> bytes = read_bytes(path);
  const std::int64_t expected = rows * per_row * 4;
  const auto found = static_cast<std::int64_t>(bytes.size());
  if (found != expected) {
    const char* kind = found < expected ? "payload truncated" : "trailing data";
    throw FormatError(path.filename().string() + ": expected " + std::to_string(expected) +
                      " bytes (" + dims + " x 4) but found " + std::to_string(found) +
                      " (" + kind + " at byte offset " +
                      std::to_string(std::min(found, expected)) + ")");
  }
  std::vector<float> values(static_cast<std::size_t>(rows * per_row));
  if (!values.empty()) std::memcpy(values.data(), bytes.data(), bytes.size());
  return values;
}

void write_f32_payload(const fs::path& path, const MatrixRM& data) {
  const std::int64_t channels = data.rows();
  const std::int64_t frames = data.cols();
  std::vector<float> values(static_cast<std::size_t>(channels * frames));
  for (std::int64_t t = 0; t < frames; ++t)
    for (std::int64_t c = 0; c < channels; ++c)
      values[static_cast<std::size_t>(t * channels + c)] =
          static_cast<float>(data(c, t));
  write_bytes_atomic(path, values.data(), values.size() * sizeof(float));
}

MatrixRM to_matrix(const std::vector<float>& values, std::int64_t channels,
                   std::int64_t frames) {
  MatrixRM m(channels, frames);
  for (std::int64_t t = 0; t < frames; ++t)
    for (std::int64_t c = 0; c < channels; ++c)
      m(c, t) = values[static_cast<std::size_t>(t * channels + c)];
  return m;
}

// Parsed "key: value" lines; `event` may repeat, everything else may not.
struct Manifest {
  std::map<std::string, std::string> fields;
  std::vector<std::string> events;
};

Manifest parse_manifest(const fs::path& path, const std::set<std::string>& known) {
  const std::string text = read_text_file(path);
  Manifest m;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto sep = line.find(": ");
    if (sep == std::string::npos)
      throw FormatError(path.filename().string() + " line " + std::to_string(line_no) +
                        ": expected 'key: value', got '" + line + "'");
    const std::string key = line.substr(0, sep);
    const std::string value = line.substr(sep + 2);
    if (!known.count(key))
      throw FormatError(path.filename().string() + " line " + std::to_string(line_no) +
                        ": unknown field '" + key + "'");
    if (key == "event") {
      m.events.push_back(value);
    } else {
      if (m.fields.count(key))
        throw FormatError(path.filename().string() + " line " + std::to_string(line_no) +
                          ": duplicate field '" + key + "'");
      m.fields[key] = value;
    }
  }
  return m;
}

const std::string& require(const Manifest& m, const std::string& key,
                           const std::string& file) {
  const auto it = m.fields.find(key);
  if (it == m.fields.end())
    throw FormatError(file + ": missing required field '" + key + "'");
  return it->second;
}

std::int64_t parse_int(const std::string& text, const std::string& context) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw FormatError(context + ": not an integer: '" + text + "'");
  return value;
}

std::uint64_t parse_uint(const std::string& text, const std::string& context) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw FormatError(context + ": not an unsigned integer: '" + text + "'");
  return value;
}

bool parse_bool(const std::string& text, const std::string& context) {
  if (text == "1") return true;
  if (text == "0") return false;
  throw FormatError(context + ": expected 0 or 1, got '" + text + "'");
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

void check_version(const Manifest& m, const std::string& file) {
  const std::int64_t version = parse_int(require(m, "format_version", file),
                                         file + ": format_version");
  if (version != kManifestVersion)
    throw FormatError(file + ": unsupported format version " + std::to_string(version) +
                      " (expected " + std::to_string(kManifestVersion) + ")");
}

Phase parse_phase(const std::string& name, const std::string& context) {
  for (Phase p : {Phase::instruction, Phase::task, Phase::rest})
    if (name == phase_name(p)) return p;
  throw FormatError(context + ": unknown phase '" + name + "'");
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw IoError("cannot format double");
  return std::string(buf, ptr);
}

double parse_double(const std::string& text, const std::string& context) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw FormatError(context + ": not a number: '" + text + "'");
  return value;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_bytes_atomic(path, text.data(), text.size());
}

void write_bytes_atomic(const std::filesystem::path& path, const void* bytes,
                        std::size_t count) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    if (count > 0) out.write(static_cast<const char*>(bytes),
                             static_cast<std::streamsize>(count));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw IoError("cannot write " + tmp.string());
    }
  }
  rename_over(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_session_archive(const std::filesystem::path& dir, const RawSession& session) {
  const std::int64_t eeg_n = static_cast<std::int64_t>(session.montage.eeg_channels.size());
  const std::int64_t eog_n = static_cast<std::int64_t>(session.montage.eog_channels.size());
  if (session.eeg.rows() != eeg_n || session.eog.rows() != eog_n)
    throw ValidationError("session channel counts (" + std::to_string(session.eeg.rows()) +
                          " EEG, " + std::to_string(session.eog.rows()) +
                          " EOG) do not match the montage");
  if (session.eeg.cols() != session.eog.cols())
    throw ValidationError("EEG and EOG frame counts differ");
  if (session.participant_id.empty())
    throw ValidationError("session has no participant id");

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::ostringstream manifest;
  manifest << "format_version: " << kManifestVersion << '\n';
  manifest << "participant_id: " << session.participant_id << '\n';
  manifest << "sample_rate: " << format_double(session.sample_rate) << '\n';
  manifest << "units: microvolts\n";
  manifest << "frames: " << session.eeg.cols() << '\n';
  manifest << "eeg_channels: " << join_words(session.montage.eeg_channels) << '\n';
  manifest << "eog_channels: " << join_words(session.montage.eog_channels) << '\n';
  for (const TimelineEvent& e : session.timeline.events)
    manifest << "event: " << e.onset << ' ' << e.duration << ' ' << phase_name(e.phase)
             << ' ' << e.level << '\n';

  write_text_atomic(dir / "manifest.txt", manifest.str());
  write_f32_payload(dir / "eeg.f32le", session.eeg);
  write_f32_payload(dir / "eog.f32le", session.eog);
}

RawSession read_session_archive(const std::filesystem::path& dir) {
  static const std::set<std::string> known = {
      "format_version", "participant_id", "sample_rate", "units",
      "frames",         "eeg_channels",   "eog_channels", "event"};
  const fs::path manifest_path = dir / "manifest.txt";
  const Manifest m = parse_manifest(manifest_path, known);
  const std::string file = manifest_path.filename().string();
  check_version(m, file);

  RawSession session;
  session.participant_id = require(m, "participant_id", file);
  session.sample_rate = parse_double(require(m, "sample_rate", file), file);
  if (require(m, "units", file) != "microvolts")
    throw FormatError(file + ": unsupported units '" + m.fields.at("units") + "'");
  const std::int64_t frames = parse_int(require(m, "frames", file), file + ": frames");
  if (frames < 0) throw FormatError(file + ": negative frame count");

  session.montage = standard_montage();
  const auto eeg_names = split_words(require(m, "eeg_channels", file));
  const auto eog_names = split_words(require(m, "eog_channels", file));
  if (eeg_names != session.montage.eeg_channels ||
      eog_names != session.montage.eog_channels)
    throw FormatError(file + ": channel names do not match the standard montage");

  for (const std::string& text : m.events) {
    const auto words = split_words(text);
    if (words.size() != 4)
      throw FormatError(file + ": event needs 'onset duration phase level', got '" +
                        text + "'");
    TimelineEvent e;
    e.onset = parse_int(words[0], file + ": event onset");
    e.duration = parse_int(words[1], file + ": event duration");
    e.phase = parse_phase(words[2], file + ": event phase");
    e.level = static_cast<int>(parse_int(words[3], file + ": event level"));
    session.timeline.events.push_back(e);
  }

  const std::int64_t eeg_n = static_cast<std::int64_t>(eeg_names.size());
  const std::int64_t eog_n = static_cast<std::int64_t>(eog_names.size());
  session.eeg = to_matrix(
      read_f32_payload(dir / "eeg.f32le", frames, eeg_n,
                       std::to_string(frames) + " frames x " + std::to_string(eeg_n) +
                           " channels"),
      eeg_n, frames);
  session.eog = to_matrix(
      read_f32_payload(dir / "eog.f32le", frames, eog_n,
                       std::to_string(frames) + " frames x " + std::to_string(eog_n) +
                           " channels"),
      eog_n, frames);
  return session;
}

void write_epoch_archive(const std::filesystem::path& dir, const EpochSet& set) {
  if (set.epochs.empty()) throw ValidationError("cannot archive an empty epoch set");
  const std::string& pid = set.epochs.front().participant_id;
  const std::int64_t rows = set.epochs.front().data.rows();
  const std::int64_t cols = set.epochs.front().data.cols();
  for (const Epoch& e : set.epochs) {
    if (e.participant_id != pid)
      throw ValidationError("epoch archive spans multiple participants ('" + pid +
                            "' and '" + e.participant_id + "')");
    if (e.data.rows() != rows || e.data.cols() != cols)
      throw ValidationError("epoch shapes are heterogeneous");
  }
  if (pid.empty()) throw ValidationError("epoch set has no participant id");

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const Provenance& prov = set.provenance;
  std::ostringstream manifest;
  manifest << "format_version: " << kManifestVersion << '\n';
  manifest << "participant_id: " << pid << '\n';
  manifest << "epochs: " << set.epochs.size() << '\n';
  manifest << "rows: " << rows << '\n';
  manifest << "cols: " << cols << '\n';
  manifest << "units: microvolts\n";
  manifest << "bandpass_low_hz: " << format_double(prov.bandpass_low_hz) << '\n';
  manifest << "bandpass_high_hz: " << format_double(prov.bandpass_high_hz) << '\n';
  manifest << "bandpass_order: " << prov.bandpass_order << '\n';
  manifest << "notch_hz: " << format_double(prov.notch_hz) << '\n';
  manifest << "notch_q: " << format_double(prov.notch_q) << '\n';
  manifest << "notch_applied: " << (prov.notch_applied ? 1 : 0) << '\n';
  manifest << "decimation: " << prov.decimation << '\n';
  manifest << "ica_applied: " << (prov.ica_applied ? 1 : 0) << '\n';
  manifest << "eog_threshold: " << format_double(prov.eog_threshold) << '\n';
  manifest << "ica_rejected: " << prov.ica_rejected << '\n';
  manifest << "balanced: " << (prov.balanced ? 1 : 0) << '\n';
  manifest << "balance_seed: " << prov.balance_seed << '\n';
  write_text_atomic(dir / "manifest.txt", manifest.str());

  const std::size_t per_epoch = static_cast<std::size_t>(rows * cols);
  std::vector<float> payload(set.epochs.size() * per_epoch);
  std::vector<std::uint8_t> labels(set.epochs.size());
  std::vector<std::int32_t> trials(set.epochs.size());
  for (std::size_t i = 0; i < set.epochs.size(); ++i) {
    const Epoch& e = set.epochs[i];
    float* out = payload.data() + i * per_epoch;
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t c = 0; c < cols; ++c)
        out[r * cols + c] = static_cast<float>(e.data(r, c));
    labels[i] = static_cast<std::uint8_t>(e.label);
    trials[i] = e.source_trial;
  }
  write_bytes_atomic(dir / "epochs.f32le", payload.data(), payload.size() * sizeof(float));
  write_bytes_atomic(dir / "labels.u8", labels.data(), labels.size());
  write_bytes_atomic(dir / "trials.i32le", trials.data(),
                     trials.size() * sizeof(std::int32_t));
}

EpochSet read_epoch_archive(const std::filesystem::path& dir) {
  static const std::set<std::string> known = {
      "format_version", "participant_id", "epochs",           "rows",
      "cols",           "units",          "bandpass_low_hz",  "bandpass_high_hz",
      "bandpass_order", "notch_hz",       "notch_q",          "notch_applied",
      "decimation",     "ica_applied",    "eog_threshold",    "ica_rejected",
      "balanced",       "balance_seed"};
  const fs::path manifest_path = dir / "manifest.txt";
  const Manifest m = parse_manifest(manifest_path, known);
  const std::string file = manifest_path.filename().string();
  check_version(m, file);

  const std::string pid = require(m, "participant_id", file);
  const std::int64_t n = parse_int(require(m, "epochs", file), file + ": epochs");
  const std::int64_t rows = parse_int(require(m, "rows", file), file + ": rows");
  const std::int64_t cols = parse_int(require(m, "cols", file), file + ": cols");
  if (n <= 0 || rows <= 0 || cols <= 0)
    throw FormatError(file + ": non-positive epoch count or shape");
  if (require(m, "units", file) != "microvolts")
    throw FormatError(file + ": unsupported units '" + m.fields.at("units") + "'");

  EpochSet set;
  Provenance& prov = set.provenance;
  prov.bandpass_low_hz = parse_double(require(m, "bandpass_low_hz", file), file);
  prov.bandpass_high_hz = parse_double(require(m, "bandpass_high_hz", file), file);
  prov.bandpass_order =
      static_cast<int>(parse_int(require(m, "bandpass_order", file), file));
  prov.notch_hz = parse_double(require(m, "notch_hz", file), file);
  prov.notch_q = parse_double(require(m, "notch_q", file), file);
  prov.notch_applied = parse_bool(require(m, "notch_applied", file), file);
  prov.decimation = static_cast<int>(parse_int(require(m, "decimation", file), file));
  prov.ica_applied = parse_bool(require(m, "ica_applied", file), file);
  prov.eog_threshold = parse_double(require(m, "eog_threshold", file), file);
  prov.ica_rejected = static_cast<int>(parse_int(require(m, "ica_rejected", file), file));
  prov.balanced = parse_bool(require(m, "balanced", file), file);
  prov.balance_seed = parse_uint(require(m, "balance_seed", file), file);

  const std::vector<float> payload = read_f32_payload(
      dir / "epochs.f32le", n, rows * cols,
      std::to_string(n) + " epochs x " + std::to_string(rows) + " x " +
          std::to_string(cols));

  const std::vector<char> label_bytes = read_bytes(dir / "labels.u8");
  if (static_cast<std::int64_t>(label_bytes.size()) != n)
    throw FormatError("labels.u8: expected " + std::to_string(n) + " bytes but found " +
                      std::to_string(label_bytes.size()) + " (mismatch at byte offset " +
                      std::to_string(std::min<std::int64_t>(label_bytes.size(), n)) + ")");

  const std::vector<char> trial_bytes = read_bytes(dir / "trials.i32le");
  if (static_cast<std::int64_t>(trial_bytes.size()) != n * 4)
    throw FormatError("trials.i32le: expected " + std::to_string(n * 4) +
                      " bytes but found " + std::to_string(trial_bytes.size()) +
                      " (mismatch at byte offset " +
                      std::to_string(std::min<std::int64_t>(trial_bytes.size(), n * 4)) +
                      ")");

  set.epochs.resize(static_cast<std::size_t>(n));
  const std::size_t per_epoch = static_cast<std::size_t>(rows * cols);
  for (std::int64_t i = 0; i < n; ++i) {
    Epoch& e = set.epochs[static_cast<std::size_t>(i)];
    e.participant_id = pid;
    const auto raw = static_cast<unsigned char>(label_bytes[static_cast<std::size_t>(i)]);
    if (raw >= kNumClasses)
      throw FormatError("labels.u8: invalid label " + std::to_string(int{raw}) +
                        " at byte offset " + std::to_string(i));
    e.label = static_cast<Label>(raw);
    std::int32_t trial = 0;
    std::memcpy(&trial, trial_bytes.data() + i * 4, 4);
    e.source_trial = trial;
    e.data.resize(rows, cols);
    const float* src = payload.data() + static_cast<std::size_t>(i) * per_epoch;
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t c = 0; c < cols; ++c) e.data(r, c) = src[r * cols + c];
  }
  return set;
}

}  // namespace wld
