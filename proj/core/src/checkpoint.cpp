#include "wldecode/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>
#include <set>

#include <json.hpp>

#include "wldecode/archive.hpp"
#include "wldecode/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor payloads are little-endian; big-endian hosts need byte swaps");

namespace wld {

namespace {

constexpr const char* kMagic = "wldecode-checkpoint 1";

std::vector<Param*> all_tensors(Sequential& net) {
  std::vector<Param*> out = net.params();
  const std::vector<Param*> state = net.state();
  out.insert(out.end(), state.begin(), state.end());
  return out;
}

}  // namespace

Checkpoint snapshot(Sequential& net, const std::string& model, std::uint64_t seed,
                    const std::vector<TrainLogEntry>& log) {
  Checkpoint ckpt;
  ckpt.model = model;
  ckpt.seed = seed;
  ckpt.log = log;
  std::set<std::string> seen;
  for (Param* p : all_tensors(net)) {
    if (!seen.insert(p->name).second)
      throw std::logic_error("duplicate tensor name '" + p->name + "' in network");
    ckpt.tensors.push_back({p->name, {p->value.size()}, p->value});
  }
  return ckpt;
}

void restore(Sequential& net, const Checkpoint& ckpt) {
  std::map<std::string, const CheckpointTensor*> by_name;
  for (const CheckpointTensor& t : ckpt.tensors) by_name[t.name] = &t;
  std::set<std::string> used;
  for (Param* p : all_tensors(net)) {
    const auto it = by_name.find(p->name);
    if (it == by_name.end())
      throw FormatError("checkpoint is missing tensor '" + p->name + "'");
    const CheckpointTensor& t = *it->second;
    if (t.data.size() != p->value.size())
      throw FormatError("checkpoint tensor '" + p->name + "' has " +
                        std::to_string(t.data.size()) + " values, network expects " +
                        std::to_string(p->value.size()));
    p->value = t.data;
    p->grad.setZero(p->value.size());
    used.insert(p->name);
  }
  for (const CheckpointTensor& t : ckpt.tensors)
    if (!used.count(t.name))
      throw FormatError("checkpoint tensor '" + t.name +
                        "' has no matching network parameter");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::ordered_json header;
  header["model"] = ckpt.model;
  header["seed"] = ckpt.seed;
  header["log"] = nlohmann::ordered_json::array();
  for (const TrainLogEntry& e : ckpt.log) {
    nlohmann::ordered_json entry;
    entry["step"] = e.step;
    entry["epoch"] = e.epoch;
    entry["loss"] = e.loss;
    entry["accuracy"] = e.accuracy;
    header["log"].push_back(std::move(entry));
  }
  header["tensors"] = nlohmann::ordered_json::array();
  std::size_t doubles = 0;
  for (const CheckpointTensor& t : ckpt.tensors) {
    nlohmann::ordered_json entry;
    entry["name"] = t.name;
    entry["shape"] = t.shape;
    header["tensors"].push_back(std::move(entry));
    std::int64_t count = 1;
    for (std::int64_t d : t.shape) count *= d;
    if (count != t.data.size())
      throw ValidationError("tensor '" + t.name + "' shape does not match its " +
                            std::to_string(t.data.size()) + " values");
    doubles += static_cast<std::size_t>(t.data.size());
  }

  const std::string json = header.dump();
  std::string out = std::string(kMagic) + "\n" + std::to_string(json.size()) + "\n" +
                    json + "\n";
  const std::size_t blob_at = out.size();
  out.resize(blob_at + doubles * sizeof(double));
  char* cursor = out.data() + blob_at;
  for (const CheckpointTensor& t : ckpt.tensors) {
    const std::size_t bytes = static_cast<std::size_t>(t.data.size()) * sizeof(double);
    std::memcpy(cursor, t.data.data(), bytes);
    cursor += bytes;
  }
  write_text_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  const std::string file = path.filename().string();

  const auto magic_end = raw.find('\n');
  if (magic_end == std::string::npos || raw.substr(0, magic_end) != kMagic)
    throw FormatError(file + ": not a checkpoint (bad magic line)");
  const auto len_end = raw.find('\n', magic_end + 1);
  if (len_end == std::string::npos)
    throw FormatError(file + ": missing header length line");
  std::size_t header_len = 0;
  try {
    header_len = std::stoull(raw.substr(magic_end + 1, len_end - magic_end - 1));
  } catch (const std::exception&) {
    throw FormatError(file + ": malformed header length");
  }
  const std::size_t header_at = len_end + 1;
  if (header_at + header_len + 1 > raw.size())
    throw FormatError(file + ": header truncated at byte offset " +
                      std::to_string(raw.size()));
  if (raw[header_at + header_len] != '\n')
    throw FormatError(file + ": header is not newline-terminated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(raw.substr(header_at, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(file + ": malformed header: " + e.what());
  }

  Checkpoint ckpt;
  try {
    for (const auto& [key, value] : header.items())
      if (key != "model" && key != "seed" && key != "log" && key != "tensors")
        throw FormatError(file + ": unknown header field '" + key + "'");
    ckpt.model = header.at("model").get<std::string>();
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    for (const auto& entry : header.at("log")) {
      TrainLogEntry e;
      e.step = entry.at("step").get<int>();
      e.epoch = entry.at("epoch").get<int>();
      e.loss = entry.at("loss").get<double>();
      e.accuracy = entry.at("accuracy").get<double>();
      ckpt.log.push_back(e);
    }
    for (const auto& entry : header.at("tensors")) {
      CheckpointTensor t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      ckpt.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(file + ": malformed header: " + e.what());
  }

  std::size_t offset = header_at + header_len + 1;
  for (CheckpointTensor& t : ckpt.tensors) {
    std::int64_t count = 1;
    for (std::int64_t d : t.shape) {
      if (d < 0) throw FormatError(file + ": tensor '" + t.name + "' has negative shape");
      count *= d;
    }
    const std::size_t bytes = static_cast<std::size_t>(count) * sizeof(double);
    if (offset + bytes > raw.size())
      throw FormatError(file + ": tensor '" + t.name +
                        "' payload truncated at byte offset " +
                        std::to_string(raw.size()));
    t.data.resize(count);
    std::memcpy(t.data.data(), raw.data() + offset, bytes);
    offset += bytes;
  }
  if (offset != raw.size())
    throw FormatError(file + ": " + std::to_string(raw.size() - offset) +
                      " bytes of trailing data at byte offset " + std::to_string(offset));
  return ckpt;
}

}  // namespace wld
