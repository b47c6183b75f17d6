#include "deepmatch/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "deepmatch/errors.hpp"

namespace deepmatch {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kHeaderMagic[4] = {'D', 'M', 'C', 'P'};
constexpr char kTrailerMagic[4] = {'D', 'M', 'N', 'D'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in, const std::string& what) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw CheckpointError("checkpoint truncated while reading " + what);
  }
  return v;
}

std::uint64_t read_u64(std::ifstream& in, const std::string& what) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw CheckpointError("checkpoint truncated while reading " + what);
  }
  return v;
}

void write_array(std::ofstream& out, const std::vector<double>& values) {
  write_u64(out, values.size());
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void read_array(std::ifstream& in, const std::string& name,
                std::vector<double>& values) {
  const std::uint64_t count = read_u64(in, "length of block '" + name + "'");
  if (count != values.size()) {
    throw CheckpointError("checkpoint block '" + name + "' has " +
                          std::to_string(count) + " values, model expects " +
                          std::to_string(values.size()));
  }
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(count * sizeof(double)))) {
    throw CheckpointError("checkpoint truncated inside block '" + name + "'");
  }
}

}  // namespace

void save_checkpoint(DeepModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);

  out.write(kHeaderMagic, sizeof(kHeaderMagic));
  write_u32(out, kVersion);
  const std::string config = model.config.to_json();
  write_u64(out, config.size());
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  for (const ParamBlock& block : model.param_blocks()) {
    write_array(out, *block.values);
  }
  for (const ParamBlock& block : model.state_blocks()) {
    write_array(out, *block.values);
  }
  out.write(kTrailerMagic, sizeof(kTrailerMagic));
  if (!out) throw CheckpointError("write failed for checkpoint " + path);
}

DeepModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);

  char magic[4] = {};
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kHeaderMagic, sizeof(magic)) != 0) {
    throw CheckpointError(path + " is not a checkpoint (bad magic)");
  }
  const std::uint32_t version = read_u32(in, "version");
  if (version != kVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) +
                          " unsupported (expected " +
                          std::to_string(kVersion) + ")");
  }
  const std::uint64_t config_len = read_u64(in, "config length");
  // Guards against a corrupted length field swallowing the whole file.
  if (config_len > (1u << 20)) {
    throw CheckpointError("checkpoint config length " +
                          std::to_string(config_len) + " is implausible");
  }
  std::string config_text(config_len, '\0');
  if (!in.read(config_text.data(),
               static_cast<std::streamsize>(config_len))) {
    throw CheckpointError("checkpoint truncated inside config");
  }

  DeepModel model = DeepModel::create(ModelConfig::from_json(config_text));
  for (ParamBlock& block : model.param_blocks()) {
    read_array(in, block.name, *block.values);
  }
  for (ParamBlock& block : model.state_blocks()) {
    read_array(in, block.name, *block.values);
  }
  char trailer[4] = {};
  if (!in.read(trailer, sizeof(trailer)) ||
      std::memcmp(trailer, kTrailerMagic, sizeof(trailer)) != 0) {
    throw CheckpointError("checkpoint missing trailer (truncated?)");
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw CheckpointError("checkpoint has trailing bytes after trailer");
  }
  return model;
}

}  // namespace deepmatch
