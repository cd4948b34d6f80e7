#include "pgcn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "pgcn/error.hpp"
#include "pgcn/experiment.hpp"

namespace pgcn {

namespace {

constexpr char kMagic[4] = {'P', 'G', 'C', 'K'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError(path + ": truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError(path + ": truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(kMagic, 4);
  const char version = static_cast<char>(kVersion);
  out.write(&version, 1);
  const std::string config = model_config_to_json(ckpt.config).dump();
  put_u32(out, static_cast<std::uint32_t>(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  put_u32(out, static_cast<std::uint32_t>(ckpt.params.items.size()));
  for (const auto& [name, m] : ckpt.params.items) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(out, static_cast<std::uint64_t>(m.rows));
    put_u64(out, static_cast<std::uint64_t>(m.cols));
    for (double v : m.data) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      put_u64(out, bits);
    }
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw DataError(path + ": bad magic, expected PGCK");
  char version;
  if (!in.read(&version, 1) || static_cast<std::uint8_t>(version) != kVersion)
    throw DataError(path + ": unsupported checkpoint version");
  Checkpoint ckpt;
  const std::uint32_t config_len = get_u32(in, path);
  if (config_len > (1u << 20)) throw DataError(path + ": implausible config block size");
  std::string config(config_len, '\0');
  if (!in.read(config.data(), config_len)) throw DataError(path + ": truncated checkpoint");
  nlohmann::json doc = nlohmann::json::parse(config, nullptr, false);
  if (doc.is_discarded()) throw DataError(path + ": corrupt embedded model config");
  ckpt.config = model_config_from_json(doc);
  const std::uint32_t count = get_u32(in, path);
  if (count > (1u << 16)) throw DataError(path + ": implausible tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get_u32(in, path);
    if (name_len > (1u << 10)) throw DataError(path + ": implausible tensor name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw DataError(path + ": truncated checkpoint");
    const auto rows = static_cast<std::int64_t>(get_u64(in, path));
    const auto cols = static_cast<std::int64_t>(get_u64(in, path));
    if (rows < 0 || cols < 0 || rows * cols > (std::int64_t{1} << 32))
      throw DataError(path + ": implausible tensor shape");
    Matrix m(rows, cols);
    for (double& v : m.data) {
      std::uint64_t bits = get_u64(in, path);
      std::memcpy(&v, &bits, 8);
    }
    ckpt.params.items.emplace_back(std::move(name), std::move(m));
  }
  return ckpt;
}

}  // namespace pgcn
