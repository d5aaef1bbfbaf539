#include "oceanbo/fno/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "oceanbo/common/error.hpp"

namespace oceanbo::fno {

namespace {

constexpr char kMagic[9] = "OBCKPT01";

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["kind"] = ckpt.kind;
  header["fno_config"] = to_json(ckpt.config);
  header["meta"] = ckpt.meta;
  nlohmann::json specs = nlohmann::json::array();
  for (const auto& p : ckpt.params.params()) {
    specs.push_back({{"name", p.name}, {"shape", p.shape}, {"complex", p.is_complex}, {"values", p.values.size()}});
  }
  header["params"] = specs;
  const std::string text = header.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write checkpoint '" + path + "'");
    out.write(kMagic, 8);
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& p : ckpt.params.params()) {
      out.write(reinterpret_cast<const char*>(p.values.data()),
                static_cast<std::streamsize>(p.values.size() * sizeof(double)));
    }
    if (!out) throw FormatError("short write to checkpoint '" + path + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || bytes.compare(0, 8, kMagic) != 0) {
    throw FormatError("'" + path + "' is not a checkpoint");
  }
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 8, sizeof len);
  if (len > bytes.size() - 16) throw FormatError("checkpoint header of '" + path + "' is truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint header of '" + path + "': " + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.kind = header.at("kind").get<std::string>();
    ckpt.config = fno_config_from_json(header.at("fno_config"));
    ckpt.meta = header.value("meta", nlohmann::json::object());
    std::size_t pos = 16 + len;
    for (const auto& spec : header.at("params")) {
      Param& p = ckpt.params.add(spec.at("name").get<std::string>(), spec.at("shape").get<std::vector<int>>(),
                                 spec.at("complex").get<bool>());
      const auto n = spec.at("values").get<std::size_t>();
      if (n != p.values.size()) throw FormatError("parameter '" + p.name + "' size disagrees with its shape");
      if (bytes.size() - pos < n * sizeof(double)) throw FormatError("checkpoint '" + path + "' is truncated");
      std::memcpy(p.values.data(), bytes.data() + pos, n * sizeof(double));
      pos += n * sizeof(double);
    }
    if (pos != bytes.size()) throw FormatError("checkpoint '" + path + "' has trailing bytes");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint header of '" + path + "': " + e.what());
  }
  return ckpt;
}

}  // namespace oceanbo::fno
