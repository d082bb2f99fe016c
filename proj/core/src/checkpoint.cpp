#include "ardt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace ardt::nn {
namespace {

static_assert(sizeof(double) == 8);

void to_little_endian_inplace(std::vector<std::uint8_t>& bytes) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i + 8 <= bytes.size(); i += 8) {
      for (int j = 0; j < 4; ++j) std::swap(bytes[i + j], bytes[i + 7 - j]);
    }
  }
}

}  // namespace

void save_checkpoint(
    const std::filesystem::path& path, const std::string& config_json,
    const std::vector<std::pair<std::string, Tensor>>& params) {
  nlohmann::ordered_json header;
  header["config"] = nlohmann::ordered_json::parse(config_json);
  auto& manifest = header["manifest"] = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const auto& [name, tensor] : params) {
    nlohmann::ordered_json entry;
    entry["name"] = name;
    entry["shape"] = tensor.shape();
    entry["offset"] = offset;
    manifest.push_back(entry);
    offset += tensor.size() * sizeof(double);
  }
  header["blob_bytes"] = offset;

  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out << header.dump() << '\n';
  std::vector<std::uint8_t> bytes(offset);
  std::size_t pos = 0;
  for (const auto& [name, tensor] : params) {
    const auto data = tensor.data();
    std::memcpy(bytes.data() + pos, data.data(), data.size() * sizeof(double));
    pos += data.size() * sizeof(double);
  }
  to_little_endian_inplace(bytes);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw std::runtime_error("checkpoint missing header: " + path.string());
  }
  const auto header = nlohmann::json::parse(header_line);
  const std::size_t blob_bytes = header.at("blob_bytes").get<std::size_t>();
  std::vector<std::uint8_t> bytes(blob_bytes);
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(blob_bytes));
  if (static_cast<std::size_t>(in.gcount()) != blob_bytes) {
    throw std::runtime_error("checkpoint blob truncated: " + path.string());
  }
  to_little_endian_inplace(bytes);

  LoadedCheckpoint loaded;
  loaded.config_json = header.at("config").dump();
  for (const auto& entry : header.at("manifest")) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    const auto offset = entry.at("offset").get<std::size_t>();
    std::size_t count = 1;
    for (const auto d : shape) count *= d;
    if (offset + count * sizeof(double) > blob_bytes) {
      throw std::runtime_error("checkpoint manifest out of range: " + name);
    }
    std::vector<double> values(count);
    std::memcpy(values.data(), bytes.data() + offset, count * sizeof(double));
    loaded.params.emplace_back(
        name, Tensor::from_values(shape, std::move(values), true));
  }
  return loaded;
}

}  // namespace ardt::nn
