#include "rawcycle/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "rawcycle/errors.hpp"
#include "rawcycle/hash.hpp"

namespace rawcycle {

namespace {

constexpr char kMagic[4] = {'R', 'C', 'K', 'P'};

void append_u64le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t read_u64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::string encode_payload(const ParamStore& ps) {
  std::string payload;
  for (const auto& [name, t] : ps.entries())
    for (std::size_t i = 0; i < t.size(); ++i)
      append_u64le(payload, std::bit_cast<std::uint64_t>(t[i]));
  return payload;
}

Tensor tensor_from_dims(const std::vector<int>& dims) {
  switch (dims.size()) {
    case 1:
      return Tensor::make1(dims[0]);
    case 3:
      return Tensor::make3(dims[0], dims[1], dims[2]);
    case 4:
      return Tensor::make4(dims[0], dims[1], dims[2], dims[3]);
    default:
      throw DataError("checkpoint array has unsupported rank " +
                      std::to_string(dims.size()));
  }
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

struct ParsedHeader {
  nlohmann::json manifest;
  std::size_t payload_offset = 0;
};

ParsedHeader parse_header(const std::vector<unsigned char>& bytes,
                          const std::filesystem::path& path) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw DataError(path.string() + " is not a checkpoint file");
  const std::uint64_t len = read_u64le(bytes.data() + 4);
  if (12 + len > bytes.size())
    throw DataError("checkpoint " + path.string() + " is truncated");
  nlohmann::json manifest = nlohmann::json::parse(
      bytes.begin() + 12, bytes.begin() + 12 + static_cast<std::ptrdiff_t>(len),
      nullptr, /*allow_exceptions=*/false);
  if (manifest.is_discarded())
    throw DataError("checkpoint " + path.string() + " has a corrupt manifest");
  return {std::move(manifest), 12 + static_cast<std::size_t>(len)};
}

CheckpointManifest manifest_from_json(const nlohmann::json& j) {
  CheckpointManifest m;
  m.config = j.at("config");
  m.stage = j.at("stage").get<std::string>();
  m.step = j.at("step").get<std::int64_t>();
  return m;
}

// First JSON-pointer path at which the two flattened configs disagree,
// walking keys in sorted order; empty when they match.
std::string first_mismatch(const nlohmann::json& stored, const nlohmann::json& expected) {
  const nlohmann::json a = stored.flatten();
  const nlohmann::json b = expected.flatten();
  for (const auto& [key, value] : a.items()) {
    if (!b.contains(key)) return key;
    if (b.at(key) != value) return key;
  }
  for (const auto& [key, value] : b.items())
    if (!a.contains(key)) return key;
  return "";
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& ps,
                     const CheckpointManifest& manifest) {
  const std::string payload = encode_payload(ps);
  nlohmann::json arrays = nlohmann::json::array();
  for (const auto& [name, t] : ps.entries()) {
    std::vector<int> dims(t.dims().begin(), t.dims().begin() + t.rank());
    arrays.push_back({{"name", name}, {"dims", dims}});
  }
  const nlohmann::json j = {{"config", manifest.config},
                            {"stage", manifest.stage},
                            {"step", manifest.step},
                            {"checksum", fnv1a64(payload.data(), payload.size())},
                            {"arrays", arrays}};
  const std::string text = j.dump();

  std::string blob(kMagic, 4);
  append_u64le(blob, text.size());
  blob += text;
  blob += payload;

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw DataError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointManifest load_checkpoint(const std::filesystem::path& path, ParamStore& ps,
                                   const nlohmann::json* expected_config) {
  const std::vector<unsigned char> bytes = read_all(path);
  ParsedHeader header = parse_header(bytes, path);
  CheckpointManifest m = manifest_from_json(header.manifest);

  if (expected_config != nullptr) {
    const std::string where = first_mismatch(m.config, *expected_config);
    if (!where.empty())
      throw ConfigError("checkpoint config mismatch at " + where + ": stored " +
                        m.config.flatten().value(where, nlohmann::json()).dump() +
                        ", expected " +
                        expected_config->flatten().value(where, nlohmann::json()).dump());
  }

  const std::uint64_t want = header.manifest.at("checksum").get<std::uint64_t>();
  const std::size_t payload_size = bytes.size() - header.payload_offset;
  const std::uint64_t got = fnv1a64(bytes.data() + header.payload_offset, payload_size);
  if (want != got)
    throw DataError("checkpoint " + path.string() + " failed its checksum");

  const unsigned char* p = bytes.data() + header.payload_offset;
  const unsigned char* end = bytes.data() + bytes.size();
  for (const auto& entry : header.manifest.at("arrays")) {
    const std::string name = entry.at("name").get<std::string>();
    Tensor t = tensor_from_dims(entry.at("dims").get<std::vector<int>>());
    if (static_cast<std::size_t>(end - p) < 8 * t.size())
      throw DataError("checkpoint " + path.string() + " payload is short");
    for (std::size_t i = 0; i < t.size(); ++i, p += 8)
      t[i] = std::bit_cast<double>(read_u64le(p));
    Tensor& dst = ps.get_or_create(name, [&t] { return t; });
    if (!dst.same_shape(t))
      throw ConfigError("checkpoint array " + name + " has shape " + t.shape_str() +
                        " but the model expects " + dst.shape_str());
    dst = std::move(t);
  }
  if (p != end)
    throw DataError("checkpoint " + path.string() + " has trailing bytes");
  return m;
}

CheckpointManifest peek_checkpoint(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_all(path);
  return manifest_from_json(parse_header(bytes, path).manifest);
}

}  // namespace rawcycle
