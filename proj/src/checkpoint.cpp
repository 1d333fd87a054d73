#include "sessrec/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "sessrec/rng.hpp"

namespace sessrec {
namespace {

constexpr char kMagic[8] = {'S', 'R', 'C', 'K', 'P', 'T', '0', '1'};

nlohmann::json config_to_json(const ModelConfig& cfg) {
  return nlohmann::json{
      {"embedding_dim", cfg.embedding_dim},
      {"interest_count", cfg.interest_count},
      {"layer_count", cfg.layer_count},
      {"max_step", cfg.max_step},
      {"bucket_width", cfg.bucket_width},
      {"bidirectional_edges", cfg.bidirectional_edges},
      {"leaky_slope", static_cast<double>(cfg.leaky_slope)},
      {"compactness_floor", static_cast<double>(cfg.compactness_floor)},
      {"disable_vv_time", cfg.disable_vv_time},
      {"disable_uv_time", cfg.disable_uv_time},
      {"disable_last_time", cfg.disable_last_time},
      {"use_first_time", cfg.use_first_time},
      {"single_interest", cfg.single_interest},
  };
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.embedding_dim = j.at("embedding_dim").get<int64_t>();
  cfg.interest_count = j.at("interest_count").get<int64_t>();
  cfg.layer_count = j.at("layer_count").get<int64_t>();
  cfg.max_step = j.at("max_step").get<int64_t>();
  cfg.bucket_width = j.at("bucket_width").get<int64_t>();
  cfg.bidirectional_edges = j.at("bidirectional_edges").get<bool>();
  cfg.leaky_slope = static_cast<Real>(j.at("leaky_slope").get<double>());
  cfg.compactness_floor =
      static_cast<Real>(j.at("compactness_floor").get<double>());
  cfg.disable_vv_time = j.at("disable_vv_time").get<bool>();
  cfg.disable_uv_time = j.at("disable_uv_time").get<bool>();
  cfg.disable_last_time = j.at("disable_last_time").get<bool>();
  cfg.use_first_time = j.at("use_first_time").get<bool>();
  cfg.single_interest = j.at("single_interest").get<bool>();
  return cfg;
}

}  // namespace

void save_checkpoint(Model& model, const std::string& path) {
  nlohmann::json header;
  header["format"] = 1;
  header["real_bits"] = static_cast<int>(sizeof(Real) * 8);
  header["item_count"] = model.item_count();
  header["config"] = config_to_json(model.config());
  nlohmann::json manifest = nlohmann::json::array();
  model.for_each_param([&](const std::string& name, Tensor& t) {
    manifest.push_back({{"name", name}, {"shape", t.shape()}});
  });
  header["tensors"] = std::move(manifest);
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  const uint64_t header_len = header_text.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_text.data(),
            static_cast<std::streamsize>(header_text.size()));
  model.for_each_param([&](const std::string&, Tensor& t) {
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.size() * sizeof(Real)));
  });
  if (!out) throw IoError("failed while writing " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError(path + ": not a model file");
  uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || header_len == 0 || header_len > (1u << 26))
    throw ParseError(path + ": bad header length");
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw ParseError(path + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": header is not valid JSON: " + e.what());
  }
  try {
    if (header.at("format").get<int>() != 1)
      throw ParseError(path + ": unsupported format version");
    if (header.at("real_bits").get<int>() !=
        static_cast<int>(sizeof(Real) * 8))
      throw ParseError(path + ": value width does not match this build");
    const int64_t item_count = header.at("item_count").get<int64_t>();
    ModelConfig cfg = config_from_json(header.at("config"));
    cfg.validate();
    if (item_count < 1) throw ParseError(path + ": bad item count");

    Rng rng(0);
    Model model(cfg, item_count, rng);
    const nlohmann::json& manifest = header.at("tensors");
    size_t idx = 0;
    model.for_each_param([&](const std::string& name, Tensor& t) {
      if (idx >= manifest.size())
        throw ParseError(path + ": tensor manifest too short");
      const nlohmann::json& entry = manifest[idx++];
      if (entry.at("name").get<std::string>() != name)
        throw ParseError(path + ": tensor order mismatch at '" + name + "'");
      if (entry.at("shape").get<Shape>() != t.shape())
        throw ParseError(path + ": shape mismatch for '" + name + "'");
      in.read(reinterpret_cast<char*>(t.values_mut().data()),
              static_cast<std::streamsize>(t.size() * sizeof(Real)));
      if (!in) throw ParseError(path + ": truncated tensor data");
    });
    if (idx != manifest.size())
      throw ParseError(path + ": tensor manifest too long");
    in.peek();
    if (!in.eof()) throw ParseError(path + ": trailing bytes");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": malformed header: " + e.what());
  }
}

}  // namespace sessrec
