#include <fstream>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "binio.hpp"
#include "icl/model.hpp"

namespace icl {

using nlohmann::json;

// .iclmodel container: one UTF-8 JSON header line holding the config, the
// tokenizer word list, and an array directory (name/shape/byte_offset/
// byte_length, offsets relative to the first byte after the header line),
// followed by the concatenated raw little-endian float32 arrays.
GptModel GptModel::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("model load: cannot open " + path);
  std::string header_line;
  if (!std::getline(is, header_line))
    throw std::runtime_error("model load: missing header line in " + path);
  json header = json::parse(header_line);
  if (header.value("format", "") != "iclmodel")
    throw std::runtime_error("model load: " + path + " is not an iclmodel file");

  GptWeights w;
  const json& jc = header.at("config");
  w.config.n_layer = jc.at("n_layer").get<int>();
  w.config.n_embd = jc.at("n_embd").get<int>();
  w.config.n_head = jc.at("n_head").get<int>();
  w.config.n_ctx = jc.at("n_ctx").get<int>();
  w.config.n_vocab = jc.at("n_vocab").get<int>();
  w.config.ln_eps = jc.at("ln_eps").get<float>();
  w.layers.resize(static_cast<size_t>(w.config.n_layer));

  Tokenizer tok(header.at("tokenizer").at("words").get<std::vector<std::string>>());

  std::map<std::string, std::vector<float>*> slots = {
      {"wte", &w.wte}, {"wpe", &w.wpe}, {"lnf_g", &w.lnf_g}, {"lnf_b", &w.lnf_b}};
  for (int i = 0; i < w.config.n_layer; ++i) {
    GptLayerWeights& l = w.layers[static_cast<size_t>(i)];
    std::string p = "h" + std::to_string(i) + ".";
    slots[p + "ln1_g"] = &l.ln1_g;
    slots[p + "ln1_b"] = &l.ln1_b;
    slots[p + "qkv_w"] = &l.qkv_w;
    slots[p + "qkv_b"] = &l.qkv_b;
    slots[p + "attn_proj_w"] = &l.attn_proj_w;
    slots[p + "attn_proj_b"] = &l.attn_proj_b;
    slots[p + "ln2_g"] = &l.ln2_g;
    slots[p + "ln2_b"] = &l.ln2_b;
    slots[p + "mlp_fc_w"] = &l.mlp_fc_w;
    slots[p + "mlp_fc_b"] = &l.mlp_fc_b;
    slots[p + "mlp_proj_w"] = &l.mlp_proj_w;
    slots[p + "mlp_proj_b"] = &l.mlp_proj_b;
  }

  const std::streampos payload_start = is.tellg();
  for (const json& arr : header.at("arrays")) {
    std::string name = arr.at("name").get<std::string>();
    auto it = slots.find(name);
    if (it == slots.end())
      throw std::runtime_error("model load: unknown array " + name + " in " + path);
    size_t offset = arr.at("byte_offset").get<size_t>();
    size_t length = arr.at("byte_length").get<size_t>();
    if (length % 4 != 0) throw std::runtime_error("model load: array " + name + " not float32");
    is.seekg(payload_start + static_cast<std::streamoff>(offset));
    *it->second = binio::read_f32(is, length / 4);
  }

  return GptModel(std::move(w), std::move(tok), header.at("model_id").get<std::string>());
}

}  // namespace icl
