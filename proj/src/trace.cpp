#include "icl/trace.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "binio.hpp"

namespace icl {

using nlohmann::json;

namespace {

json array_entry(const std::string& name, std::vector<size_t> shape, size_t offset,
                 size_t length) {
  return json{{"name", name}, {"shape", shape}, {"byte_offset", offset}, {"byte_length", length}};
}

std::string hidden_name(int layer, int position) {
  return "hidden/L" + std::to_string(layer) + "/P" + std::to_string(position);
}

std::string attn_name(int layer, int position) {
  return "attn/L" + std::to_string(layer) + "/P" + std::to_string(position);
}

}  // namespace

void export_trace(const CaptureResult& capture, const ModelHandle& handle,
                  const TokenSequence& tokens, const std::string& path) {
  json arrays = json::array();
  std::vector<const std::vector<float>*> payloads;
  size_t offset = 0;
  auto add = [&](const std::string& name, std::vector<size_t> shape,
                 const std::vector<float>& data) {
    size_t bytes = data.size() * 4;
    arrays.push_back(array_entry(name, std::move(shape), offset, bytes));
    payloads.push_back(&data);
    offset += bytes;
  };

  for (const auto& [key, state] : capture.hidden)
    add(hidden_name(key.first, key.second), {state.size()}, state);
  for (const auto& [key, row] : capture.attention_rows)
    add(attn_name(key.first, key.second), {row.size()}, row);
  add("final_logits", {capture.final_logits.size()}, capture.final_logits);

  json header{{"format", "icltrace"},
              {"version", 1},
              {"model_id", handle.model_id},
              {"num_layers", handle.num_layers},
              {"hidden_dim", handle.hidden_dim},
              {"vocab_size", handle.vocab_size},
              {"seq_len", capture.seq_len},
              {"positions", capture.positions},
              {"token_ids", tokens.token_ids},
              {"arrays", arrays}};

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("export_trace: cannot open " + path);
  os << header.dump() << "\n";
  for (const auto* p : payloads) binio::write_f32(os, p->data(), p->size());
  if (!os) throw std::runtime_error("export_trace: write failure on " + path);
}

Trace import_trace(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("import_trace: cannot open " + path);
  std::string header_line;
  if (!std::getline(is, header_line))
    throw std::runtime_error("import_trace: missing header line in " + path);
  json header = json::parse(header_line);
  if (header.value("format", "") != "icltrace")
    throw std::runtime_error("import_trace: " + path + " is not an icltrace file");

  Trace t;
  t.handle.model_id = header.at("model_id").get<std::string>();
  t.handle.num_layers = header.at("num_layers").get<int>();
  t.handle.hidden_dim = header.at("hidden_dim").get<int>();
  t.handle.vocab_size = header.at("vocab_size").get<int>();
  t.capture.num_layers = t.handle.num_layers;
  t.capture.hidden_dim = t.handle.hidden_dim;
  t.capture.vocab_size = t.handle.vocab_size;
  t.capture.seq_len = header.at("seq_len").get<int>();
  t.capture.positions = header.at("positions").get<std::vector<int>>();
  t.token_ids = header.at("token_ids").get<std::vector<int>>();

  const std::streampos payload_start = is.tellg();
  for (const json& arr : header.at("arrays")) {
    std::string name = arr.at("name").get<std::string>();
    size_t offset = arr.at("byte_offset").get<size_t>();
    size_t length = arr.at("byte_length").get<size_t>();
    if (length % 4 != 0)
      throw std::runtime_error("import_trace: array " + name + " not float32");
    is.seekg(payload_start + static_cast<std::streamoff>(offset));
    std::vector<float> data = binio::read_f32(is, length / 4);

    if (name == "final_logits") {
      t.capture.final_logits = std::move(data);
    } else {
      bool is_hidden = name.rfind("hidden/L", 0) == 0;
      bool is_attn = name.rfind("attn/L", 0) == 0;
      if (!is_hidden && !is_attn)
        throw std::runtime_error("import_trace: unknown array " + name);
      size_t slash = name.find("/P");
      if (slash == std::string::npos)
        throw std::runtime_error("import_trace: malformed array name " + name);
      int layer = std::stoi(name.substr(is_hidden ? 8 : 6, slash - (is_hidden ? 8 : 6)));
      int position = std::stoi(name.substr(slash + 2));
      if (is_hidden)
        t.capture.hidden[{layer, position}] = std::move(data);
      else
        t.capture.attention_rows[{layer, position}] = std::move(data);
    }
  }
  return t;
}

}  // namespace icl
