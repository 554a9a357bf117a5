#pragma once

#include <string>
#include <vector>

#include "icl/model.hpp"

namespace icl {

struct Trace {
  ModelHandle handle;
  std::vector<int> token_ids;
  CaptureResult capture;
};

// .icltrace container: one UTF-8 JSON header line (model_id, num_layers,
// hidden_dim, vocab_size, token_ids, array directory with name/shape/
// byte_offset/byte_length), followed by concatenated raw little-endian
// float32 arrays. Offsets are relative to the byte after the header line.
// Round trips are bitwise lossless for all float payloads.
void export_trace(const CaptureResult& capture, const ModelHandle& handle,
                  const TokenSequence& tokens, const std::string& path);
Trace import_trace(const std::string& path);

}  // namespace icl
