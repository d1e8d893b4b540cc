// scenecrnn/include/scenecrnn/serialize.h

// Copyright 2026  The SceneCRNN Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SCENECRNN_SERIALIZE_H_
#define SCENECRNN_SERIALIZE_H_

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "scenecrnn/tensor.h"

// Named flat-tensor container: header "CRNNPARM", u32 format version, then
// repeated {u32 name_len, name bytes, u32 rank, u32 dims[rank], float32 data}
// until end of stream. All fields little-endian.
//
// A model checkpoint is a plain-text "key = value" config block terminated by
// a line containing only "---", followed by one container.

namespace scenecrnn {

using NamedTensors = std::vector<std::pair<std::string, Tensor<float>>>;
using NamedTensorRefs = std::vector<std::pair<std::string, const Tensor<float> *>>;

void write_tensor_container(std::ostream &os, const NamedTensorRefs &tensors);
NamedTensors read_tensor_container(std::istream &is);

void save_tensor_container(const std::string &path, const NamedTensorRefs &tensors);
NamedTensors load_tensor_container(const std::string &path);

using ConfigBlock = std::vector<std::pair<std::string, std::string>>;

struct Checkpoint {
  ConfigBlock config;
  NamedTensors tensors;

  const std::string &get(const std::string &key) const;
  bool has(const std::string &key) const;
};

void save_checkpoint(const std::string &path, const ConfigBlock &config,
                     const NamedTensorRefs &tensors);
Checkpoint load_checkpoint(const std::string &path);

}  // namespace scenecrnn

#endif  // SCENECRNN_SERIALIZE_H_
