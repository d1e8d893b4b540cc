// scenecrnn/src/serialize.cc

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

#include "scenecrnn/serialize.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace scenecrnn {

namespace {

constexpr char kMagic[8] = {'C', 'R', 'N', 'N', 'P', 'A', 'R', 'M'};
constexpr uint32_t kVersion = 1;
constexpr char kConfigEnd[] = "---";

void write_u32(std::ostream &os, uint32_t v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof v);
}

uint32_t read_u32(std::istream &is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char *>(&v), sizeof v);
  if (!is) throw std::runtime_error("tensor container: truncated stream");
  return v;
}

}  // namespace

void write_tensor_container(std::ostream &os, const NamedTensorRefs &tensors) {
  os.write(kMagic, sizeof kMagic);
  write_u32(os, kVersion);
  for (const auto &[name, t] : tensors) {
    write_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<uint32_t>(t->rank()));
    for (int64_t d : t->shape) write_u32(os, static_cast<uint32_t>(d));
    os.write(reinterpret_cast<const char *>(t->data()),
             static_cast<std::streamsize>(t->numel() * sizeof(float)));
  }
  if (!os) throw std::runtime_error("tensor container: write failed");
}

NamedTensors read_tensor_container(std::istream &is) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error("tensor container: bad magic");
  const uint32_t version = read_u32(is);
  if (version != kVersion)
    throw std::runtime_error("tensor container: unsupported version " +
                             std::to_string(version));
  NamedTensors out;
  while (true) {
    uint32_t name_len = 0;
    is.read(reinterpret_cast<char *>(&name_len), sizeof name_len);
    if (is.eof()) break;
    if (!is) throw std::runtime_error("tensor container: truncated stream");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const uint32_t rank = read_u32(is);
    Shape shape(rank);
    for (uint32_t i = 0; i < rank; ++i) shape[i] = read_u32(is);
    Tensor<float> t(shape);
    is.read(reinterpret_cast<char *>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
    if (!is) throw std::runtime_error("tensor container: truncated tensor '" +
                                      name + "'");
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

void save_tensor_container(const std::string &path,
                           const NamedTensorRefs &tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_tensor_container(os, tensors);
}

NamedTensors load_tensor_container(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read_tensor_container(is);
}

const std::string &Checkpoint::get(const std::string &key) const {
  for (const auto &[k, v] : config)
    if (k == key) return v;
  throw std::runtime_error("checkpoint config missing key '" + key + "'");
}

bool Checkpoint::has(const std::string &key) const {
  for (const auto &[k, v] : config)
    if (k == key) return true;
  return false;
}

void save_checkpoint(const std::string &path, const ConfigBlock &config,
                     const NamedTensorRefs &tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto &[k, v] : config) os << k << " = " << v << "\n";
  os << kConfigEnd << "\n";
  write_tensor_container(os, tensors);
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  Checkpoint ckpt;
  std::string line;
  bool saw_end = false;
  while (std::getline(is, line)) {
    if (line == kConfigEnd) {
      saw_end = true;
      break;
    }
    const auto eq = line.find(" = ");
    if (eq == std::string::npos)
      throw std::runtime_error("checkpoint: malformed config line '" + line + "'");
    ckpt.config.emplace_back(line.substr(0, eq), line.substr(eq + 3));
  }
  if (!saw_end)
    throw std::runtime_error("checkpoint: missing config terminator in " + path);
  ckpt.tensors = read_tensor_container(is);
  return ckpt;
}

}  // namespace scenecrnn
