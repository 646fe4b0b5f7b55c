/* Copyright 2026 The jsaloc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "jsaloc/harness/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "jsaloc/error.h"
#include "jsaloc/harness/model.h"

namespace jsaloc::harness {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void Pod(T value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof value);
  }
  void String(const std::string& s) {
    Pod<uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void Doubles(const diffcore::Tensor& t) {
    out_.write(reinterpret_cast<const char*>(t.values().data()),
               static_cast<std::streamsize>(t.size() * sizeof(double)));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string source)
      : in_(in), source_(std::move(source)) {}
  template <typename T>
  T Pod() {
    T value{};
    Read(reinterpret_cast<char*>(&value), sizeof value);
    return value;
  }
  std::string String() {
    const uint64_t n = Pod<uint64_t>();
    if (n > (uint64_t{1} << 30)) Corrupt("string length");
    std::string s(n, '\0');
    Read(s.data(), n);
    return s;
  }
  void Doubles(diffcore::Tensor& t) {
    Read(reinterpret_cast<char*>(t.flat().data()), t.size() * sizeof(double));
  }
  [[noreturn]] void Corrupt(const std::string& what) {
    throw Error(ErrorKind::kIo,
                "checkpoint " + source_ + " is corrupt (" + what + ")");
  }

 private:
  void Read(char* dst, size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) Corrupt("truncated");
  }
  std::ifstream& in_;
  std::string source_;
};

}  // namespace

void SaveCheckpoint(const std::filesystem::path& path,
                    const Checkpoint& ckpt) {
  const int n = ckpt.params.size();
  if (static_cast<int>(ckpt.first_moments.size()) != n ||
      static_cast<int>(ckpt.second_moments.size()) != n) {
    throw Error(ErrorKind::kContract, "checkpoint moments do not match params");
  }
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    Writer w(out);
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    w.Pod<uint32_t>(kCheckpointVersion);
    w.String(ToKeyValueText(ckpt.config));
    w.String(ckpt.deviations);
    w.Pod<int64_t>(ckpt.step);
    w.String(ckpt.rng_state);
    w.Pod<int64_t>(ckpt.optimizer_steps);
    w.Pod<uint32_t>(static_cast<uint32_t>(n));
    for (int i = 0; i < n; ++i) {
      const diffcore::Parameter& p = ckpt.params.at(i);
      w.String(p.name);
      w.Pod<uint8_t>(p.trainable ? 1 : 0);
      w.Pod<uint32_t>(static_cast<uint32_t>(p.value.rank()));
      for (int dim : p.value.shape()) w.Pod<uint32_t>(dim);
      w.Doubles(p.value);
      w.Doubles(ckpt.first_moments[i]);
      w.Doubles(ckpt.second_moments[i]);
    }
    out.flush();
    if (!out) throw Error(ErrorKind::kIo, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "checkpoint not found: " + path.string());
  }
  Reader r(in, path.string());
  char magic[sizeof kCheckpointMagic];
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic ||
      std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    r.Corrupt("bad magic");
  }
  const uint32_t version = r.Pod<uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::kConfig,
                "checkpoint " + path.string() + " has format version " +
                    std::to_string(version) + ", expected " +
                    std::to_string(kCheckpointVersion));
  }
  Checkpoint ckpt;
  ApplyKeyValueText(ckpt.config, r.String(), path.string());
  ckpt.deviations = r.String();
  ckpt.step = r.Pod<int64_t>();
  ckpt.rng_state = r.String();
  ckpt.optimizer_steps = r.Pod<int64_t>();
  const uint32_t n = r.Pod<uint32_t>();
  for (uint32_t i = 0; i < n; ++i) {
    std::string name = r.String();
    const bool trainable = r.Pod<uint8_t>() != 0;
    const uint32_t rank = r.Pod<uint32_t>();
    if (rank > 4) r.Corrupt("rank of " + name);
    diffcore::Shape shape;
    for (uint32_t k = 0; k < rank; ++k) {
      shape.push_back(static_cast<int>(r.Pod<uint32_t>()));
    }
    diffcore::Tensor value(shape), m(shape), v(shape);
    r.Doubles(value);
    r.Doubles(m);
    r.Doubles(v);
    ckpt.params.Add(std::move(name), std::move(value), trainable);
    ckpt.first_moments.push_back(std::move(m));
    ckpt.second_moments.push_back(std::move(v));
  }
  if (in.peek() != std::char_traits<char>::eof()) r.Corrupt("trailing bytes");
  return ckpt;
}

void CheckCompatible(const Checkpoint& ckpt, const TrainConfig& config) {
  const std::vector<std::string> fields =
      ArchitectureMismatches(ckpt.config, config);
  if (!fields.empty()) {
    std::string message = "checkpoint config differs in";
    for (const std::string& f : fields) {
      message += " " + f + " (" + GetField(ckpt.config, f) + " vs " +
                 GetField(config, f) + ")";
    }
    throw Error(ErrorKind::kConfig, message);
  }
  const diffcore::ParameterStore fresh = InitializeModel(config);
  if (fresh.size() != ckpt.params.size()) {
    throw Error(ErrorKind::kConfig, "checkpoint has " +
                                        std::to_string(ckpt.params.size()) +
                                        " parameters, model has " +
                                        std::to_string(fresh.size()));
  }
  for (int i = 0; i < fresh.size(); ++i) {
    const diffcore::Parameter& a = fresh.at(i);
    const diffcore::Parameter& b = ckpt.params.at(i);
    if (a.name != b.name || !a.value.SameShape(b.value)) {
      throw Error(ErrorKind::kConfig, "checkpoint parameter " + b.name + " " +
                                          b.value.ShapeString() +
                                          " does not match " + a.name + " " +
                                          a.value.ShapeString());
    }
  }
}

}  // namespace jsaloc::harness
