// Copyright 2026 The fcalink Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fcalink/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace fcalink {

namespace {

constexpr char kMagic[8] = {'F', 'L', 'C', 'K', 'P', 'T', '\0', '\0'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  template <class U>
  void uint(U v) {
    unsigned char b[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b), sizeof(U));
  }
  void bytes(const std::string& s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  template <class U>
  U uint() {
    unsigned char b[sizeof(U)];
    if (!in_.read(reinterpret_cast<char*>(b), sizeof(U))) throw DataError("truncated checkpoint");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
  }
  std::string bytes(std::uint64_t n) {
    if (n > (std::uint64_t{1} << 32)) throw DataError("implausible checkpoint field length");
    std::string s(n, '\0');
    if (n && !in_.read(s.data(), static_cast<std::streamsize>(n)))
      throw DataError("truncated checkpoint");
    return s;
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
    Writer w(out);
    out.write(kMagic, sizeof kMagic);
    w.uint<std::uint32_t>(kCheckpointVersion);
    const std::string header = ckpt.header.dump();
    w.uint<std::uint64_t>(header.size());
    w.bytes(header);
    w.uint<std::uint64_t>(ckpt.params.tensors().size());
    for (const auto& t : ckpt.params.tensors()) {
      w.uint<std::uint32_t>(static_cast<std::uint32_t>(t.name.size()));
      w.bytes(t.name);
      w.uint<std::uint32_t>(2);
      w.uint<std::uint64_t>(t.rows);
      w.uint<std::uint64_t>(t.cols);
      for (float v : t.data) w.uint<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
    }
    if (!out) throw DataError("failed writing checkpoint '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  Reader r(in);
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw DataError("'" + path.string() + "' is not a checkpoint");
  const auto version = r.uint<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  try {
    ckpt.header = nlohmann::json::parse(r.bytes(r.uint<std::uint64_t>()));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt checkpoint header: ") + e.what());
  }
  const auto count = r.uint<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.bytes(r.uint<std::uint32_t>());
    if (r.uint<std::uint32_t>() != 2) throw DataError("checkpoint tensors must be 2-D");
    const auto rows = r.uint<std::uint64_t>();
    const auto cols = r.uint<std::uint64_t>();
    if (rows * cols > (std::uint64_t{1} << 31)) throw DataError("implausible tensor shape");
    auto& t = ckpt.params.add(std::move(name), rows, cols);
    for (auto& v : t.data) v = std::bit_cast<float>(r.uint<std::uint32_t>());
  }
  return ckpt;
}

}  // namespace fcalink
