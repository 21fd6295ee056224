#include "fedcert/common.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

namespace fedcert {

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file for hashing: " + path);
  std::uint64_t h = kFnvOffset;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = in.gcount();
    h = fnv1a(std::string_view(buf.data(), static_cast<std::size_t>(got)), h);
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(v));
  return std::string(out);
}

}  // namespace fedcert
