#include "cfs/random.hpp"

#include "cfs/error.hpp"

namespace cfs {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                          std::uint64_t index) {
  std::uint64_t s = mix64(root);
  s = mix64(s ^ fnv1a64(stream));
  return mix64(s ^ mix64(index + 0x632be59bd9b4e019ULL));
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInput: return "input_error";
    case ErrorKind::kDimension: return "dimension_error";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kConfig: return "config_error";
    case ErrorKind::kIo: return "io_error";
    case ErrorKind::kDomain: return "domain_error";
  }
  return "error";
}

}  // namespace cfs
