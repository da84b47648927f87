#include "sgp/ensemble.hpp"

#include <cstdio>

namespace sgp {

std::string to_string(ProcessKind kind) {
  switch (kind) {
  case ProcessKind::Sgd:
    return "sgd";
  case ProcessKind::Sgpc:
    return "sgpc";
  case ProcessKind::Sgpd:
    return "sgpd";
  case ProcessKind::FullFlow:
    return "full_flow";
  case ProcessKind::Auxiliary:
    return "auxiliary";
  case ProcessKind::SwitchingLinear:
    return "switching_linear";
  }
  return "unknown";
}

std::string digest_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace sgp
