#include "tdre/util.hpp"

#include <cstdio>
#include <iostream>

namespace tdre {

void log_warn(const std::string& msg) { std::cerr << "[tdre] warning: " << msg << "\n"; }

void log_info(const std::string& msg) { std::cerr << "[tdre] " << msg << "\n"; }

std::string to_hex(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace tdre
