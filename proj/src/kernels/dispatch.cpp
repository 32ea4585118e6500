#include <cstdlib>
#include <string_view>

#include "ava/kernels.hpp"

namespace ava::kernels {

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> tables{&scalar_table()};
  if (const KernelTable* t = avx2_table()) tables.push_back(t);
  if (const KernelTable* t = neon_table()) tables.push_back(t);
  return tables;
}

namespace {

const KernelTable& resolve() {
  const auto tables = available_tables();
  if (const char* forced = std::getenv("AVA_SIMD")) {
    for (const KernelTable* t : tables) {
      if (std::string_view(forced) == t->name) return *t;
    }
    // Unknown or unsupported request: fall back to the reference path.
    return scalar_table();
  }
  return *tables.back();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = resolve();
  return table;
}

}  // namespace ava::kernels
