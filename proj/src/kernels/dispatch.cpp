#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "sgld/kernels/batch.hpp"

namespace sgld::kernels {

const KernelTable& active_table() {
  static const KernelTable* selected = [] {
    const char* env = std::getenv("SGLD_KERNELS");
    if (env != nullptr) {
      if (std::strcmp(env, "scalar") == 0) return &scalar_table();
      if (std::strcmp(env, "avx2") == 0) {
        const KernelTable* t = avx2_table();
        if (t == nullptr) throw std::runtime_error("SGLD_KERNELS=avx2: not supported on this CPU");
        return t;
      }
      if (std::strcmp(env, "auto") != 0)
        throw std::runtime_error("SGLD_KERNELS must be auto, scalar or avx2");
    }
    const KernelTable* t = avx2_table();
    return t != nullptr ? t : &scalar_table();
  }();
  return *selected;
}

}  // namespace sgld::kernels
