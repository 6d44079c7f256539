#include <atomic>
#include <cstdlib>
#include <string>

#include "symprice/kernels.hpp"

namespace symprice::kernels {

namespace {

const Table* initial_table() noexcept {
  const Table* best = &scalar::table();
  if (cpu_has_avx2() && avx2::table() != nullptr) best = avx2::table();
  if (const char* env = std::getenv("SYMPRICE_ISA")) {
    const std::string want(env);
    if (want == "scalar") best = &scalar::table();
  }
  return best;
}

std::atomic<const Table*>& current() noexcept {
  static std::atomic<const Table*> t{initial_table()};
  return t;
}

}  // namespace

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const Table& active() noexcept { return *current().load(); }

Isa set_isa(Isa isa) noexcept {
  const Table* t = &scalar::table();
  if (isa == Isa::Avx2 && cpu_has_avx2() && avx2::table() != nullptr) t = avx2::table();
  current().store(t);
  return t->isa;
}

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

}  // namespace symprice::kernels
