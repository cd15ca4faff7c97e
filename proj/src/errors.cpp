#include "countmc/errors.hpp"

#include <cstdio>

namespace countmc {

std::string SamplerStallError::format(const std::string& step, long i1, long i2,
                                      double x0, double w, long m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "slice sampler stalled: step=%s index=(%ld,%ld) x0=%.17g "
                "width=%.17g iteration=%ld",
                step.empty() ? "?" : step.c_str(), i1, i2, x0, w, m);
  return std::string(buf);
}

}  // namespace countmc
