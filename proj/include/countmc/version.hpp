#pragma once

namespace countmc {

constexpr const char* kVersion = "0.1.0";

}  // namespace countmc
