#pragma once

#include <string_view>

namespace warpbench::bench {

// Source text of a suite kernel, compiled into the library from kernels/*.mk.
std::string_view kernel_source(std::string_view name);

}  // namespace warpbench::bench
