#pragma once

#include "relaygame/kernels.hpp"

namespace relaygame::kernels {

#if defined(RELAYGAME_HAVE_AVX2)
// Defined in kernels_avx2.cpp, which is the only unit built with -mavx2 -mfma.
const KernelTable& avx2_table_unchecked();
#endif

}  // namespace relaygame::kernels
