#include "lvp/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace lvp::kernels {
namespace {

struct Selection {
    const KernelTable* table;
    const char* name;
};

Selection select() {
    const char* want = std::getenv("LVPNET_KERNELS");
    const KernelTable* avx2 = avx2_table();
    if (want && std::strcmp(want, "scalar") == 0) return {&scalar_table(), "scalar"};
    if (want && std::strcmp(want, "avx2") == 0 && avx2) return {avx2, "avx2"};
    if (avx2) return {avx2, "avx2"};
    return {&scalar_table(), "scalar"};
}

const Selection& selection() {
    static const Selection sel = select();
    return sel;
}

} // namespace

const KernelTable& active() { return *selection().table; }
const char* active_name() { return selection().name; }

} // namespace lvp::kernels
