#include "pgrl/tensor.hpp"

namespace pgrl::nn {

namespace {
bool g_checked = false;
}

bool checked_mode() { return g_checked; }
void set_checked_mode(bool on) { g_checked = on; }

}  // namespace pgrl::nn
