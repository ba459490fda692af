#pragma once

#define XVABSDE_VERSION "0.1.0"

namespace xvabsde {

inline const char* version() { return XVABSDE_VERSION; }

} // namespace xvabsde
