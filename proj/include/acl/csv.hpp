#pragma once

#include <cstdio>
#include <string>

namespace acl {

// Single fixed rendering for every CSV number: %.12g is compact, stable, and
// one code path, which is what makes identical runs byte-identical on disk.
inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
}

}  // namespace acl
