#pragma once

#include <string>

// Shipped case files; the directory comes from the build system.
inline std::string data_path(const std::string& name) {
    return std::string(MOMLIN_TEST_DATA_DIR) + "/" + name;
}
