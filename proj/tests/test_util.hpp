#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "rgenima/error.hpp"

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("rgenima_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

#define CHECK_ERRC(expr, errc)                                   \
    do {                                                         \
        bool thrown_ = false;                                    \
        try {                                                    \
            (void)(expr);                                        \
        } catch (const rgenima::Error& e_) {                     \
            thrown_ = true;                                      \
            CHECK_MESSAGE(e_.code() == (errc), e_.what());       \
        }                                                        \
        CHECK_MESSAGE(thrown_, "expected " #errc);               \
    } while (0)
