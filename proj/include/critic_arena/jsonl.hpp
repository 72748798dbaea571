// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <string>

#include "critic_arena/errors.hpp"

namespace critic_arena {

// Calls fn(line_no, line) for every non-blank line. Line numbers are 1-based
// and count blank lines so they match editor positions.
template <typename Fn>
void for_each_jsonl_line(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        fn(line_no, line);
    }
}

}  // namespace critic_arena
