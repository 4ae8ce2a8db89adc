#pragma once

#include <string>
#include <vector>

#include "advkt/common.hpp"

namespace advkt {

// Flat binary container of named float64 arrays (little-endian, row-major):
//   magic "AKTC" | u32 version | u64 count
//   count x { u32 name_len | name | u64 rows | u64 cols | rows*cols f64 }
struct NamedArrays {
    std::vector<std::pair<std::string, Mat>> entries;

    void put(const std::string& name, Mat m);
    const Mat& get(const std::string& name) const;  // throws ValidationError
    bool has(const std::string& name) const;
};

void write_container(const NamedArrays& a, const std::string& path);
NamedArrays read_container(const std::string& path);

}  // namespace advkt
