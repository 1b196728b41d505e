#pragma once

#include <string>
#include <vector>

namespace drivecot::features {

// Feature matrices arrive either as a JSON array of float arrays (*.json)
// or as flat binary (*.bin): two little-endian uint32 (rows, dim) followed
// by rows*dim little-endian float32 values.
std::vector<std::vector<double>> load_feature_matrix(const std::string& path);

void save_feature_matrix_binary(const std::string& path,
                                const std::vector<std::vector<double>>& matrix);

void save_feature_matrix_json(const std::string& path,
                              const std::vector<std::vector<double>>& matrix);

}  // namespace drivecot::features
