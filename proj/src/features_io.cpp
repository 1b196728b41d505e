#include "drivecot/features_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "drivecot/errors.hpp"

namespace drivecot::features {

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw DataError("feature file truncated in header");
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {
      static_cast<unsigned char>(v & 0xFF), static_cast<unsigned char>((v >> 8) & 0xFF),
      static_cast<unsigned char>((v >> 16) & 0xFF),
      static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::vector<std::vector<double>> load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file: " + path);
  const std::uint32_t rows = read_u32_le(in);
  const std::uint32_t dim = read_u32_le(in);
  if (rows == 0 || dim == 0) throw DataError("feature file declares an empty matrix: " + path);

  std::vector<std::vector<double>> matrix(rows, std::vector<double>(dim));
  std::vector<float> row(dim);
  for (std::uint32_t r = 0; r < rows; ++r) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(float) * dim));
    if (!in) throw DataError("feature file truncated at row " + std::to_string(r));
    for (std::uint32_t c = 0; c < dim; ++c) matrix[r][c] = static_cast<double>(row[c]);
  }
  return matrix;
}

std::vector<std::vector<double>> load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file: " + path);
  nlohmann::json j;
  in >> j;
  if (!j.is_array() || j.empty()) throw DataError("feature JSON must be a non-empty array");
  return j.get<std::vector<std::vector<double>>>();
}

}  // namespace

std::vector<std::vector<double>> load_feature_matrix(const std::string& path) {
  if (has_suffix(path, ".json")) return load_json(path);
  return load_binary(path);
}

void save_feature_matrix_binary(const std::string& path,
                                const std::vector<std::vector<double>>& matrix) {
  if (matrix.empty() || matrix.front().empty())
    throw DataError("refusing to write an empty feature matrix");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write feature file: " + path);
  const auto rows = static_cast<std::uint32_t>(matrix.size());
  const auto dim = static_cast<std::uint32_t>(matrix.front().size());
  write_u32_le(out, rows);
  write_u32_le(out, dim);
  for (const auto& r : matrix) {
    if (r.size() != dim) throw DataError("ragged feature matrix");
    for (const double v : r) {
      const float f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), sizeof(float));
    }
  }
}

void save_feature_matrix_json(const std::string& path,
                              const std::vector<std::vector<double>>& matrix) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write feature file: " + path);
  out << nlohmann::json(matrix).dump() << '\n';
}

}  // namespace drivecot::features
