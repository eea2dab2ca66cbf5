#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pfm {

using MatrixRowF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Binary matrix cache, little-endian:
//   char[4] "PFMC" | u32 version | u64 rows | u64 cols | f32[rows*cols] row-major
inline constexpr std::uint32_t kCacheVersion = 1;

std::string encode_matrix(const MatrixRowF& m);
MatrixRowF decode_matrix(const std::string& bytes, std::size_t* offset = nullptr);

/// Atomic: writes a temp file in the same directory then renames it over `path`.
void write_matrix(const std::filesystem::path& path, const MatrixRowF& m);
MatrixRowF read_matrix(const std::filesystem::path& path);

enum class ModelType : std::uint32_t { Gmm = 1, Pca = 2, Codebook = 3, Svm = 4 };

// Model container:
//   char[4] "PFMM" | u32 version | u32 model type | u32 n params | (u32 len, key, u32 len, value)*
//   | u32 n matrices | encoded matrices
struct ModelFile {
  ModelType type = ModelType::Gmm;
  std::map<std::string, std::string> params;
  std::vector<MatrixRowF> matrices;
};

void write_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile read_model(const std::filesystem::path& path, ModelType expected);

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace pfm
