#include "pfm/cache.hpp"

#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "pfm/error.hpp"

namespace pfm {

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

namespace {

constexpr char kMatrixMagic[4] = {'P', 'F', 'M', 'C'};
constexpr char kModelMagic[4] = {'P', 'F', 'M', 'M'};

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& offset) {
  if (offset + sizeof(T) > in.size()) throw Error(ErrorKind::Format, "truncated cache data");
  T value;
  std::memcpy(&value, in.data() + offset, sizeof(T));
  offset += sizeof(T);
  return value;
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

std::string take_string(const std::string& in, std::size_t& offset) {
  const auto len = take<std::uint32_t>(in, offset);
  if (offset + len > in.size()) throw Error(ErrorKind::Format, "truncated string in model file");
  std::string s = in.substr(offset, len);
  offset += len;
  return s;
}

}  // namespace

std::string encode_matrix(const MatrixRowF& m) {
  std::string out;
  out.reserve(24 + sizeof(float) * static_cast<std::size_t>(m.size()));
  out.append(kMatrixMagic, 4);
  put<std::uint32_t>(out, kCacheVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  out.append(reinterpret_cast<const char*>(m.data()), sizeof(float) * static_cast<std::size_t>(m.size()));
  return out;
}

MatrixRowF decode_matrix(const std::string& bytes, std::size_t* offset_io) {
  std::size_t offset = offset_io ? *offset_io : 0;
  if (bytes.size() < offset + 4 || std::memcmp(bytes.data() + offset, kMatrixMagic, 4) != 0) {
    throw Error(ErrorKind::Format, "bad matrix cache magic");
  }
  offset += 4;
  const auto version = take<std::uint32_t>(bytes, offset);
  if (version != kCacheVersion) {
    throw Error(ErrorKind::Format, "unsupported matrix cache version " + std::to_string(version));
  }
  const auto rows = take<std::uint64_t>(bytes, offset);
  const auto cols = take<std::uint64_t>(bytes, offset);
  const std::size_t n = static_cast<std::size_t>(rows * cols);
  if (offset + n * sizeof(float) > bytes.size()) throw Error(ErrorKind::Format, "truncated matrix payload");
  MatrixRowF m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::memcpy(m.data(), bytes.data() + offset, n * sizeof(float));
  offset += n * sizeof(float);
  if (offset_io) *offset_io = offset;
  return m;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  static std::atomic<unsigned> counter{0};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
           << "." << counter++;
  const auto tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Load, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Load, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Load, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_matrix(const std::filesystem::path& path, const MatrixRowF& m) {
  write_file_atomic(path, encode_matrix(m));
}

MatrixRowF read_matrix(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t offset = 0;
  MatrixRowF m = decode_matrix(bytes, &offset);
  if (offset != bytes.size()) throw Error(ErrorKind::Format, "trailing bytes in " + path.string());
  return m;
}

void write_model(const std::filesystem::path& path, const ModelFile& model) {
  std::string out(kModelMagic, 4);
  put<std::uint32_t>(out, kCacheVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.type));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.params.size()));
  for (const auto& [key, value] : model.params) {
    put_string(out, key);
    put_string(out, value);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.matrices.size()));
  for (const auto& m : model.matrices) out += encode_matrix(m);
  write_file_atomic(path, out);
}

ModelFile read_model(const std::filesystem::path& path, ModelType expected) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
    throw Error(ErrorKind::Format, "bad model magic in " + path.string());
  }
  std::size_t offset = 4;
  const auto version = take<std::uint32_t>(bytes, offset);
  if (version != kCacheVersion) throw Error(ErrorKind::Format, "unsupported model version");
  ModelFile model;
  model.type = static_cast<ModelType>(take<std::uint32_t>(bytes, offset));
  if (model.type != expected) {
    throw Error(ErrorKind::Format, path.string() + " holds model type " +
                                       std::to_string(static_cast<std::uint32_t>(model.type)) + ", expected " +
                                       std::to_string(static_cast<std::uint32_t>(expected)));
  }
  const auto n_params = take<std::uint32_t>(bytes, offset);
  for (std::uint32_t i = 0; i < n_params; ++i) {
    std::string key = take_string(bytes, offset);
    model.params[key] = take_string(bytes, offset);
  }
  const auto n_matrices = take<std::uint32_t>(bytes, offset);
  for (std::uint32_t i = 0; i < n_matrices; ++i) model.matrices.push_back(decode_matrix(bytes, &offset));
  return model;
}

}  // namespace pfm
