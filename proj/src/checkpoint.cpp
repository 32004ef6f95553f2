#include "fiberpinn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "fiberpinn/error.hpp"

namespace fiberpinn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

constexpr std::array<char, 8> kMagic{'F', 'P', 'I', 'N', 'N', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;
// Guards against allocating absurd sizes from a corrupt header.
constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 32;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  }
  template <typename T>
  void put(T value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  void put_doubles(const std::vector<double>& v) {
    out_.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  void raw(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw Error(ErrorCode::kIo, "write failed for " + path.string());
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  template <typename T>
  T get() {
    T value{};
    read(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
  }
  std::uint64_t get_count() {
    const auto n = get<std::uint64_t>();
    if (n > kMaxEntries) fail("implausible entry count");
    return n;
  }
  std::vector<double> get_doubles(std::uint64_t n) {
    std::vector<double> v(n);
    read(reinterpret_cast<char*>(v.data()), n * sizeof(double));
    return v;
  }
  void read(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (!in_) fail("truncated file");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kIo, path_.string() + ": " + what);
  }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const NetworkParams& p = ck.params;
  if (p.values.size() != parameter_count(p.layer_sizes)) {
    throw Error(ErrorCode::kInvalidArchitecture, "parameter vector does not match layer sizes");
  }
  Writer w(path);
  w.raw(kMagic.data(), kMagic.size());
  w.put(kVersion);
  w.put<std::uint64_t>(p.layer_sizes.size());
  for (std::size_t n : p.layer_sizes) w.put<std::uint64_t>(n);
  w.put<std::uint64_t>(p.seed);
  w.put<std::uint64_t>(p.values.size());
  w.put_doubles(p.values);
  w.put(ck.adam.hyper.learning_rate);
  w.put(ck.adam.hyper.beta_a);
  w.put(ck.adam.hyper.beta_b);
  w.put(ck.adam.hyper.epsilon);
  w.put<std::uint64_t>(ck.adam.step_count);
  w.put<std::uint64_t>(ck.adam.first_moment.size());
  w.put_doubles(ck.adam.first_moment);
  w.put_doubles(ck.adam.second_moment);
  w.put(ck.bit_rate);
  w.finish(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  std::array<char, 8> magic{};
  r.read(magic.data(), magic.size());
  if (magic != kMagic) r.fail("not a checkpoint file");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) r.fail("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  const auto n_sizes = r.get_count();
  for (std::uint64_t k = 0; k < n_sizes; ++k) {
    ck.params.layer_sizes.push_back(static_cast<std::size_t>(r.get_count()));
  }
  try {
    validate_architecture(ck.params.layer_sizes);
  } catch (const Error& e) {
    r.fail(e.what());
  }
  ck.params.seed = r.get<std::uint64_t>();
  const auto n_values = r.get_count();
  if (n_values != parameter_count(ck.params.layer_sizes)) {
    r.fail("parameter count does not match layer sizes");
  }
  ck.params.values = r.get_doubles(n_values);
  ck.adam.hyper.learning_rate = r.get<double>();
  ck.adam.hyper.beta_a = r.get<double>();
  ck.adam.hyper.beta_b = r.get<double>();
  ck.adam.hyper.epsilon = r.get<double>();
  ck.adam.step_count = r.get<std::uint64_t>();
  const auto n_moments = r.get_count();
  if (n_moments != 0 && n_moments != n_values) r.fail("moment length mismatch");
  ck.adam.first_moment = r.get_doubles(n_moments);
  ck.adam.second_moment = r.get_doubles(n_moments);
  ck.bit_rate = r.get<double>();
  return ck;
}

}  // namespace fiberpinn
