#include "cadv/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "cadv/error.hpp"

namespace cadv {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'C', 'A', 'D', 'V', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw InputError("checkpoint " + path.string() + " is truncated");
  }
  return value;
}

std::string get_string(std::ifstream& in, std::uint64_t len, const std::filesystem::path& path) {
  if (len > (std::uint64_t{1} << 24)) throw InputError("checkpoint " + path.string() + ": implausible string length");
  std::string s(len, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(len))) {
    throw InputError("checkpoint " + path.string() + " is truncated");
  }
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  const std::string text = to_config_text(config);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  const auto named = params.named();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, tensor] : named) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(tensor.data().data()),
              static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw InputError(path.string() + " is not a checkpoint");
  }
  if (const auto version = get<std::uint32_t>(in, path); version != kVersion) {
    throw InputError("checkpoint " + path.string() + " has unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config = parse_config(get_string(in, get<std::uint64_t>(in, path), path));
  ckpt.config.model.validate();

  // Start from a correctly shaped model, then overwrite every array.
  ckpt.params = init_params(ckpt.config.model, 0);
  auto expected = ckpt.params.named();
  const auto count = get<std::uint32_t>(in, path);
  if (count != expected.size()) {
    throw InputError("checkpoint " + path.string() + " holds " + std::to_string(count) + " arrays, config implies " +
                     std::to_string(expected.size()));
  }
  for (auto& [name, tensor] : expected) {
    const std::string stored = get_string(in, get<std::uint32_t>(in, path), path);
    if (stored != name) throw InputError("checkpoint array '" + stored + "' found where '" + name + "' expected");
    const auto rank = get<std::uint32_t>(in, path);
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<std::size_t>(get<std::uint64_t>(in, path)));
    if (shape != tensor.shape()) {
      throw InputError("checkpoint array '" + name + "' has shape " + shape_str(shape) + ", expected " +
                       shape_str(tensor.shape()));
    }
    auto values = tensor.mutable_data();
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)))) {
      throw InputError("checkpoint " + path.string() + " is truncated");
    }
  }
  return ckpt;
}

}  // namespace cadv
