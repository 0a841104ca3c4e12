#include "rhe/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace rhe {

namespace {

constexpr char kMagic[4] = {'R', 'H', 'E', 'B'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void write_value(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_value(std::istream& in, const char* what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error(std::string("checkpoint: truncated while reading ") + what);
  return value;
}

}  // namespace

void save_checkpoint(const ModelState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");

  out.write(kMagic, 4);
  write_value<std::uint32_t>(out, kVersion);
  write_value<std::uint32_t>(out, static_cast<std::uint32_t>(state.config.input_size));
  write_value<std::uint32_t>(out, static_cast<std::uint32_t>(state.config.conv_channels.size()));
  for (int c : state.config.conv_channels)
    write_value<std::uint32_t>(out, static_cast<std::uint32_t>(c));
  write_value<std::uint32_t>(out, static_cast<std::uint32_t>(state.config.num_classes));
  write_value<std::uint64_t>(out, state.config.init_seed);

  for (const Tensor& t : state.params)
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint: write to " + path.string() + " failed");
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: " + path.string() + " has bad magic");
  const auto version = read_value<std::uint32_t>(in, "version");
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

  ModelConfig cfg;
  cfg.input_size = static_cast<int>(read_value<std::uint32_t>(in, "input_size"));
  const auto blocks = read_value<std::uint32_t>(in, "block count");
  if (blocks == 0 || blocks > 20)
    throw std::runtime_error("checkpoint: implausible block count " + std::to_string(blocks));
  cfg.conv_channels.clear();
  for (std::uint32_t i = 0; i < blocks; ++i)
    cfg.conv_channels.push_back(static_cast<int>(read_value<std::uint32_t>(in, "channels")));
  cfg.num_classes = static_cast<int>(read_value<std::uint32_t>(in, "num_classes"));
  cfg.init_seed = read_value<std::uint64_t>(in, "init_seed");

  ModelState state = init_model(cfg);
  for (Tensor& t : state.params) {
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: " + path.string() + " is truncated");
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw std::runtime_error("checkpoint: " + path.string() + " has trailing bytes");

  // Parameters were overwritten; reset the optimizer slots to a fresh state.
  for (auto& slot : state.adam) {
    slot.m = Tensor::zeros(slot.m.shape);
    slot.v = Tensor::zeros(slot.v.shape);
    slot.t = 0;
  }
  return state;
}

}  // namespace rhe
