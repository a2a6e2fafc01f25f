#include "lsmcf/snapshot_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "lsmcf/errors.hpp"

namespace lsmcf {
namespace {

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  std::filesystem::path p = stem;
  p += ext;
  return p;
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

}  // namespace

void write_snapshot(const std::filesystem::path& stem, const ScalarField& field,
                    const SnapshotMeta& meta) {
  const auto bin_path = with_ext(stem, ".bin");
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw Error("cannot open " + bin_path.string() + " for writing");
  for (double v : field.values()) {
    const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(v));
    bin.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }

  const GridSpec& g = field.grid();
  nlohmann::json side = {{"dimension", g.dimension()},     {"n", g.points_per_axis()},
                         {"half_width", g.half_width()},   {"time", meta.time},
                         {"epsilon", meta.epsilon},        {"name", meta.name}};
  std::ofstream json(with_ext(stem, ".json"));
  json << side.dump(2) << '\n';
}

LoadedSnapshot read_snapshot(const std::filesystem::path& stem, BoundaryRegime regime) {
  std::ifstream json_in(with_ext(stem, ".json"));
  if (!json_in) throw Error("missing sidecar for " + stem.string());
  const auto side = nlohmann::json::parse(json_in);
  const GridSpec grid(side.at("dimension").get<int>(), side.at("half_width").get<double>(),
                      side.at("n").get<int>(), regime);

  std::ifstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!bin) throw Error("missing samples for " + stem.string());
  std::vector<double> values(grid.size());
  for (double& v : values) {
    std::uint64_t bits = 0;
    if (!bin.read(reinterpret_cast<char*>(&bits), sizeof bits))
      throw Error("truncated snapshot " + stem.string());
    v = std::bit_cast<double>(to_le(bits));
  }
  if (bin.peek() != std::char_traits<char>::eof())
    throw Error("snapshot " + stem.string() + " has trailing bytes");

  return {ScalarField(grid, std::move(values)),
          SnapshotMeta{side.at("time").get<double>(), side.at("epsilon").get<double>(),
                       side.at("name").get<std::string>()}};
}

}  // namespace lsmcf
