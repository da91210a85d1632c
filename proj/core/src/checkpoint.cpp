#include "stmlp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace stmlp {

using nlohmann::json;

namespace {

constexpr char kMagic[9] = "STMLPCK1";
constexpr int kFormatVersion = 1;

json config_json(const ModelConfig& cfg) {
  return json{{"layers", cfg.layers},
              {"joints", cfg.joints},
              {"hidden_width", cfg.hidden_width},
              {"seq_len", cfg.seq_len},
              {"spatial_hidden", cfg.spatial_hidden},
              {"temporal_hidden", cfg.temporal_hidden},
              {"classes", cfg.classes},
              {"variant", to_string(cfg.variant)},
              {"se_mode", to_string(cfg.se_mode)},
              {"ln_axis", to_string(cfg.ln_axis)},
              {"se_combine", to_string(cfg.se_combine)}};
}

template <typename E>
E enum_from(const std::string& s, std::initializer_list<std::pair<const char*, E>> table,
            const char* field) {
  for (const auto& [name, value] : table)
    if (s == name) return value;
  throw ConfigError(std::string("unknown ") + field + " value: " + s);
}

ModelConfig config_from(const json& j) {
  ModelConfig cfg;
  cfg.layers = j.at("layers").get<std::size_t>();
  cfg.joints = j.at("joints").get<std::size_t>();
  cfg.hidden_width = j.at("hidden_width").get<std::size_t>();
  cfg.seq_len = j.at("seq_len").get<std::size_t>();
  cfg.spatial_hidden = j.at("spatial_hidden").get<std::size_t>();
  cfg.temporal_hidden = j.at("temporal_hidden").get<std::size_t>();
  cfg.classes = j.at("classes").get<std::size_t>();
  cfg.variant = enum_from<Variant>(j.at("variant").get<std::string>(),
                                   {{"full", Variant::full},
                                    {"spatial_only", Variant::spatial_only},
                                    {"temporal_only", Variant::temporal_only},
                                    {"two_stream", Variant::two_stream}},
                                   "variant");
  cfg.se_mode = enum_from<SeMode>(j.at("se_mode").get<std::string>(),
                                  {{"shared", SeMode::shared},
                                   {"separate", SeMode::separate},
                                   {"off", SeMode::off}},
                                  "se_mode");
  cfg.ln_axis = enum_from<LnAxis>(j.at("ln_axis").get<std::string>(),
                                  {{"operand", LnAxis::operand},
                                   {"features", LnAxis::features}},
                                  "ln_axis");
  cfg.se_combine = enum_from<SeCombine>(j.at("se_combine").get<std::string>(),
                                        {{"multiply", SeCombine::multiply},
                                         {"add", SeCombine::add}},
                                        "se_combine");
  return cfg;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in, const std::string& origin) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8))
    throw IoError(origin + ": truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_doubles(std::ostream& out, const std::vector<double>& values) {
  for (double d : values) write_u64(out, std::bit_cast<std::uint64_t>(d));
}

void read_doubles(std::istream& in, std::vector<double>& values,
                  const std::string& origin) {
  for (double& d : values) d = std::bit_cast<double>(read_u64(in, origin));
}

}  // namespace

std::string config_to_json(const ModelConfig& cfg) { return config_json(cfg).dump(); }

ModelConfig config_from_json(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config JSON: invalid JSON");
  return config_from(j);
}

void save_checkpoint(std::ostream& out, const Checkpoint& cp) {
  const auto views = named_params(cp.params);
  json header;
  header["format_version"] = kFormatVersion;
  header["config"] = config_json(cp.config);
  header["created"] = cp.created;
  header["seed"] = cp.seed;
  json plist = json::array();
  for (const auto& v : views)
    plist.push_back({{"name", v.name}, {"rows", v.rows}, {"cols", v.cols}});
  header["params"] = std::move(plist);
  const std::string text = header.dump();

  out.write(kMagic, 8);
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& v : views) write_doubles(out, *v.data);
  if (!out) throw IoError("checkpoint write failed");
}

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint file: " + path);
  save_checkpoint(out, cp);
}

Checkpoint load_checkpoint(std::istream& in, const std::string& origin) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw IoError(origin + ": not a checkpoint file (bad magic)");
  const std::uint64_t header_len = read_u64(in, origin);
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len)))
    throw IoError(origin + ": truncated checkpoint header");
  json header = json::parse(text, nullptr, false);
  if (header.is_discarded()) throw IoError(origin + ": corrupt checkpoint header");
  if (header.at("format_version").get<int>() != kFormatVersion)
    throw IoError(origin + ": unsupported checkpoint format version");

  Checkpoint cp;
  cp.config = config_from(header.at("config"));
  cp.seed = header.at("seed").get<std::uint64_t>();
  cp.created = header.value("created", "");
  cp.params = make_params(cp.config);

  auto views = named_params(cp.params);
  const auto& plist = header.at("params");
  if (plist.size() != views.size())
    throw IoError(origin + ": checkpoint lists " + std::to_string(plist.size()) +
                  " parameters, config implies " + std::to_string(views.size()));
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& entry = plist[i];
    if (entry.at("name").get<std::string>() != views[i].name ||
        entry.at("rows").get<std::size_t>() != views[i].rows ||
        entry.at("cols").get<std::size_t>() != views[i].cols) {
      throw IoError(origin + ": parameter " + std::to_string(i) +
                    " does not match the configured layout (expected " +
                    views[i].name + ")");
    }
    read_doubles(in, *views[i].data, origin);
  }
  return cp;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint file: " + path);
  return load_checkpoint(in, path);
}

}  // namespace stmlp
