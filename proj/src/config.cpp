#include "circcal/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "circcal/error.hpp"

namespace circcal {

namespace {

namespace pt = boost::property_tree;

std::vector<std::string> Tokens(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

double ParseReal(const std::string& text, const std::string& key) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw InvalidParameter(key + ": expected a finite number, got '" + text + "'");
  return v;
}

template <typename Int>
Int ParseInt(const std::string& text, const std::string& key) {
  Int v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw InvalidParameter(key + ": expected an integer, got '" + text + "'");
  return v;
}

Vec3 ParseVec3(const std::string& text, const std::string& key) {
  const auto t = Tokens(text);
  if (t.size() != 3) throw InvalidParameter(key + ": expected 3 numbers");
  return {ParseReal(t[0], key), ParseReal(t[1], key), ParseReal(t[2], key)};
}

std::string FormatVec3(const Vec3& v) {
  return FormatDouble(v.x()) + " " + FormatDouble(v.y()) + " " + FormatDouble(v.z());
}

ParameterMask ParseMask(const std::string& text, const std::string& key) {
  ParameterMask m{false, false, false, false};
  for (const auto& t : Tokens(text)) {
    if (t == "yaw") m.yaw = true;
    else if (t == "pitch") m.pitch = true;
    else if (t == "trans") m.trans = true;
    else if (t == "rolls") m.rolls = true;
    else throw InvalidParameter(key + ": unknown parameter group '" + t + "' (use yaw pitch trans rolls)");
  }
  return m;
}

std::string FormatMask(const ParameterMask& m) {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += ' ';
    s += name;
  };
  add(m.yaw, "yaw");
  add(m.pitch, "pitch");
  add(m.trans, "trans");
  add(m.rolls, "rolls");
  return s;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

// Binds every configuration key to its field in `c`. The order here is the
// order of FormatConfig.
std::vector<Field> Bind(RunConfig& c, const std::filesystem::path& base) {
  std::vector<Field> f;
  auto path = [&](const char* s, const char* k, std::filesystem::path& p) {
    f.push_back({s, k, [&p, base](const std::string& v) { p = v.empty() || base.empty() ? std::filesystem::path(v) : base / v; },
                 [&p] { return p.string(); }});
  };
  auto real = [&](const char* s, const char* k, double& x) {
    f.push_back({s, k, [&x, k](const std::string& v) { x = ParseReal(v, k); }, [&x] { return FormatDouble(x); }});
  };
  auto integer = [&](const char* s, const char* k, int& x) {
    f.push_back({s, k, [&x, k](const std::string& v) { x = ParseInt<int>(v, k); }, [&x] { return std::to_string(x); }});
  };
  auto seed = [&](const char* s, const char* k, std::uint64_t& x) {
    f.push_back({s, k, [&x, k](const std::string& v) { x = ParseInt<std::uint64_t>(v, k); },
                 [&x] { return std::to_string(x); }});
  };
  auto vec = [&](const char* s, const char* k, Vec3& x) {
    f.push_back({s, k, [&x, k](const std::string& v) { x = ParseVec3(v, k); }, [&x] { return FormatVec3(x); }});
  };
  auto degrees = [&](const char* s, const char* k, double& rad) {
    f.push_back({s, k, [&rad, k](const std::string& v) { rad = DegToRad(ParseReal(v, k)); },
                 [&rad] { return FormatDouble(RadToDeg(rad)); }});
  };

  path("paths", "image_dir", c.paths.image_dir);
  path("paths", "annotation_image", c.paths.annotation_image);
  path("paths", "annotation_labels", c.paths.annotation_labels);
  path("paths", "output_dir", c.paths.output_dir);

  real("intrinsics", "focal_length_mm", c.intrinsics.focal_length);
  real("intrinsics", "scale_x_px_per_mm", c.intrinsics.scale_x);
  real("intrinsics", "scale_y_px_per_mm", c.intrinsics.scale_y);
  real("intrinsics", "principal_x_px", c.intrinsics.principal_x);
  real("intrinsics", "principal_y_px", c.intrinsics.principal_y);
  integer("intrinsics", "image_width", c.intrinsics.image_width);
  integer("intrinsics", "image_height", c.intrinsics.image_height);

  vec("grid", "center_mm", c.grid.center);
  vec("grid", "half_extent_mm", c.grid.half_extent);
  f.push_back({"grid", "resolution",
               [&c](const std::string& v) {
                 const auto t = Tokens(v);
                 if (t.size() != 3) throw InvalidParameter("resolution: expected 3 integers");
                 for (int a = 0; a < 3; ++a) c.grid.resolution[a] = ParseInt<int>(t[a], "resolution");
               },
               [&c] {
                 return std::to_string(c.grid.resolution[0]) + " " + std::to_string(c.grid.resolution[1]) + " " +
                        std::to_string(c.grid.resolution[2]);
               }});

  integer("rig", "views", c.rig.views);
  real("rig", "delta_omega_deg", c.rig.delta_omega_deg);
  real("rig", "nominal_distance_mm", c.rig.nominal_distance);

  f.push_back({"cost", "sampling", [&c](const std::string& v) { c.cost.sampling = ParseSamplingMode(v); },
               [&c] { return ToString(c.cost.sampling); }});
  real("cost", "epsilon", c.cost.epsilon);
  f.push_back({"cost", "out_of_bounds", [&c](const std::string& v) { c.cost.out_of_bounds = ParseOutOfBoundsPolicy(v); },
               [&c] { return ToString(c.cost.out_of_bounds); }});
  f.push_back({"cost", "support", [&c](const std::string& v) { c.cost.support = ParseVoxelSupport(v); },
               [&c] { return ToString(c.cost.support); }});

  integer("es", "population_size", c.es.population_size);
  degrees("es", "initial_sigma_angles_deg", c.es.initial_sigma_angles);
  real("es", "initial_sigma_trans_mm", c.es.initial_sigma_trans);
  integer("es", "max_generations", c.es.max_generations);
  real("es", "tol", c.es.tol);
  integer("es", "window", c.es.window);
  f.push_back({"es", "free", [&c](const std::string& v) { c.es.free = ParseMask(v, "free"); },
               [&c] { return FormatMask(c.es.free); }});

  f.push_back({"scenario", "phantom", [&c](const std::string& v) { c.scenario.phantom = v; },
               [&c] { return c.scenario.phantom; }});
  real("scenario", "yaw_deg", c.scenario.yaw_deg);
  real("scenario", "pitch_deg", c.scenario.pitch_deg);
  real("scenario", "trans_mm", c.scenario.trans);
  real("scenario", "roll_jitter_deg", c.scenario.roll_jitter_deg);
  seed("scenario", "truth_seed", c.scenario.truth_seed);
  integer("scenario", "perturb_count", c.scenario.perturb_count);
  real("scenario", "perturb_delta_deg", c.scenario.perturb_delta_deg);
  seed("scenario", "perturb_seed", c.scenario.perturb_seed);
  real("scenario", "flip_rate", c.scenario.flip_rate);
  integer("scenario", "blur_radius_px", c.scenario.blur_radius);
  seed("scenario", "noise_seed", c.scenario.noise_seed);
  vec("scenario", "fg_color", c.scenario.fg_color);
  vec("scenario", "bg_color", c.scenario.bg_color);
  real("scenario", "photo_noise", c.scenario.photo_noise);

  real("reconstruct", "iso", c.reconstruct.iso);
  f.push_back({"reconstruct", "ply_format",
               [&c](const std::string& v) {
                 if (v == "ascii") c.reconstruct.ply_format = PlyFormat::kAscii;
                 else if (v == "binary") c.reconstruct.ply_format = PlyFormat::kBinaryLittleEndian;
                 else throw InvalidParameter("ply_format: expected ascii or binary, got '" + v + "'");
               },
               [&c] { return std::string(c.reconstruct.ply_format == PlyFormat::kAscii ? "ascii" : "binary"); }});

  seed("run", "seed", c.seed);
  return f;
}

}  // namespace

std::string FormatDouble(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

RunConfig DefaultConfig() {
  RunConfig c;
  c.es.free.trans = false;
  c.es.seed = c.seed;
  return c;
}

RunConfig ParseConfig(std::istream& in, const std::filesystem::path& base_dir) {
  // '#' comment lines are accepted alongside ';'; blanking them keeps line numbers.
  std::stringstream filtered;
  for (std::string line; std::getline(in, line);) {
    const auto first = line.find_first_not_of(" \t");
    filtered << (first != std::string::npos && line[first] == '#' ? "" : line) << '\n';
  }
  pt::ptree tree;
  try {
    pt::read_ini(filtered, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidParameter("configuration syntax error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig config = DefaultConfig();
  auto fields = Bind(config, base_dir);
  std::map<std::string, std::map<std::string, Field*>> index;
  for (auto& f : fields) index[f.section][f.key] = &f;

  for (const auto& [section, body] : tree) {
    if (body.empty()) throw InvalidParameter("configuration key '" + section + "' is outside any [section]");
    const auto sec = index.find(section);
    if (sec == index.end()) throw InvalidParameter("unknown configuration section [" + section + "]");
    for (const auto& [key, value] : body) {
      const auto field = sec->second.find(key);
      if (field == sec->second.end())
        throw InvalidParameter("unknown configuration key '" + key + "' in [" + section + "]");
      field->second->set(value.get_value<std::string>());
    }
  }
  config.es.seed = config.seed;
  return config;
}

RunConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read configuration file " + path.string());
  RunConfig config = ParseConfig(in, path.parent_path());
  ValidateConfig(config);
  return config;
}

std::string FormatConfig(const RunConfig& config) {
  RunConfig copy = config;
  const auto fields = Bind(copy, {});
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields) {
    if (f.section != section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = " << f.get() << '\n';
  }
  return out.str();
}

void ValidateConfig(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidParameter(what);
  };
  const CameraIntrinsics k = MakeIntrinsics(c);
  require(c.intrinsics.image_width >= 1 && c.intrinsics.image_height >= 1, "image_width and image_height must be >= 1");
  k.CheckAgainstImage(c.intrinsics.image_width, c.intrinsics.image_height);
  const VoxelGrid grid = MakeGrid(c);
  require(c.rig.views >= 2, "rig views must be >= 2");
  require(std::isfinite(c.rig.delta_omega_deg), "delta_omega_deg must be finite");
  require(c.rig.nominal_distance > 0.0, "nominal_distance_mm must be positive");
  require(c.cost.epsilon > 0.0 && c.cost.epsilon < 0.5, "cost epsilon must lie in (0, 0.5)");
  CheckESConfig(c.es);
  require(c.es.free.yaw || c.es.free.pitch || c.es.free.trans || c.es.free.rolls, "es free must name at least one group");
  require(c.scenario.perturb_count >= 0 && c.scenario.perturb_count <= c.rig.views - 1,
          "perturb_count must lie in [0, views - 1]");
  require(c.scenario.roll_jitter_deg >= 0.0, "roll_jitter_deg must be >= 0");
  require(c.scenario.photo_noise >= 0.0, "photo_noise must be >= 0");
  for (const Rgb* color : {&c.scenario.fg_color, &c.scenario.bg_color})
    require((color->array() >= 0.0).all() && (color->array() <= 1.0).all(), "scenario colors must lie in [0, 1]");
  CheckScenario(MakeScenario(c));
  CheckPhantom(MakePhantom(c), grid);
  require(c.reconstruct.iso > 0.0 && c.reconstruct.iso < 1.0, "iso must lie in (0, 1)");
}

CameraIntrinsics MakeIntrinsics(const RunConfig& c) {
  const auto& i = c.intrinsics;
  return BuildIntrinsics(i.focal_length, i.scale_x, i.scale_y, i.principal_x, i.principal_y);
}

CameraRig MakeRig(const RunConfig& c) { return {MakeIntrinsics(c), c.rig.nominal_distance}; }

VoxelGrid MakeGrid(const RunConfig& c) { return InitGrid(c.grid.center, c.grid.half_extent, c.grid.resolution); }

ScenarioTruth MakeScenario(const RunConfig& c) {
  ScenarioTruth t;
  const auto& s = c.scenario;
  t.theta_gt = ScenarioTheta(c.rig.views, DegToRad(s.yaw_deg), DegToRad(s.pitch_deg), s.trans,
                             DegToRad(s.roll_jitter_deg), s.truth_seed);
  t.rig = MakeRig(c);
  t.grid = MakeGrid(c);
  t.noise = {s.flip_rate, s.blur_radius, s.noise_seed};
  t.image_width = c.intrinsics.image_width;
  t.image_height = c.intrinsics.image_height;
  return t;
}

Phantom MakePhantom(const RunConfig& c) {
  if (c.scenario.phantom == "fish") return FishPhantom();
  if (c.scenario.phantom == "sphere") {
    Phantom p;
    p.components.push_back({Vec3::Zero(), Vec3::Constant(0.5), Mat3::Identity()});
    return p;
  }
  throw InvalidParameter("phantom: expected fish or sphere, got '" + c.scenario.phantom + "'");
}

}  // namespace circcal
