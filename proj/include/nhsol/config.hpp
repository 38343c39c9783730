#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nhsol/frames.hpp"
#include "nhsol/geometry.hpp"
#include "nhsol/identities.hpp"
#include "nhsol/spectral.hpp"

namespace nhsol {

// Validation failure; `path` is the dotted field path, e.g. "flow.level".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& msg)
      : std::runtime_error("config error at `" + path + "`: " + msg), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct SpaceConfig {
  std::string kind;
  int n = 0;
  int m = 0;
  Space space;
};

struct GeometryConfig {
  std::vector<BundlePoint> points;  // explicit or drawn from the box
  bool sampled = false;
  std::uint64_t seed = 0;
  double tol = 1e-6;
};

enum class CurvatureSource { Manual, FromGeometry };

struct FlowConfig {
  char side = 'h';
  int level = 1;
  int p = 0;
  Grid1D grid;
  std::optional<double> dt;  // empty: auto
  double dt_factor = 0.05;
  double t_end = 1.0;
  double snapshot_interval = 0.0;
  CurvatureSource source = CurvatureSource::Manual;
  double R_const = 0.0;
  Gauge gauge = Gauge::Line;
  std::vector<std::string> initial_text;
  std::vector<Expr> initial;  // functions of l (x1) and Lambda (x2)
  Eigen::VectorXd anchor;     // -1 flow frame at l = 0
};

using IdentityConfig = IdentitySettings;

struct OutputConfig {
  std::filesystem::path directory = "out";
  bool json = true;
  bool csv = true;
};

struct RunConfig {
  nlohmann::json raw;
  std::optional<SpaceConfig> space;
  std::optional<GeometryConfig> geometry;
  std::optional<FlowConfig> flow;
  IdentityConfig identity;
  OutputConfig output;
};

// Overrides from the command line, applied before validation-dependent steps.
struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
};

RunConfig load_config(const nlohmann::json& doc, const Overrides& ov = {});
RunConfig load_config_file(const std::filesystem::path& path, const Overrides& ov = {});

// Samples the initial field expressions on the flow grid.
Field initial_field(const FlowConfig& flow);

}  // namespace nhsol
