#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgc/evaluation.hpp"
#include "fgc/fuzzy_growcut.hpp"
#include "fgc/growcut.hpp"
#include "fgc/mlp.hpp"
#include "fgc/phantom.hpp"
#include "fgc/seed_annealing.hpp"

namespace fgc {

using json = nlohmann::ordered_json;

/// Malformed or inconsistent configuration / document.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                       const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out, const char* what) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(what) + ": bad value for '" + key + "'");
  }
}

}  // namespace detail

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

inline void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

// PhantomSpec

inline void to_json(json& j, const PhantomSpec& s) {
  j = json{{"kind", to_string(s.kind)},       {"width", s.width},
           {"height", s.height},              {"center_x", s.center_x},
           {"center_y", s.center_y},          {"radius_x", s.radius_x},
           {"radius_y", s.radius_y},          {"angle", s.angle},
           {"spicules", s.spicules},          {"amplitude", s.amplitude},
           {"foreground", s.foreground},      {"background", s.background},
           {"noise_sigma", s.noise_sigma},    {"rng_seed", s.rng_seed}};
}

inline void from_json(const json& j, PhantomSpec& s) {
  constexpr const char* w = "phantom spec";
  detail::check_keys(j, {"kind", "width", "height", "center_x", "center_y", "radius_x",
                         "radius_y", "angle", "spicules", "amplitude", "foreground",
                         "background", "noise_sigma", "rng_seed"},
                     w);
  std::string kind = to_string(s.kind);
  detail::read_opt(j, "kind", kind, w);
  try {
    s.kind = parse_shape(kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  detail::read_opt(j, "width", s.width, w);
  detail::read_opt(j, "height", s.height, w);
  detail::read_opt(j, "center_x", s.center_x, w);
  detail::read_opt(j, "center_y", s.center_y, w);
  detail::read_opt(j, "radius_x", s.radius_x, w);
  s.radius_y = s.radius_x;
  detail::read_opt(j, "radius_y", s.radius_y, w);
  detail::read_opt(j, "angle", s.angle, w);
  detail::read_opt(j, "spicules", s.spicules, w);
  detail::read_opt(j, "amplitude", s.amplitude, w);
  detail::read_opt(j, "foreground", s.foreground, w);
  detail::read_opt(j, "background", s.background, w);
  detail::read_opt(j, "noise_sigma", s.noise_sigma, w);
  detail::read_opt(j, "rng_seed", s.rng_seed, w);
}

// Seeds

inline const char* to_string(Label l) {
  switch (l) {
    case Label::kUnlabeled: return "unlabeled";
    case Label::kObject: return "object";
    case Label::kBackground: return "background";
  }
  return "?";
}

inline Label parse_label(const std::string& s) {
  if (s == "object") return Label::kObject;
  if (s == "background") return Label::kBackground;
  throw ConfigError("seed label must be 'object' or 'background', got '" + s + "'");
}

inline json seeds_to_json(std::span<const Seed> seeds) {
  json arr = json::array();
  for (const auto& s : seeds) arr.push_back({{"x", s.at.x}, {"y", s.at.y}, {"label", to_string(s.label)}});
  return arr;
}

/// Accepts {"seeds": [...]} or a bare array; entries are {"x","y"[,"label"]}
/// objects or [x, y] pairs. Missing labels mean Object.
inline std::vector<Seed> seeds_from_json(const json& doc) {
  const json& arr = doc.is_object() && doc.contains("seeds") ? doc.at("seeds") : doc;
  if (!arr.is_array()) throw ConfigError("seeds: expected an array");
  std::vector<Seed> out;
  for (const auto& e : arr) {
    Seed s;
    try {
      if (e.is_array() && e.size() == 2) {
        s.at = {e[0].get<int>(), e[1].get<int>()};
      } else if (e.is_object()) {
        detail::check_keys(e, {"x", "y", "label"}, "seed");
        s.at = {e.at("x").get<int>(), e.at("y").get<int>()};
        if (e.contains("label")) s.label = parse_label(e.at("label").get<std::string>());
      } else {
        throw ConfigError("seeds: entry must be [x, y] or {x, y, label}");
      }
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("seeds: coordinates must be integers");
    }
    out.push_back(s);
  }
  return out;
}

// Models and configs

inline void to_json(json& j, const GaussianModel& m) {
  j = json{{"x_m", m.x_m},         {"y_m", m.y_m},         {"s_x", m.s_x},
           {"s_y", m.s_y},         {"alpha_x", m.alpha_x}, {"alpha_y", m.alpha_y}};
}

inline void to_json(json& j, const SAConfig& c) {
  j = json{{"n_seeds", c.n_seeds},
           {"alpha", c.alpha},
           {"beta", c.beta},
           {"t0", c.t0},
           {"cooling", c.cooling},
           {"iters_per_temp", c.iters_per_temp},
           {"t_min", c.t_min},
           {"distance", to_string(c.distance)}};
}

inline void from_json(const json& j, SAConfig& c) {
  constexpr const char* w = "annealing config";
  detail::check_keys(j, {"n_seeds", "alpha", "beta", "t0", "cooling", "iters_per_temp", "t_min",
                         "distance", "rng_seed"},
                     w);
  detail::read_opt(j, "n_seeds", c.n_seeds, w);
  detail::read_opt(j, "alpha", c.alpha, w);
  detail::read_opt(j, "beta", c.beta, w);
  detail::read_opt(j, "t0", c.t0, w);
  detail::read_opt(j, "cooling", c.cooling, w);
  detail::read_opt(j, "iters_per_temp", c.iters_per_temp, w);
  detail::read_opt(j, "t_min", c.t_min, w);
  detail::read_opt(j, "rng_seed", c.rng_seed, w);
  std::string mode = to_string(c.distance);
  detail::read_opt(j, "distance", mode, w);
  try {
    c.distance = parse_distance_mode(mode);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline void to_json(json& j, const FuzzyParams& p) {
  j = json{{"alpha_x", p.alpha_x},
           {"alpha_y", p.alpha_y},
           {"max_iter", p.max_iter ? json(*p.max_iter) : json(nullptr)},
           {"neighborhood", p.neighborhood == Neighborhood::kMoore ? "moore" : "von-neumann"}};
}

inline void from_json(const json& j, FuzzyParams& p) {
  constexpr const char* w = "fuzzy config";
  detail::check_keys(j, {"alpha_x", "alpha_y", "max_iter", "neighborhood"}, w);
  detail::read_opt(j, "alpha_x", p.alpha_x, w);
  detail::read_opt(j, "alpha_y", p.alpha_y, w);
  if (j.contains("max_iter") && !j.at("max_iter").is_null()) {
    int v = 0;
    detail::read_opt(j, "max_iter", v, w);
    p.max_iter = v;
  }
  std::string nb = "moore";
  detail::read_opt(j, "neighborhood", nb, w);
  if (nb == "moore") p.neighborhood = Neighborhood::kMoore;
  else if (nb == "von-neumann" || nb == "vonneumann") p.neighborhood = Neighborhood::kVonNeumann;
  else throw ConfigError("fuzzy config: unknown neighborhood '" + nb + "'");
}

inline void to_json(json& j, const TrainConfig& c) {
  j = json{{"learning_rate", c.learning_rate},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size}};
}

inline void from_json(const json& j, TrainConfig& c) {
  constexpr const char* w = "train config";
  detail::check_keys(j, {"learning_rate", "epochs", "batch_size", "rng_seed"}, w);
  detail::read_opt(j, "learning_rate", c.learning_rate, w);
  detail::read_opt(j, "epochs", c.epochs, w);
  detail::read_opt(j, "batch_size", c.batch_size, w);
  detail::read_opt(j, "rng_seed", c.rng_seed, w);
}

inline void to_json(json& j, const CVReport& r) {
  j = json{{"folds", r.fold_accuracy}, {"mean", r.mean}, {"std", r.stddev}, {"text", r.str()}};
}

// MLP model document

inline constexpr int kModelFormatVersion = 1;

inline json model_to_json(const MLPModel& m) {
  json layers = json::array();
  for (const auto& l : m.layers) {
    json rows = json::array();
    for (int o = 0; o < l.out; ++o) {
      rows.push_back(std::vector<double>(l.w.begin() + static_cast<std::ptrdiff_t>(o) * l.in,
                                         l.w.begin() + static_cast<std::ptrdiff_t>(o + 1) * l.in));
    }
    layers.push_back({{"inputs", l.in}, {"outputs", l.out}, {"weights", rows}, {"bias", l.b}});
  }
  return json{{"format", "fgc-mlp"},
              {"version", kModelFormatVersion},
              {"architecture", MLPModel::kLayout},
              {"hidden_activation", "sigmoid"},
              {"output_activation", "softmax"},
              {"standardization", {{"mean", m.standardizer.mean}, {"scale", m.standardizer.scale}}},
              {"layers", layers}};
}

inline MLPModel model_from_json(const json& j) {
  try {
    if (j.at("format") != "fgc-mlp") throw ConfigError("model: not an fgc-mlp document");
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw ConfigError("model: unsupported version " + j.at("version").dump());
    }
    if (j.at("architecture").get<std::array<int, 4>>() != MLPModel::kLayout) {
      throw ConfigError("model: architecture must be 64-30-30-2");
    }
    MLPModel m;
    m.standardizer.mean = j.at("standardization").at("mean").get<std::vector<double>>();
    m.standardizer.scale = j.at("standardization").at("scale").get<std::vector<double>>();
    const auto& layers = j.at("layers");
    if (!layers.is_array() || layers.size() != 3) throw ConfigError("model: expected 3 layers");
    for (std::size_t k = 0; k < 3; ++k) {
      Layer& l = m.layers[k];
      const auto rows = layers[k].at("weights").get<std::vector<std::vector<double>>>();
      if (rows.size() != static_cast<std::size_t>(l.out)) throw ConfigError("model: bad weight rows");
      for (int o = 0; o < l.out; ++o) {
        if (rows[o].size() != static_cast<std::size_t>(l.in)) {
          throw ConfigError("model: bad weight row length");
        }
        std::copy(rows[o].begin(), rows[o].end(), l.w.begin() + static_cast<std::ptrdiff_t>(o) * l.in);
      }
      l.b = layers[k].at("bias").get<std::vector<double>>();
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace fgc
