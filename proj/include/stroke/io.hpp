#pragma once

// On-disk formats: network weights (JSON), metrics (JSON), training log
// (JSON lines), run metadata and trajectory CSV.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stroke/agent.hpp"
#include "stroke/metrics.hpp"
#include "stroke/nn.hpp"
#include "stroke/physics.hpp"

namespace stroke::io {

using json = nlohmann::json;

inline constexpr int kWeightsFormatVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes through a temporary file so readers never see a partial file.
inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// --- networks ---------------------------------------------------------------

inline json to_json(const nn::Architecture& a) {
  return {{"widths", a.widths},
          {"hidden_activation", std::string(nn::to_string(a.hidden))},
          {"output_activation", std::string(nn::to_string(a.output))}};
}

inline nn::Architecture architecture_from_json(const json& j) {
  try {
    nn::Architecture a;
    a.widths = j.at("widths").get<std::vector<int>>();
    a.hidden = nn::activation_from_string(j.at("hidden_activation").get<std::string>());
    a.output = nn::activation_from_string(j.at("output_activation").get<std::string>());
    a.validate();
    return a;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad architecture: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("bad architecture: ") + e.what());
  }
}

/// Weight matrices are stored row-major.
inline json to_json(const nn::Mlp& net) {
  json layers = json::array();
  for (const nn::Layer& l : net.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"weight", w},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return {{"architecture", to_json(net.arch)}, {"layers", layers}};
}

inline nn::Mlp mlp_from_json(const json& j) {
  nn::Mlp net;
  net.arch = architecture_from_json(j.at("architecture"));
  const json& layers = j.at("layers");
  if (!layers.is_array() || layers.size() != net.arch.layer_count())
    throw FormatError("layer count does not match the architecture");
  try {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const json& l = layers[i];
      const int in = net.arch.widths[i];
      const int out = net.arch.widths[i + 1];
      if (l.at("rows").get<int>() != out || l.at("cols").get<int>() != in)
        throw FormatError("layer " + std::to_string(i) + " shape does not match the architecture");
      const auto w = l.at("weight").get<std::vector<double>>();
      const auto b = l.at("bias").get<std::vector<double>>();
      if (w.size() != static_cast<std::size_t>(in) * out || b.size() != static_cast<std::size_t>(out))
        throw FormatError("layer " + std::to_string(i) + " has the wrong number of parameters");
      nn::Layer layer{Mat(out, in), Vec(out)};
      for (int r = 0; r < out; ++r)
        for (int c = 0; c < in; ++c) layer.weight(r, c) = w[static_cast<std::size_t>(r) * in + c];
      for (int r = 0; r < out; ++r) layer.bias[r] = b[static_cast<std::size_t>(r)];
      net.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad layer data: ") + e.what());
  }
  if (!net.all_finite()) throw FormatError("weights contain non-finite values");
  return net;
}

struct Weights {
  nn::Mlp actor;
  std::vector<nn::Mlp> critics;
};

inline json to_json(const Weights& w) {
  json critics = json::array();
  for (const auto& c : w.critics) critics.push_back(to_json(c));
  return {{"format_version", kWeightsFormatVersion}, {"actor", to_json(w.actor)}, {"critics", critics}};
}

inline Weights weights_from_json(const json& j) {
  if (!j.is_object() || !j.contains("format_version")) throw FormatError("missing format_version");
  if (!j["format_version"].is_number_integer() || j["format_version"].get<int>() != kWeightsFormatVersion)
    throw FormatError("unsupported weights format_version");
  Weights w;
  try {
    w.actor = mlp_from_json(j.at("actor"));
    for (const json& c : j.at("critics")) w.critics.push_back(mlp_from_json(c));
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad weights file: ") + e.what());
  }
  return w;
}

inline void save_weights(const std::filesystem::path& path, const Learner& l) {
  write_json(path, to_json(Weights{l.actor, l.critics}));
}

/// Loads weights and checks the actor against the expected architecture.
inline Weights load_weights(const std::filesystem::path& path, const nn::Architecture& expected_actor) {
  Weights w = weights_from_json(read_json(path));
  if (!(w.actor.arch == expected_actor)) {
    std::ostringstream msg;
    msg << "weights architecture " << to_json(w.actor.arch).dump() << " does not match the configured "
        << to_json(expected_actor).dump();
    throw FormatError(msg.str());
  }
  return w;
}

// --- metrics and logs -------------------------------------------------------

/// Non-finite values (an error with no reward mass) are written as null.
inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json to_json(const Metrics& m) {
  return {{"episodes", m.episodes},
          {"success_rate", m.success_rate},
          {"eps_d_m", finite_or_null(m.eps_d)},
          {"eps_h_m", finite_or_null(m.eps_h)},
          {"mean_reward", {m.mean_rx, m.mean_ry, m.mean_rh}}};
}

inline Metrics metrics_from_json(const json& j) {
  auto num = [](const json& x) {
    return x.is_null() ? std::numeric_limits<double>::infinity() : x.get<double>();
  };
  Metrics m;
  m.episodes = j.at("episodes").get<long>();
  m.success_rate = j.at("success_rate").get<double>();
  m.eps_d = num(j.at("eps_d_m"));
  m.eps_h = num(j.at("eps_h_m"));
  const auto r = j.at("mean_reward").get<std::vector<double>>();
  if (r.size() != 3) throw FormatError("mean_reward needs three components");
  m.mean_rx = r[0];
  m.mean_ry = r[1];
  m.mean_rh = r[2];
  return m;
}

inline json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},           {"episodes", r.episodes},         {"metrics", to_json(r.metrics)},
          {"mean_q", r.mean_q},         {"critic_loss", r.critic_loss}, {"actor_loss", r.actor_loss}};
}

/// Appends one JSON object per line.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  void write(const json& j) {
    out_ << j.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// --- trajectories -----------------------------------------------------------

inline std::string trajectory_csv(const std::vector<BallState>& states) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "t,px,py,pz,vx,vy,vz,wx,wy,wz\n";
  for (const BallState& s : states) {
    os << s.t << ',' << s.p.x() << ',' << s.p.y() << ',' << s.p.z() << ',' << s.v.x() << ',' << s.v.y() << ','
       << s.v.z() << ',' << s.w.x() << ',' << s.w.y() << ',' << s.w.z() << '\n';
  }
  return os.str();
}

inline void write_trajectory_csv(const std::filesystem::path& path, const std::vector<BallState>& states) {
  write_text(path, trajectory_csv(states));
}

}  // namespace stroke::io
