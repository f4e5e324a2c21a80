#include "entrofuse/documents.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "entrofuse/error.hpp"

namespace entrofuse {

namespace {
using nlohmann::json;
}

const char* pc_mode_name(PcMode mode) {
  switch (mode) {
    case PcMode::kRamped: return "ramped";
    case PcMode::kUniform: return "uniform";
    case PcMode::kAlwaysTournament: return "paper-literal";
  }
  return "ramped";
}

PcMode pc_mode_from_name(const std::string& name) {
  if (name == "ramped") return PcMode::kRamped;
  if (name == "uniform") return PcMode::kUniform;
  if (name == "paper-literal") return PcMode::kAlwaysTournament;
  throw Error(ErrorCode::InvalidConfig,
              "unknown pc mode \"" + name +
                  "\" (expected ramped, uniform or paper-literal)");
}

void SwarmConfig::validate() const {
  if (pop_size < 2) {
    throw Error(ErrorCode::InvalidConfig,
                "pop_size must be >= 2 (the exemplar tournament needs two "
                "distinct particles)");
  }
  if (max_iter < 1) {
    throw Error(ErrorCode::InvalidConfig, "max_iter must be >= 1");
  }
  if (!(v_max_fraction > 0.0 && v_max_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig,
                "v_max_fraction must be in (0, 1]");
  }
  if (!(a1 <= a0)) {
    throw Error(ErrorCode::InvalidConfig, "a1 must be <= a0");
  }
  if (!(c > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "c must be positive");
  }
}

void ThresholdDocument::validate() const {
  if (thresholds.empty()) {
    throw Error(ErrorCode::InvalidConfig, "document holds no thresholds");
  }
  if (class_count < 2) {
    throw Error(ErrorCode::InvalidConfig, "class_count must be >= 2");
  }
  const double bound = std::log(static_cast<double>(class_count));
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    if (!(thresholds[k] >= 0.0 && thresholds[k] <= bound)) {
      std::ostringstream msg;
      msg << "threshold[" << k << "] = " << thresholds[k]
          << " outside [0, ln " << class_count << "]";
      throw Error(ErrorCode::InvalidConfig, msg.str());
    }
  }
  if (!model_names.empty() && model_names.size() != thresholds.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "model_names size does not match thresholds size");
  }
  if (!(achieved_dice >= 0.0 && achieved_dice <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "achieved_dice outside [0, 1]");
  }
}

ThresholdDocument read_threshold_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::HeaderMalformed,
                path.string() + ": not valid JSON (" + e.what() + ")");
  }

  ThresholdDocument out;
  try {
    out.thresholds = doc.at("thresholds").get<std::vector<double>>();
    out.achieved_dice = doc.at("achieved_dice").get<double>();
    out.seed = doc.at("seed").get<std::uint64_t>();
    out.class_count = doc.at("class_count").get<std::size_t>();
    if (doc.contains("model_names")) {
      out.model_names = doc["model_names"].get<std::vector<std::string>>();
    }
    const json& cfg = doc.at("config");
    out.config.pop_size = cfg.at("pop").get<std::size_t>();
    out.config.max_iter = cfg.at("iters").get<std::size_t>();
    out.config.c = cfg.at("c").get<double>();
    out.config.a0 = cfg.at("a0").get<double>();
    out.config.a1 = cfg.at("a1").get<double>();
    out.config.refresh_gap = cfg.at("refresh_gap").get<std::size_t>();
    out.config.v_max_fraction = cfg.at("vmax_frac").get<double>();
    out.config.seed = out.seed;
    out.config.pc_mode = pc_mode_from_name(cfg.at("pc_mode").get<std::string>());
    out.config.inertia_literal = cfg.at("inertia_literal").get<bool>();
    if (doc.contains("run_info")) {
      out.run_info =
          doc["run_info"].get<std::map<std::string, std::string>>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::HeaderMalformed, path.string() + ": " + e.what());
  }
  out.validate();
  return out;
}

void write_threshold_document(const ThresholdDocument& doc,
                              const std::filesystem::path& path) {
  doc.validate();
  json out;
  out["thresholds"] = doc.thresholds;
  out["achieved_dice"] = doc.achieved_dice;
  out["seed"] = doc.seed;
  out["class_count"] = doc.class_count;
  if (!doc.model_names.empty()) out["model_names"] = doc.model_names;
  out["config"] = {
      {"pop", doc.config.pop_size},
      {"iters", doc.config.max_iter},
      {"c", doc.config.c},
      {"a0", doc.config.a0},
      {"a1", doc.config.a1},
      {"refresh_gap", doc.config.refresh_gap},
      {"vmax_frac", doc.config.v_max_fraction},
      {"pc_mode", pc_mode_name(doc.config.pc_mode)},
      {"inertia_literal", doc.config.inertia_literal},
  };
  if (!doc.run_info.empty()) out["run_info"] = doc.run_info;

  std::ofstream fout(path, std::ios::trunc);
  if (!fout) {
    throw Error(ErrorCode::IoFailure,
                "cannot open " + path.string() + " for writing");
  }
  fout << out.dump(2) << "\n";
  fout.flush();
  if (!fout) {
    throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
  }
}

} // namespace entrofuse
