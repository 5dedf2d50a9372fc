// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "artbox/scenegen.hpp"
#include "artbox/types.hpp"

namespace artbox {

// JSONL record layout
// -------------------
// Proposal rows (one JSON object per line):
//   {"run": 0,                      // optional; which detector pass produced it
//    "pose": {"rotation": [r00..r22 row-major], "center": [x,y,z], "size": [sx,sy,sz]},
//    "joint": {"type": "fixed|revolute|prismatic", "axis": [..], "origin": [..],
//              "state_current": v, "state_max": v, "state_unit": "deg|m|none"},
//    "joint_type_probs": [fixed, revolute, prismatic, background],
//    "category_probs": [..], "embedding": [..]}
// Revolute states are stored in degrees on disk and radians in memory;
// prismatic states are meters everywhere; fixed joints carry "none".
//
// Truth rows are tagged: {"record": "instance", "instance_id": i, "category_id": c}
// or {"record": "part", "pose": .., "joint": .., "category_id": c, "instance_id": i,
//     "shape": {"kind": "box"} | {"kind": "lshape", "cut": [cx, cz]}, "embedding": [..]}.

using OrderedJson = nlohmann::ordered_json;

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline OrderedJson vec_to_json(const Vec3& v) { return OrderedJson{v.x(), v.y(), v.z()}; }

inline Vec3 vec_from_json(const OrderedJson& j) {
  if (!j.is_array() || j.size() != 3) throw IoError("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline OrderedJson vecx_to_json(const VecX& v) {
  OrderedJson arr = OrderedJson::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline VecX vecx_from_json(const OrderedJson& j) {
  if (!j.is_array()) throw IoError("expected an array");
  VecX v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace detail

inline OrderedJson pose_to_json(const PoseSize& pose) {
  OrderedJson rot = OrderedJson::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(pose.rotation(r, c));
  return OrderedJson{{"rotation", rot},
                     {"center", detail::vec_to_json(pose.center)},
                     {"size", detail::vec_to_json(pose.size)}};
}

inline PoseSize pose_from_json(const OrderedJson& j) {
  PoseSize pose;
  const auto& rot = j.at("rotation");
  if (!rot.is_array() || rot.size() != 9) throw IoError("rotation must hold 9 values");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) pose.rotation(r, c) = rot[r * 3 + c].get<double>();
  pose.center = detail::vec_from_json(j.at("center"));
  pose.size = detail::vec_from_json(j.at("size"));
  return pose;
}

inline OrderedJson joint_to_json(const JointParams& joint) {
  const char* unit = joint.type == JointType::Revolute ? "deg"
                     : joint.type == JointType::Prismatic ? "m"
                                                          : "none";
  const double to_disk = joint.type == JointType::Revolute ? rad_to_deg(1.0) : 1.0;
  return OrderedJson{{"type", joint_type_name(joint.type)},
                     {"axis", detail::vec_to_json(joint.axis)},
                     {"origin", detail::vec_to_json(joint.origin)},
                     {"state_current", joint.state_current * to_disk},
                     {"state_max", joint.state_max * to_disk},
                     {"state_unit", unit}};
}

inline JointParams joint_from_json(const OrderedJson& j) {
  JointParams joint;
  const std::string type = j.at("type").get<std::string>();
  if (type == "fixed") joint.type = JointType::Fixed;
  else if (type == "revolute") joint.type = JointType::Revolute;
  else if (type == "prismatic") joint.type = JointType::Prismatic;
  else throw IoError("unknown joint type '" + type + "'");
  joint.axis = detail::vec_from_json(j.at("axis"));
  joint.origin = detail::vec_from_json(j.at("origin"));
  const double from_disk = joint.type == JointType::Revolute ? deg_to_rad(1.0) : 1.0;
  joint.state_current = j.at("state_current").get<double>() * from_disk;
  joint.state_max = j.at("state_max").get<double>() * from_disk;
  return joint;
}

inline OrderedJson proposal_to_json(const PartProposal& p) {
  OrderedJson probs = OrderedJson::array();
  for (int i = 0; i < 4; ++i) probs.push_back(p.joint_type_probs[i]);
  return OrderedJson{{"pose", pose_to_json(p.pose)},
                     {"joint", joint_to_json(p.joint)},
                     {"joint_type_probs", probs},
                     {"category_probs", detail::vecx_to_json(p.category_probs)},
                     {"embedding", detail::vecx_to_json(p.embedding)}};
}

inline PartProposal proposal_from_json(const OrderedJson& j) {
  PartProposal p;
  p.pose = pose_from_json(j.at("pose"));
  p.joint = joint_from_json(j.at("joint"));
  const auto& probs = j.at("joint_type_probs");
  if (!probs.is_array() || probs.size() != 4)
    throw IoError("joint_type_probs must hold 4 values");
  for (int i = 0; i < 4; ++i) p.joint_type_probs[i] = probs[i].get<double>();
  p.category_probs = detail::vecx_from_json(j.at("category_probs"));
  p.embedding = detail::vecx_from_json(j.at("embedding"));
  return p;
}

inline OrderedJson shape_to_json(const AnalyticShape& shape) {
  if (shape.kind == AnalyticShape::Kind::Box) return OrderedJson{{"kind", "box"}};
  return OrderedJson{{"kind", "lshape"}, {"cut", OrderedJson{shape.cut_x, shape.cut_z}}};
}

inline AnalyticShape shape_from_json(const OrderedJson& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "box") return AnalyticShape::box();
  if (kind == "lshape") {
    const auto& cut = j.at("cut");
    if (!cut.is_array() || cut.size() != 2) throw IoError("lshape cut must hold 2 values");
    return AnalyticShape::lshape(cut[0].get<double>(), cut[1].get<double>());
  }
  throw IoError("unknown shape kind '" + kind + "'");
}

inline OrderedJson truth_part_to_json(const TruthPart& part) {
  return OrderedJson{{"record", "part"},
                     {"pose", pose_to_json(part.pose)},
                     {"joint", joint_to_json(part.joint)},
                     {"category_id", part.category_id},
                     {"instance_id", part.instance_id},
                     {"shape", shape_to_json(part.shape)},
                     {"embedding", detail::vecx_to_json(part.embedding)}};
}

inline TruthPart truth_part_from_json(const OrderedJson& j) {
  TruthPart part;
  part.pose = pose_from_json(j.at("pose"));
  part.joint = joint_from_json(j.at("joint"));
  part.category_id = j.at("category_id").get<int>();
  part.instance_id = j.at("instance_id").get<int>();
  part.shape = shape_from_json(j.at("shape"));
  part.embedding = detail::vecx_from_json(j.at("embedding"));
  return part;
}

// ---------------------------------------------------------------------------
// Streams of JSONL rows.
// ---------------------------------------------------------------------------

inline void write_scene(std::ostream& os, const SceneTruth& scene) {
  for (const auto& inst : scene.instances)
    os << OrderedJson{{"record", "instance"},
                      {"instance_id", inst.instance_id},
                      {"category_id", inst.category_id}}
              .dump()
       << "\n";
  for (const auto& part : scene.parts) os << truth_part_to_json(part).dump() << "\n";
}

inline SceneTruth read_scene(std::istream& is) {
  SceneTruth scene;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    OrderedJson j;
    try {
      j = OrderedJson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string record = j.value("record", "part");
    if (record == "instance") {
      TruthInstance inst;
      inst.instance_id = j.at("instance_id").get<int>();
      inst.category_id = j.at("category_id").get<int>();
      scene.instances.push_back(inst);
    } else if (record == "part") {
      scene.parts.push_back(truth_part_from_json(j));
    } else {
      throw IoError("line " + std::to_string(line_no) + ": unknown record '" + record + "'");
    }
  }
  return scene;
}

// Fused or standalone proposals: no run key.
inline void write_proposals(std::ostream& os, std::span<const PartProposal> proposals) {
  for (const auto& p : proposals) os << proposal_to_json(p).dump() << "\n";
}

// Multi-run proposals: each row carries its run index.
inline void write_runs(std::ostream& os, std::span<const std::vector<PartProposal>> runs) {
  for (std::size_t r = 0; r < runs.size(); ++r)
    for (const auto& p : runs[r]) {
      OrderedJson j = proposal_to_json(p);
      OrderedJson row{{"run", static_cast<int>(r)}};
      row.update(j);
      os << row.dump() << "\n";
    }
}

// Rows with "run" keys group into dense runs 0..max; rows without all land in
// run 0. Empty trailing runs are preserved when n_runs_hint exceeds the data.
inline std::vector<std::vector<PartProposal>> read_runs(std::istream& is,
                                                        int n_runs_hint = 0) {
  std::vector<std::vector<PartProposal>> runs(std::max(n_runs_hint, 1));
  std::string line;
  int line_no = 0;
  bool any = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    OrderedJson j;
    try {
      j = OrderedJson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    }
    const int run = j.value("run", 0);
    if (run < 0) throw IoError("line " + std::to_string(line_no) + ": negative run");
    if (run >= static_cast<int>(runs.size())) runs.resize(run + 1);
    runs[run].push_back(proposal_from_json(j));
    any = true;
  }
  if (!any) runs.resize(std::max(n_runs_hint, 0));
  return runs;
}

// All proposal rows as one flat list, run keys ignored.
inline std::vector<PartProposal> read_proposals(std::istream& is) {
  std::vector<PartProposal> flat;
  for (auto& run : read_runs(is))
    for (auto& p : run) flat.push_back(std::move(p));
  return flat;
}

// ---------------------------------------------------------------------------
// Config files: JSON, or a flat TOML subset (# comments, [section] headers,
// key = value with numbers / booleans / quoted strings).
// ---------------------------------------------------------------------------

inline OrderedJson parse_config_text(const std::string& text) {
  // JSON when the first significant character opens an object.
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    if (ch == '{') {
      try {
        return OrderedJson::parse(text);
      } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("config JSON: ") + e.what());
      }
    }
    break;
  }
  OrderedJson root = OrderedJson::object();
  OrderedJson* section = &root;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  auto strip = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw IoError("config line " + std::to_string(line_no) +
                                            ": unterminated section header");
      const std::string name = strip(line.substr(1, line.size() - 2));
      if (name.empty()) throw IoError("config line " + std::to_string(line_no) +
                                      ": empty section name");
      root[name] = OrderedJson::object();
      section = &root[name];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw IoError("config line " + std::to_string(line_no) + ": empty key or value");
    if (value == "true" || value == "false") {
      (*section)[key] = value == "true";
    } else if (value.front() == '"' && value.back() == '"' && value.size() >= 2) {
      (*section)[key] = value.substr(1, value.size() - 2);
    } else {
      try {
        std::size_t used = 0;
        if (value.find_first_of(".eE") == std::string::npos) {
          const long long n = std::stoll(value, &used);
          if (used != value.size()) throw std::invalid_argument(value);
          (*section)[key] = n;
        } else {
          const double d = std::stod(value, &used);
          if (used != value.size()) throw std::invalid_argument(value);
          (*section)[key] = d;
        }
      } catch (const std::exception&) {
        throw IoError("config line " + std::to_string(line_no) + ": bad value '" + value +
                      "'");
      }
    }
  }
  return root;
}

inline OrderedJson load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// Overlay recognized keys onto a GenConfig; unknown keys are reported.
inline GenConfig gen_config_from_json(const OrderedJson& j,
                                      std::vector<std::string>* unknown = nullptr) {
  GenConfig cfg;
  auto grab = [&](const OrderedJson& obj, const char* key, auto& field) {
    if (obj.contains(key)) field = obj.at(key).get<std::decay_t<decltype(field)>>();
  };
  grab(j, "seed", cfg.seed);
  grab(j, "n_instances", cfg.n_instances);
  grab(j, "parts_per_instance", cfg.parts_per_instance);
  grab(j, "revolute_fraction", cfg.revolute_fraction);
  grab(j, "lshape_rate", cfg.lshape_rate);
  grab(j, "tau_z_prime", cfg.tau_z_prime);
  grab(j, "n_runs", cfg.n_runs);
  grab(j, "fp_rate", cfg.fp_rate);
  grab(j, "fn_rate", cfg.fn_rate);
  grab(j, "thin_dup_rate", cfg.thin_dup_rate);
  static const std::vector<std::string> top_keys = {
      "seed",    "n_instances", "parts_per_instance", "revolute_fraction",
      "lshape_rate", "tau_z_prime", "n_runs",         "fp_rate",
      "fn_rate", "thin_dup_rate", "noise"};
  static const std::vector<std::string> noise_keys = {
      "center_sigma", "rotation_sigma",    "size_sigma", "state_sigma",
      "embed_sigma",  "objectness_spread", "prob_smear"};
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    grab(n, "center_sigma", cfg.noise.center_sigma);
    grab(n, "rotation_sigma", cfg.noise.rotation_sigma);
    grab(n, "size_sigma", cfg.noise.size_sigma);
    grab(n, "state_sigma", cfg.noise.state_sigma);
    grab(n, "embed_sigma", cfg.noise.embed_sigma);
    grab(n, "objectness_spread", cfg.noise.objectness_spread);
    grab(n, "prob_smear", cfg.noise.prob_smear);
    if (unknown)
      for (auto it = n.begin(); it != n.end(); ++it)
        if (std::find(noise_keys.begin(), noise_keys.end(), it.key()) == noise_keys.end())
          unknown->push_back("noise." + it.key());
  }
  if (unknown)
    for (auto it = j.begin(); it != j.end(); ++it)
      if (std::find(top_keys.begin(), top_keys.end(), it.key()) == top_keys.end() &&
          it.key() != "fusion")
        unknown->push_back(it.key());
  return cfg;
}

// Overlay recognized keys (top level or under [fusion]) onto a KpfConfig.
inline KpfConfig kpf_config_from_json(const OrderedJson& j) {
  KpfConfig cfg;
  const OrderedJson& src = j.contains("fusion") ? j.at("fusion") : j;
  auto grab = [&](const char* key, auto& field) {
    if (src.contains(key)) field = src.at(key).get<std::decay_t<decltype(field)>>();
  };
  grab("tau_iou", cfg.tau_iou);
  grab("tau_obj", cfg.tau_obj);
  grab("tau_obj_final", cfg.tau_obj_final);
  grab("tau_kiou", cfg.tau_kiou);
  grab("tau_scaled", cfg.tau_scaled);
  grab("tau_count", cfg.tau_count);
  grab("n_q", cfg.n_q);
  return cfg;
}

}  // namespace artbox
