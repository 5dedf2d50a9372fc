// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end for the articulated-part toolkit.
//
//   simulate   config (key=value or JSON) -> truth scene + detector runs, JSONL
//   fuse       detector runs JSONL -> fused proposals JSONL
//   group      proposals JSONL -> instance groups JSONL
//   match      proposals + truth JSONL -> optimal assignment + loss breakdown CSV
//   eval       predictions + truth JSONL -> metric report (JSON + CSV)
//   report     eval JSON files -> aggregate CSV across seeds/scenes
//
// Exit codes: 0 success, 2 invalid data/config/usage, 3 I/O failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "artbox/evaluation.hpp"
#include "artbox/grouping.hpp"
#include "artbox/io.hpp"
#include "artbox/matching.hpp"
#include "artbox/shapespace.hpp"

namespace fs = std::filesystem;
using namespace artbox;

namespace {

// Shortest round-trip decimal representation, identical across runs.
std::string num(double x) { return OrderedJson(x).dump(); }

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input file: " + path);
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path.string());
  return out;
}

void finish_output(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
  std::cout << "wrote " << path.string() << "\n";
}

// Report the first few semantic violations and return false when any exist.
template <typename Seq>
bool report_violations(const Seq& items, const char* what) {
  int shown = 0;
  size_t bad = 0;
  for (size_t i = 0; i < items.size(); ++i) {
    const auto problems = validate(items[i]);
    if (problems.empty()) continue;
    ++bad;
    for (const auto& msg : problems)
      if (shown < 10) {
        std::cerr << what << " " << i << ": " << msg << "\n";
        ++shown;
      }
  }
  if (bad > 0) std::cerr << bad << " invalid " << what << " record(s)\n";
  return bad == 0;
}

bool validate_runs(const std::vector<std::vector<PartProposal>>& runs) {
  for (size_t r = 0; r < runs.size(); ++r)
    if (!report_violations(runs[r], "proposal")) {
      std::cerr << "(in run " << r << ")\n";
      return false;
    }
  return true;
}

// World-space hard occupancy of an oriented box.
OccupancyFn box_occupancy(const PoseSize& pose) {
  return [pose](const Vec3& world) {
    const Vec3 local = pose.rotation.transpose() * (world - pose.center);
    return (local.cwiseAbs().array() <= pose.size.array() / 2.0 + 1e-12).all() ? 1.0 : 0.0;
  };
}

// World-space occupancy of a truth part's analytic shape.
OccupancyFn truth_occupancy(const TruthPart& part) {
  return [part](const Vec3& world) {
    const Vec3 local = part.pose.rotation.transpose() * (world - part.pose.center);
    const Vec3 normalized = local.cwiseQuotient(part.pose.size);
    return part.shape.inside(normalized) ? 1.0 : 0.0;
  };
}

Aabb pair_bounds(const PoseSize& a, const PoseSize& b) {
  Aabb box;
  for (const Vec3& c : cuboid_corners(a)) box.expand(c);
  for (const Vec3& c : cuboid_corners(b)) box.expand(c);
  box.lo -= Vec3::Constant(1e-6);
  box.hi += Vec3::Constant(1e-6);
  return box;
}

// Greedy confidence-descending matching within one scene: each prediction in
// turn claims the unclaimed truth with the smallest corner distance <= tau.
std::vector<std::pair<int, int>> greedy_pairs(const std::vector<PartProposal>& preds,
                                              const std::vector<TruthPart>& truths, double tau) {
  std::vector<int> order(preds.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return preds[a].objectness() > preds[b].objectness();
  });
  std::vector<bool> claimed(truths.size(), false);
  std::vector<std::pair<int, int>> pairs;  // (pred index, truth index)
  for (int p : order) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t t = 0; t < truths.size(); ++t) {
      if (claimed[t]) continue;
      const double d = corner_distance(preds[p].pose, truths[t].pose);
      if (d <= tau && d < best_d) {
        best_d = d;
        best = static_cast<int>(t);
      }
    }
    if (best >= 0) {
      claimed[best] = true;
      pairs.emplace_back(p, best);
    }
  }
  return pairs;
}

// --------------------------------------------------------------------------
// Subcommand implementations. Each returns a process exit code.
// --------------------------------------------------------------------------

struct SimulateOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int run_simulate(const SimulateOpts& opt) {
  GenConfig cfg;
  if (!opt.config_path.empty()) {
    std::vector<std::string> unknown;
    cfg = gen_config_from_json(load_config_file(opt.config_path), &unknown);
    if (!unknown.empty()) {
      for (const auto& key : unknown) std::cerr << "unknown config key: " << key << "\n";
      return 2;
    }
  }
  if (opt.seed_set) cfg.seed = opt.seed;
  const auto problems = validate(cfg);
  if (!problems.empty()) {
    for (const auto& msg : problems) std::cerr << "config: " << msg << "\n";
    return 2;
  }
  const SceneTruth scene = generate_scene(cfg);
  const auto runs = perturb_to_runs(scene, cfg);

  const fs::path scene_path = fs::path(opt.out_dir) / "scene.jsonl";
  auto scene_out = open_output(scene_path);
  write_scene(scene_out, scene);
  finish_output(scene_out, scene_path);

  const fs::path runs_path = fs::path(opt.out_dir) / "runs.jsonl";
  auto runs_out = open_output(runs_path);
  write_runs(runs_out, runs);
  finish_output(runs_out, runs_path);
  return 0;
}

struct FuseOpts {
  std::string runs_path;
  std::string config_path;
  std::string out_dir = ".";
};

int run_fuse(const FuseOpts& opt) {
  KpfConfig cfg;
  bool explicit_nq = false;
  if (!opt.config_path.empty()) {
    const OrderedJson j = load_config_file(opt.config_path);
    cfg = kpf_config_from_json(j);
    const OrderedJson& src = j.contains("fusion") ? j.at("fusion") : j;
    explicit_nq = src.contains("n_q");
  }
  auto in = open_input(opt.runs_path);
  const auto runs = read_runs(in);
  if (!validate_runs(runs)) return 2;
  if (!explicit_nq && !runs.empty()) cfg.n_q = static_cast<int>(runs.size());
  const auto problems = validate(cfg);
  if (!problems.empty()) {
    for (const auto& msg : problems) std::cerr << "config: " << msg << "\n";
    return 2;
  }

  const auto fused = kpf(runs, cfg);
  const fs::path out_path = fs::path(opt.out_dir) / "fused.jsonl";
  auto out = open_output(out_path);
  write_proposals(out, fused);
  finish_output(out, out_path);
  std::cout << "fused " << runs.size() << " runs into " << fused.size() << " proposals\n";
  return 0;
}

struct GroupOpts {
  std::string proposals_path;
  std::string config_path;
  std::string out_dir = ".";
  double tau = 0.0;
  bool tau_set = false;
};

int run_group(const GroupOpts& opt) {
  double threshold = tau_z(0.5);  // matches the generator's default embedding spread
  if (!opt.config_path.empty()) {
    const GenConfig cfg = gen_config_from_json(load_config_file(opt.config_path));
    threshold = tau_z(cfg.tau_z_prime);
  }
  if (opt.tau_set) threshold = opt.tau;
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    std::cerr << "grouping threshold must be positive and finite\n";
    return 2;
  }
  auto in = open_input(opt.proposals_path);
  const auto parts = read_proposals(in);
  if (!report_violations(parts, "proposal")) return 2;

  const auto groups = group_parts(parts, threshold);
  const fs::path out_path = fs::path(opt.out_dir) / "instances.jsonl";
  auto out = open_output(out_path);
  for (size_t g = 0; g < groups.size(); ++g) {
    std::vector<PartProposal> members;
    members.reserve(groups[g].members.size());
    for (int m : groups[g].members) members.push_back(parts[m]);
    const CategoryVote vote = instance_category(members);
    OrderedJson row;
    row["record"] = "instance";
    row["instance_id"] = static_cast<int>(g);
    row["category_id"] = vote.category;
    row["category_confidence"] = vote.confidence;
    row["members"] = groups[g].members;
    row["is_clique"] = groups[g].is_clique;
    out << row.dump() << "\n";
  }
  finish_output(out, out_path);
  std::cout << "grouped " << parts.size() << " proposals into " << groups.size()
            << " instances\n";
  return 0;
}

struct MatchOpts {
  std::string proposals_path;
  std::string truth_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
};

int run_match(const MatchOpts& opt) {
  auto pin = open_input(opt.proposals_path);
  const auto preds = read_proposals(pin);
  auto tin = open_input(opt.truth_path);
  const SceneTruth scene = read_scene(tin);
  if (!report_violations(preds, "proposal")) return 2;
  if (!report_violations(scene.parts, "truth part")) return 2;
  if (preds.size() < scene.parts.size()) {
    std::cerr << "need at least as many proposals (" << preds.size() << ") as truth parts ("
              << scene.parts.size() << ")\n";
    return 2;
  }

  Eigen::MatrixXd costs(preds.size(), scene.parts.size());
  for (size_t i = 0; i < preds.size(); ++i)
    for (size_t j = 0; j < scene.parts.size(); ++j)
      costs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          match_cost(preds[i], scene.parts[j]);
  const std::vector<int> assignment = hungarian_match(costs);

  Rng rng(opt.seed);
  const fs::path out_path = fs::path(opt.out_dir) / "match.csv";
  auto out = open_output(out_path);
  out << "gt_index,pred_index,cost,corner,rotation,occupancy,state_max,state_current,"
         "axis,origin_line,joint_type,category,refinement_total,total\n";
  for (size_t g = 0; g < assignment.size(); ++g) {
    const int p = assignment[g];
    const TruthPart& truth = scene.parts[g];
    const PartProposal& pred = preds[p];
    const OccupancyFn pred_world = box_occupancy(pred.pose);
    const auto samples = sample_occupancy_points(
        truth.shape, kOccupancySampleCount, rng,
        [&](const Vec3& x) { return pred_world(denormalize_point(x, truth.pose)); });
    const PartLossTerms terms = part_loss(pred, truth, samples);
    out << g << "," << p << "," << num(costs(p, static_cast<Eigen::Index>(g))) << ","
        << num(terms.corner) << "," << num(terms.rotation) << "," << num(terms.occupancy) << ","
        << num(terms.state_max) << "," << num(terms.state_current) << "," << num(terms.axis)
        << "," << num(terms.origin_line) << "," << num(terms.joint_type) << ","
        << num(terms.category) << "," << num(terms.refinement_total()) << ","
        << num(terms.total()) << "\n";
  }
  finish_output(out, out_path);
  std::cout << "matched " << assignment.size() << " truth parts against " << preds.size()
            << " proposals\n";
  return 0;
}

struct EvalOpts {
  std::vector<std::string> pred_paths;
  std::vector<std::string> truth_paths;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
};

int run_eval(const EvalOpts& opt) {
  if (opt.pred_paths.size() != opt.truth_paths.size()) {
    std::cerr << "need one --truth per --pred (got " << opt.pred_paths.size() << " vs "
              << opt.truth_paths.size() << ")\n";
    return 2;
  }
  std::vector<std::vector<PartProposal>> preds_per_scene;
  std::vector<std::vector<TruthPart>> truths_per_scene;
  for (size_t s = 0; s < opt.pred_paths.size(); ++s) {
    auto pin = open_input(opt.pred_paths[s]);
    preds_per_scene.push_back(read_proposals(pin));
    auto tin = open_input(opt.truth_paths[s]);
    truths_per_scene.push_back(read_scene(tin).parts);
    if (!report_violations(preds_per_scene.back(), "proposal")) return 2;
    if (!report_violations(truths_per_scene.back(), "truth part")) return 2;
  }

  OrderedJson report;
  report["scenes"] = opt.pred_paths.size();

  OrderedJson detection;
  for (double tau : {0.1, 0.25, 0.5}) {
    const DetectionReport r =
        detection_map(preds_per_scene, truths_per_scene, corner_distance_matcher(tau));
    OrderedJson entry;
    entry["ap"] = r.ap;
    entry["precision"] = r.precision;
    entry["tp"] = r.tp;
    entry["fp"] = r.fp;
    entry["fn"] = r.fn;
    std::ostringstream key;
    key << "corner@" << num(tau);
    detection[key.str()] = entry;
  }
  report["detection"] = detection;

  // Pair metrics over greedy matches at the middle threshold. Predictions are
  // treated as plain boxes; truth keeps its analytic shape.
  Rng rng(opt.seed);
  constexpr int kSurfacePoints = 2048;
  constexpr double kPairTau = 0.25;
  int matched = 0;
  double fscore_sum = 0, chamfer_sum = 0, viou_sum = 0, corner_sum = 0;
  struct JointAgg {
    int count = 0;
    double state = 0, oe = 0, md = 0;
  } revolute, prismatic;
  for (size_t s = 0; s < preds_per_scene.size(); ++s) {
    for (const auto& [p, t] : greedy_pairs(preds_per_scene[s], truths_per_scene[s], kPairTau)) {
      const PartProposal& pred = preds_per_scene[s][p];
      const TruthPart& truth = truths_per_scene[s][t];
      ++matched;
      corner_sum += corner_distance(pred.pose, truth.pose);
      const auto pred_pts = surface_points(AnalyticShape::box(), pred.pose, kSurfacePoints, rng);
      const auto gt_pts = surface_points(truth.shape, truth.pose, kSurfacePoints, rng);
      const double tol = 0.01 * truth.pose.diameter();
      fscore_sum += fscore(pred_pts, gt_pts, tol);
      chamfer_sum += chamfer(pred_pts, gt_pts);
      viou_sum += volumetric_iou(box_occupancy(pred.pose), truth_occupancy(truth),
                                 pair_bounds(pred.pose, truth.pose));
      const JointErrors je = joint_errors(pred.joint, truth.joint);
      if (truth.joint.type == JointType::Revolute) {
        ++revolute.count;
        revolute.state += je.state;
        revolute.oe += je.oe_deg;
        revolute.md += je.md_cm;
      } else if (truth.joint.type == JointType::Prismatic) {
        ++prismatic.count;
        prismatic.state += je.state;
        prismatic.oe += je.oe_deg;
      }
    }
  }
  const auto mean = [](double sum, int n) { return n > 0 ? sum / n : 0.0; };
  OrderedJson shape;
  shape["matched_pairs"] = matched;
  shape["fscore@1pct"] = mean(fscore_sum, matched);
  shape["chamfer_m"] = mean(chamfer_sum, matched);
  shape["volumetric_iou"] = mean(viou_sum, matched);
  shape["corner_distance"] = mean(corner_sum, matched);
  report["shape"] = shape;

  OrderedJson joints;
  OrderedJson rev;
  rev["count"] = revolute.count;
  rev["state_deg"] = mean(revolute.state, revolute.count);
  rev["oe_deg"] = mean(revolute.oe, revolute.count);
  rev["md_cm"] = mean(revolute.md, revolute.count);
  joints["revolute"] = rev;
  OrderedJson pri;
  pri["count"] = prismatic.count;
  pri["state_cm"] = mean(prismatic.state, prismatic.count);
  pri["oe_deg"] = mean(prismatic.oe, prismatic.count);
  joints["prismatic"] = pri;
  report["joints"] = joints;

  const fs::path json_path = fs::path(opt.out_dir) / "eval.json";
  auto jout = open_output(json_path);
  jout << report.dump(2) << "\n";
  finish_output(jout, json_path);

  const fs::path csv_path = fs::path(opt.out_dir) / "eval.csv";
  auto cout_file = open_output(csv_path);
  cout_file << "metric,value\n";
  const std::function<void(const OrderedJson&, const std::string&)> flatten =
      [&](const OrderedJson& node, const std::string& prefix) {
        for (const auto& [key, value] : node.items()) {
          const std::string name = prefix.empty() ? key : prefix + "." + key;
          if (value.is_object())
            flatten(value, name);
          else
            cout_file << name << "," << value.dump() << "\n";
        }
      };
  flatten(report, "");
  finish_output(cout_file, csv_path);
  return 0;
}

struct ReportOpts {
  std::vector<std::string> inputs;
  std::string out_dir = ".";
};

int run_report(const ReportOpts& opt) {
  std::vector<std::string> keys;  // insertion order from the first file
  std::vector<std::pair<std::string, std::map<std::string, double>>> rows;
  for (const auto& path : opt.inputs) {
    auto in = open_input(path);
    OrderedJson j;
    try {
      j = OrderedJson::parse(in);
    } catch (const OrderedJson::exception& e) {
      throw IoError(path + ": " + e.what());
    }
    std::map<std::string, double> flat;
    const std::function<void(const OrderedJson&, const std::string&)> flatten =
        [&](const OrderedJson& node, const std::string& prefix) {
          for (const auto& [key, value] : node.items()) {
            const std::string name = prefix.empty() ? key : prefix + "." + key;
            if (value.is_object()) {
              flatten(value, name);
            } else if (value.is_number()) {
              if (flat.emplace(name, value.get<double>()).second &&
                  std::find(keys.begin(), keys.end(), name) == keys.end())
                keys.push_back(name);
            }
          }
        };
    flatten(j, "");
    rows.emplace_back(path, std::move(flat));
  }

  const fs::path out_path = fs::path(opt.out_dir) / "report.csv";
  auto out = open_output(out_path);
  out << "file";
  for (const auto& key : keys) out << "," << key;
  out << "\n";
  for (const auto& [path, flat] : rows) {
    out << path;
    for (const auto& key : keys) {
      out << ",";
      const auto it = flat.find(key);
      if (it != flat.end()) out << num(it->second);
    }
    out << "\n";
  }
  out << "mean";
  for (const auto& key : keys) {
    double sum = 0;
    int n = 0;
    for (const auto& [path, flat] : rows) {
      const auto it = flat.find(key);
      if (it != flat.end()) {
        sum += it->second;
        ++n;
      }
    }
    out << ",";
    if (n > 0) out << num(sum / n);
  }
  out << "\n";
  finish_output(out, out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"articulated-part detection toolkit"};
  app.require_subcommand(1);

  SimulateOpts sim;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a truth scene plus detector runs");
  sim_cmd->add_option("--config", sim.config_path, "generator config (key=value or JSON)");
  auto* seed_opt = sim_cmd->add_option("--seed", sim.seed, "override the config seed");
  sim_cmd->add_option("--out-dir", sim.out_dir, "output directory");

  FuseOpts fuse;
  auto* fuse_cmd = app.add_subcommand("fuse", "fuse detector runs into consensus proposals");
  fuse_cmd->add_option("--runs", fuse.runs_path, "runs JSONL")->required();
  fuse_cmd->add_option("--config", fuse.config_path, "fusion config overrides");
  fuse_cmd->add_option("--out-dir", fuse.out_dir, "output directory");

  GroupOpts group;
  auto* group_cmd = app.add_subcommand("group", "cluster proposals into object instances");
  group_cmd->add_option("--proposals", group.proposals_path, "proposals JSONL")->required();
  group_cmd->add_option("--config", group.config_path,
                        "generator config supplying the embedding spread");
  auto* tau_opt = group_cmd->add_option("--tau-z", group.tau, "embedding distance threshold");
  group_cmd->add_option("--out-dir", group.out_dir, "output directory");

  MatchOpts match;
  auto* match_cmd = app.add_subcommand("match", "assign proposals to truth parts");
  match_cmd->add_option("--proposals", match.proposals_path, "proposals JSONL")->required();
  match_cmd->add_option("--truth", match.truth_path, "truth scene JSONL")->required();
  match_cmd->add_option("--seed", match.seed, "occupancy sampling seed");
  match_cmd->add_option("--out-dir", match.out_dir, "output directory");

  EvalOpts eval;
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against truth");
  eval_cmd->add_option("--pred", eval.pred_paths, "predictions JSONL (repeat per scene)")
      ->required();
  eval_cmd->add_option("--truth", eval.truth_paths, "truth scene JSONL (repeat per scene)")
      ->required();
  eval_cmd->add_option("--seed", eval.seed, "surface sampling seed");
  eval_cmd->add_option("--out-dir", eval.out_dir, "output directory");

  ReportOpts report;
  auto* report_cmd = app.add_subcommand("report", "aggregate eval JSON files into one CSV");
  report_cmd->add_option("inputs", report.inputs, "eval JSON files")->required();
  report_cmd->add_option("--out-dir", report.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  sim.seed_set = seed_opt->count() > 0;
  group.tau_set = tau_opt->count() > 0;

  try {
    if (sim_cmd->parsed()) return run_simulate(sim);
    if (fuse_cmd->parsed()) return run_fuse(fuse);
    if (group_cmd->parsed()) return run_group(group);
    if (match_cmd->parsed()) return run_match(match);
    if (eval_cmd->parsed()) return run_eval(eval);
    if (report_cmd->parsed()) return run_report(report);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
