// Command-line front end: map generation, training, evaluation and comparison.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "bwexp/harness.hpp"
#include "bwexp/learner.hpp"

using namespace bwexp;

namespace {

struct MapOptions {
  std::string dir;
  int count = 20;
  double size_m = 50.0;
  double resolution = 0.25;
  double align_m = 4.0;
  std::uint64_t map_seed = 7;
  std::string split = "test";
};

void add_map_options(CLI::App* cmd, MapOptions& m) {
  cmd->add_option("--maps", m.dir, "Directory of map files (otherwise maps are generated)");
  cmd->add_option("--count", m.count, "Number of maps to generate");
  cmd->add_option("--size", m.size_m, "Map side length in meters");
  cmd->add_option("--resolution", m.resolution, "Cell size in meters");
  cmd->add_option("--align", m.align_m, "Corridor alignment pitch in meters");
  cmd->add_option("--map-seed", m.map_seed, "Base seed of the generated map set");
  cmd->add_option("--split", m.split, "train or test seed stream")->check(CLI::IsMember({"train", "test"}));
}

std::vector<GridMap> maps_from(const MapOptions& m) {
  if (!m.dir.empty()) return load_map_set(m.dir);
  MapSetConfig c;
  c.count = m.count;
  c.dungeon = dungeon_for_size(m.size_m, m.resolution, m.align_m, m.map_seed);
  c.split = m.split == "train" ? MapSplit::Train : MapSplit::Test;
  return generate_map_set(c);
}

void print_summary(std::ostream& os, const EvalSummary& s) {
  os << std::fixed << std::setprecision(2) << to_string(s.mode) << ": D = " << s.distance.mean << " +- "
     << s.distance.std << " m, UV = " << s.uv.mean << " B, DV = " << s.dv.mean << " B, T = " << s.time.mean
     << " s, reached " << s.reached_fraction * 100.0 << "%\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot exploration with learned messages"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  std::string out;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", out, "Output file or directory");
  app.fallthrough();

  // genmaps
  auto* gen = app.add_subcommand("genmaps", "Generate a dungeon map set");
  MapOptions gen_maps;
  gen_maps.count = 5;
  add_map_options(gen, gen_maps);

  // train
  auto* tr = app.add_subcommand("train", "Train a policy from a key=value config file");
  std::string train_config_path;
  tr->add_option("--config", train_config_path, "Training config file")->required();

  // eval / compare share run options
  RunConfig run;
  MapOptions eval_maps;
  std::string run_config_path;
  std::string checkpoint;
  std::string mode = "mtsp_based";
  std::string modes = "ours,mtsp_based";
  bool no_timing = false;
  auto add_run_options = [&](CLI::App* cmd) {
    add_map_options(cmd, eval_maps);
    cmd->add_option("--n", run.n_robots, "Robots per team");
    cmd->add_option("--theta", run.theta, "Exploration threshold in [0.9, 1]");
    cmd->add_option("--checkpoint", checkpoint, "Policy checkpoint for learned modes");
    cmd->add_option("--config", run_config_path, "key=value sensor and graph settings");
    cmd->add_option("--threads", run.threads, "Parallel episodes");
    cmd->add_flag("--no-timing", no_timing, "Report T_s as 0 for reproducible output");
  };
  auto* ev = app.add_subcommand("eval", "Evaluate one mode on a map set");
  add_run_options(ev);
  ev->add_option("--mode", mode, "ours, global_map, mtsp_based, nearest_frontier or random");
  auto* cmp = app.add_subcommand("compare", "Evaluate several modes on one map set");
  add_run_options(cmp);
  cmp->add_option("--modes", modes, "Comma-separated mode list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const bool seed_given = seed_opt->count() > 0;
  try {
    if (gen->parsed()) {
      if (seed_given) gen_maps.map_seed = seed;
      const std::string dir = out.empty() ? "maps" : out;
      write_map_set(dir, maps_from(gen_maps));
      std::cout << "wrote " << gen_maps.count << " maps to " << dir << '\n';
      return 0;
    }

    if (tr->parsed()) {
      KeyValues kv = load_key_values(train_config_path);
      static const std::vector<std::string> map_keys = {"map_size_m", "resolution", "align_m", "train_maps",
                                                        "eval_maps", "map_seed"};
      for (const auto& [k, v] : kv) {
        const auto& keys = train_config_keys();
        if (std::find(keys.begin(), keys.end(), k) == keys.end() &&
            std::find(map_keys.begin(), map_keys.end(), k) == map_keys.end())
          throw Error("unknown config key '" + k + "'");
      }
      TrainConfig cfg = train_config_from(kv);
      if (seed_given) cfg.seed = seed;
      if (!out.empty()) cfg.out_dir = out;
      const double size = kv_double(kv, "map_size_m", 30.0);
      const double res = kv_double(kv, "resolution", 0.25);
      const double align = kv_double(kv, "align_m", cfg.graph.spacing_m);
      const std::uint64_t map_seed = kv_u64(kv, "map_seed", 7);
      MapSetConfig train_set;
      train_set.count = kv_int(kv, "train_maps", 200);
      train_set.dungeon = dungeon_for_size(size, res, align, map_seed);
      train_set.split = MapSplit::Train;
      MapSetConfig eval_set = train_set;
      eval_set.count = kv_int(kv, "eval_maps", 20);
      eval_set.split = MapSplit::Test;
      const auto train_maps = generate_map_set(train_set);
      const auto held_out = generate_map_set(eval_set);
      SacAgent agent(cfg);
      const TrainResult r = train(cfg, train_maps, held_out, agent, [](const TrainCurveRow& row) {
        std::cout << "episode " << row.stats.episode << " steps " << row.stats.steps << " rate " << std::fixed
                  << std::setprecision(3) << row.stats.rate << " D " << std::setprecision(1) << row.stats.makespan
                  << " updates " << row.loss.updates << " alpha " << std::setprecision(4) << row.loss.alpha
                  << '\n'
                  << std::flush;
      });
      for (const auto& [ep, d] : r.eval_makespan) std::cout << "eval after " << ep << " episodes: D = " << d << '\n';
      return 0;
    }

    if (ev->parsed() || cmp->parsed()) {
      if (!run_config_path.empty()) run = run_config_from(load_key_values(run_config_path), run);
      if (seed_given) run.seed = seed;
      run.record_timing = !no_timing;
      const auto maps = maps_from(eval_maps);
      std::vector<Mode> mode_list;
      if (ev->parsed()) {
        mode_list.push_back(parse_mode(mode));
      } else {
        std::stringstream ss(modes);
        std::string m;
        while (std::getline(ss, m, ','))
          if (!m.empty()) mode_list.push_back(parse_mode(m));
      }
      std::unique_ptr<PolicyNet> policy;
      for (Mode m : mode_list)
        if (uses_policy(m) && !policy) {
          if (checkpoint.empty()) throw Error(std::string("mode ") + to_string(m) + " needs --checkpoint");
          policy = load_policy(checkpoint);
        }

      std::ofstream file;
      if (!out.empty()) {
        file.open(out);
        if (!file) throw Error("cannot write " + out);
      }
      std::ostream& csv = out.empty() ? std::cout : file;
      write_eval_header(csv);
      std::vector<EvalSummary> summaries;
      for (Mode m : mode_list) {
        RunConfig c = run;
        c.mode = m;
        summaries.push_back(evaluate(c, maps, policy.get()));
        write_eval_rows(csv, summaries.back());
      }
      for (const auto& s : summaries) print_summary(out.empty() ? std::cerr : std::cout, s);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
