// Command-line front end: dataset generation, single training runs,
// ablation sweeps and report aggregation.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "atdoc/data.hpp"
#include "atdoc/evalkit.hpp"
#include "atdoc/net.hpp"
#include "atdoc/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Bad arguments / bad config -> exit 2; runtime failures -> exit 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

atdoc::RowVector parse_shift(const std::string& text, int dim) {
  atdoc::RowVector shift = atdoc::RowVector::Zero(dim);
  if (text.empty()) return shift;
  std::stringstream ss(text);
  std::string cell;
  std::vector<double> values;
  while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
  if (static_cast<int>(values.size()) != dim) {
    throw UsageError("--shift needs exactly " + std::to_string(dim) + " values");
  }
  for (int k = 0; k < dim; ++k) shift[k] = values[static_cast<std::size_t>(k)];
  return shift;
}

int cmd_generate_two_moons(int n, double rotation, double noise, std::uint64_t seed,
                           const std::string& output) {
  const atdoc::DomainDataset ds = atdoc::gen_two_moons_shift(n, rotation, noise, seed);
  atdoc::save_csv(ds, output);
  std::cout << "wrote " << output << ": " << ds.source_count() << " source + "
            << ds.target_unlabeled_count() << " target samples, K=" << ds.class_count
            << ", d=" << ds.feature_dim << "\n";
  return 0;
}

int cmd_generate_blobs(int classes, int dim, int n_per_class, const std::string& shift_text,
                       std::uint64_t seed, const std::string& output) {
  const atdoc::RowVector shift = parse_shift(shift_text, dim);
  const atdoc::DomainDataset ds =
      atdoc::gen_gaussian_blobs_shift(classes, dim, n_per_class, shift, seed);
  atdoc::save_csv(ds, output);
  std::cout << "wrote " << output << ": " << ds.source_count() << " source + "
            << ds.target_unlabeled_count() << " target samples, K=" << ds.class_count
            << ", d=" << ds.feature_dim << "\n";
  return 0;
}

atdoc::TrainConfig load_config(const std::string& path) {
  json j;
  try {
    j = load_json_file(path);
  } catch (const json::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  try {
    return atdoc::config_from_json(j);
  } catch (const std::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& output, const std::string& params_path, bool have_seed,
              std::uint64_t seed_override, int verbosity) {
  atdoc::TrainConfig config = load_config(config_path);
  if (have_seed) config.seed = seed_override;

  const atdoc::DomainDataset ds = atdoc::load_csv(data_path);
  if (verbosity > 0) {
    std::cerr << "method=" << atdoc::method_name(config.method)
              << " task=" << atdoc::task_name(config.task) << " seed=" << config.seed
              << " iterations=" << config.iterations << "\n";
  }
  atdoc::NetParams final_params;
  const atdoc::RunResult result = atdoc::run(config, ds, &final_params);
  write_file_atomic(output, atdoc::run_result_to_json(result).dump(2) + "\n");
  if (!params_path.empty()) atdoc::save_params(final_params, params_path);
  if (verbosity > 0) {
    std::cerr << "target accuracy " << result.metrics.target_accuracy << " in "
              << result.wall_seconds << "s\n";
  }
  std::cout << "wrote " << output << "\n";
  return 0;
}

struct SweepCell {
  std::string name;
  json config;
};

std::string axis_value_token(const json& value) {
  std::string token = value.dump();
  std::erase(token, '"');
  return token;
}

std::vector<SweepCell> expand_sweep(const json& spec) {
  if (!spec.contains("base") || !spec.at("base").is_object()) {
    throw UsageError("sweep spec needs an object field \"base\"");
  }
  if (!spec.contains("axes") || !spec.at("axes").is_object()) {
    throw UsageError("sweep spec needs an object field \"axes\"");
  }
  for (const auto& [key, _] : spec.items()) {
    if (key != "base" && key != "axes") {
      throw UsageError("sweep spec: unknown field \"" + key + "\"");
    }
  }
  std::vector<SweepCell> cells{SweepCell{"", spec.at("base")}};
  for (const auto& [axis, values] : spec.at("axes").items()) {
    if (!values.is_array() || values.empty()) {
      throw UsageError("sweep axis \"" + axis + "\" must be a nonempty array");
    }
    std::vector<SweepCell> expanded;
    expanded.reserve(cells.size() * values.size());
    for (const auto& cell : cells) {
      for (const auto& value : values) {
        SweepCell next = cell;
        next.config[axis] = value;
        next.name += (next.name.empty() ? "" : "_") + axis + "=" + axis_value_token(value);
        expanded.push_back(std::move(next));
      }
    }
    cells = std::move(expanded);
  }
  // Validate every cell config up front so bad specs fail before any work.
  for (const auto& cell : cells) {
    try {
      atdoc::config_from_json(cell.config);
    } catch (const std::exception& e) {
      throw UsageError("sweep cell " + cell.name + ": " + e.what());
    }
  }
  return cells;
}

int cmd_sweep(const std::string& spec_path, const std::string& data_path,
              const std::string& outdir, bool resume, int jobs, int verbosity) {
  json spec;
  try {
    spec = load_json_file(spec_path);
  } catch (const json::exception& e) {
    throw UsageError(std::string("sweep spec: ") + e.what());
  }
  const std::vector<SweepCell> cells = expand_sweep(spec);
  const atdoc::DomainDataset ds = atdoc::load_csv(data_path);
  fs::create_directories(outdir);

  std::atomic<std::size_t> next_cell{0};
  std::atomic<int> failures{0};
  std::atomic<int> skipped{0};

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next_cell.fetch_add(1);
      if (i >= cells.size()) return;
      const SweepCell& cell = cells[i];
      const fs::path out_path = fs::path(outdir) / (cell.name + ".json");
      const fs::path err_path = fs::path(outdir) / (cell.name + ".error.txt");
      if (resume && fs::exists(out_path)) {
        ++skipped;
        continue;
      }
      try {
        const atdoc::TrainConfig config = atdoc::config_from_json(cell.config);
        const atdoc::RunResult result = atdoc::run(config, ds);
        write_file_atomic(out_path, atdoc::run_result_to_json(result).dump(2) + "\n");
        if (fs::exists(err_path)) fs::remove(err_path);
        if (verbosity > 0) {
          std::cerr << cell.name << ": accuracy " << result.metrics.target_accuracy << "\n";
        }
      } catch (const std::exception& e) {
        write_file_atomic(err_path, std::string(e.what()) + "\n");
        std::cerr << "cell " << cell.name << " failed: " << e.what() << "\n";
        ++failures;
      }
    }
  };

  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::cout << "sweep: " << cells.size() << " cells, " << skipped.load() << " skipped, "
            << failures.load() << " failed\n";
  return failures.load() > 0 ? 1 : 0;
}

int cmd_report(const std::string& dir, const std::string& output) {
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<atdoc::ReportRow> rows;
  std::vector<std::string> warnings;
  for (const auto& path : files) {
    try {
      const json j = load_json_file(path.string());
      atdoc::ReportRow row;
      json config = j.at("config");
      row.method = config.at("method").get<std::string>();
      row.task = config.at("task").get<std::string>();
      row.seed = j.at("seed").get<std::uint64_t>();
      config.erase("seed");  // hash groups seeds of the same experiment together
      row.config_hash = fnv1a_hex(config.dump());
      row.accuracy = j.at("metrics").at("target_accuracy").get<double>();
      const auto& mean_class = j.at("metrics").at("target_mean_class_accuracy");
      row.mean_class_accuracy = mean_class.is_null() ? 0.0 : mean_class.get<double>();
      row.runtime_seconds = j.at("wall_seconds").get<double>();
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      warnings.push_back(path.filename().string() + ": " + e.what());
      std::cerr << "warning: skipping " << path << ": " << e.what() << "\n";
    }
  }
  if (rows.empty() && warnings.empty()) {
    std::cerr << "warning: no result files in " << dir << "\n";
  }
  write_file_atomic(output, atdoc::make_report_csv(rows, warnings));
  std::cout << "wrote " << output << " (" << rows.size() << " runs)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ATDOC: memory-bank pseudo-labeling for domain adaptation"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset CSV");
  generate->require_subcommand(1);

  int tm_n = 0;
  double tm_rotation = 0.0, tm_noise = 0.1;
  std::uint64_t tm_seed = 0;
  std::string tm_output;
  auto* two_moons = generate->add_subcommand("two-moons", "Rotated two-moons domain shift");
  two_moons->add_option("--n", tm_n, "samples per domain")->required();
  two_moons->add_option("--rotation", tm_rotation, "target rotation in degrees")->required();
  two_moons->add_option("--noise", tm_noise, "Gaussian noise sigma");
  two_moons->add_option("--seed", tm_seed, "RNG seed");
  two_moons->add_option("-o,--output", tm_output, "output CSV path")->required();

  int gb_classes = 0, gb_dim = 0, gb_n = 0;
  std::string gb_shift;
  std::uint64_t gb_seed = 0;
  std::string gb_output;
  auto* blobs = generate->add_subcommand("gaussian-blobs", "Translated Gaussian blobs");
  blobs->add_option("--classes", gb_classes, "number of classes")->required();
  blobs->add_option("--dim", gb_dim, "feature dimension")->required();
  blobs->add_option("--n-per-class", gb_n, "samples per class per domain")->required();
  blobs->add_option("--shift", gb_shift, "comma-separated target mean shift");
  blobs->add_option("--seed", gb_seed, "RNG seed");
  blobs->add_option("-o,--output", gb_output, "output CSV path")->required();

  // train
  std::string tr_config, tr_data, tr_output, tr_params;
  std::uint64_t tr_seed = 0;
  bool tr_have_seed = false;
  int tr_verbosity = 0;
  auto* train = app.add_subcommand("train", "Run one experiment from a JSON config");
  train->add_option("--config", tr_config, "config JSON path")->required();
  train->add_option("--data", tr_data, "dataset CSV path")->required();
  train->add_option("-o,--output", tr_output, "result JSON path")->required();
  train->add_option("--save-params", tr_params, "also write a parameter checkpoint JSON");
  train->add_option("--seed", tr_seed, "override the config seed")
      ->each([&](const std::string&) { tr_have_seed = true; });
  train->add_flag("-v,--verbose", tr_verbosity, "progress to stderr");

  // sweep
  std::string sw_spec, sw_data, sw_outdir;
  bool sw_resume = false;
  int sw_jobs = 1, sw_verbosity = 0;
  auto* sweep = app.add_subcommand("sweep", "Run a cartesian grid of configs");
  sweep->add_option("--spec", sw_spec, "sweep spec JSON (base + axes)")->required();
  sweep->add_option("--data", sw_data, "dataset CSV path")->required();
  sweep->add_option("-o,--outdir", sw_outdir, "output directory")->required();
  sweep->add_flag("--resume", sw_resume, "skip cells whose result already exists");
  sweep->add_option("--jobs", sw_jobs, "concurrent cells")->check(CLI::PositiveNumber);
  sweep->add_flag("-v,--verbose", sw_verbosity, "progress to stderr");

  // report
  std::string rp_dir, rp_output;
  auto* report = app.add_subcommand("report", "Aggregate result JSONs into a CSV table");
  report->add_option("--dir", rp_dir, "directory of result JSONs")->required();
  report->add_option("-o,--output", rp_output, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (two_moons->parsed()) {
      return cmd_generate_two_moons(tm_n, tm_rotation, tm_noise, tm_seed, tm_output);
    }
    if (blobs->parsed()) {
      return cmd_generate_blobs(gb_classes, gb_dim, gb_n, gb_shift, gb_seed, gb_output);
    }
    if (train->parsed()) {
      return cmd_train(tr_config, tr_data, tr_output, tr_params, tr_have_seed, tr_seed,
                       tr_verbosity);
    }
    if (sweep->parsed()) {
      return cmd_sweep(sw_spec, sw_data, sw_outdir, sw_resume, sw_jobs, sw_verbosity);
    }
    if (report->parsed()) {
      return cmd_report(rp_dir, rp_output);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
