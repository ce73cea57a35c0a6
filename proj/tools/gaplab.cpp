// Copyright 2026 The gaplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// gaplab <ids|gaps|labels|verify> --config <path> [--out-dir <path>] [--seed <int>]
//
// Exit codes: 0 ok, 1 config, 2 numerical, 3 I/O, 4 verification failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gaplab/experiment.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kNumerical = 2, kIo = 3, kUnverified = 4 };

struct Options {
  std::string config;
  std::optional<std::string> out_dir;
  std::optional<std::int64_t> seed;
};

void add_common(CLI::App* sub, Options& opts) {
  sub->add_option("--config", opts.config, "Experiment config (JSON)")->required();
  sub->add_option("--out-dir", opts.out_dir, "Directory for ids.csv, gaps.csv and report.json");
  sub->add_option("--seed", opts.seed, "Overrides numerics.seed");
}

int execute(gaplab::Stage stage, const Options& opts) {
  auto cfg = gaplab::parse_config(opts.config);
  if (opts.out_dir) cfg.output_dir = *opts.out_dir;
  if (opts.seed) cfg.seed = static_cast<std::uint64_t>(*opts.seed);
  const auto report = gaplab::run(cfg, stage);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  gaplab::write_outputs(report, cfg, stage);

  std::cout << "group: " << report.group_description << '\n';
  if (stage == gaplab::Stage::kIds) {
    std::cout << "ids: " << report.profile.energies.size() << " grid points\n";
  } else if (stage != gaplab::Stage::kLabels) {
    std::cout << "gaps: " << report.summary.gaps_found << " found, " << report.summary.gaps_matched
              << " matched, max residual " << report.summary.max_residual << '\n';
  }
  if (stage == gaplab::Stage::kVerify) {
    std::cout << (report.summary.verified() ? "verified" : "NOT verified") << '\n';
    if (!report.summary.verified()) return kUnverified;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectra, integrated density of states and gap labels of 1D ergodic Schroedinger operators"};
  app.require_subcommand(1);
  Options opts;
  struct Entry {
    const char* name;
    const char* help;
    gaplab::Stage stage;
  };
  const Entry entries[] = {
      {"ids", "Integrated density of states on the energy grid", gaplab::Stage::kIds},
      {"gaps", "Detect, label, match and certify gaps", gaplab::Stage::kGaps},
      {"labels", "Print the predicted gap-label group", gaplab::Stage::kLabels},
      {"verify", "Full pipeline; exit 4 if some gap is unmatched", gaplab::Stage::kVerify},
  };
  std::optional<gaplab::Stage> chosen;
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    add_common(sub, opts);
    sub->callback([&chosen, stage = e.stage] { chosen = stage; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  try {
    return execute(*chosen, opts);
  } catch (const gaplab::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const gaplab::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const gaplab::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const gaplab::ResourceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}
