#include "config.hpp"
#include "pipeline.hpp"

#include "spirit_sde/error.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace ssd;
using namespace ssd::cli;

namespace {

struct Common
{
  std::string config;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool trace = false;
};

void AddCommon(CLI::App *sub, Common &c, bool need_config)
{
  auto *opt = sub->add_option("--config", c.config, "experiment config (YAML, or a run's metadata.json)");
  if (need_config) {
    opt->required();
  }
  sub->add_option("--output-dir", c.output_dir, "overrides output_dir");
  sub->add_option("--seed", c.seed, "overrides sampler.seed");
  sub->add_flag("--trace", c.trace, "write per-iteration traces");
}

ExperimentConfig Resolve(Common const &c, CLI::App const *sub)
{
  ExperimentConfig cfg = LoadConfig(c.config);
  if (sub->count("--output-dir")) {
    cfg.output_dir = c.output_dir;
  }
  if (sub->count("--seed")) {
    cfg.sampler.seed = c.seed;
  }
  return cfg;
}

int Fail(int code, std::string const &what)
{
  std::cerr << "spirit-sde: " << what << '\n';
  return code;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Synthetic parallel-MRI experiments: SPIRiT, SPIRiT-Diffusion, VE-SDE"};
  app.require_subcommand(1);
  Common c;

  auto *simulate = app.add_subcommand("simulate", "phantom, coil maps, mask and k-space");
  AddCommon(simulate, c, true);
  auto *calibrate = app.add_subcommand("calibrate", "SPIRiT kernel from the simulated ACS");
  AddCommon(calibrate, c, true);
  auto *recon = app.add_subcommand("recon", "reconstruct with one method");
  AddCommon(recon, c, true);
  std::string method;
  recon->add_option("--method", method, "zero-filled | cg-spirit | gd-spirit | spirit-diffusion | ve-sde")
    ->required();
  auto *eval = app.add_subcommand("eval", "metrics of the configured methods, or of one tensor pair");
  AddCommon(eval, c, false);
  std::string ref, test, out;
  eval->add_option("--ref", ref, "reference tensor");
  eval->add_option("--test", test, "tensor to score");
  eval->add_option("--out", out, "metrics file for --ref/--test (default stdout)");
  auto *plot = app.add_subcommand("trace-plot", "line plot of a trace column");
  AddCommon(plot, c, false);
  std::string input, column = "residual", image;
  plot->add_option("--input", input, "trace file (sampler or CG)")->required();
  plot->add_option("--column", column, "column to plot (log scale)");
  plot->add_option("--out", image, "output PGM")->required();
  auto *run = app.add_subcommand("run", "simulate, calibrate, reconstruct and evaluate");
  AddCommon(run, c, true);

  try {
    app.parse(argc, argv);
  } catch (CLI::CallForHelp const &e) {
    return app.exit(e);
  } catch (CLI::ParseError const &e) {
    app.exit(e);
    return 2;
  }

  try {
    if (simulate->parsed()) {
      Simulate(Resolve(c, simulate));
    } else if (calibrate->parsed()) {
      auto const j = CalibrateStage(Resolve(c, calibrate));
      fmt::print("calib_residual {}\n", j.at("calib_residual").get<double>());
    } else if (recon->parsed()) {
      Recon(Resolve(c, recon), method, c.trace);
    } else if (eval->parsed()) {
      if (!ref.empty() || !test.empty()) {
        if (ref.empty() || test.empty()) {
          return Fail(2, "eval needs both --ref and --test");
        }
        std::optional<Rect> roi;
        if (!c.config.empty()) {
          roi = LoadConfig(c.config).roi;
        }
        std::vector<MetricsRow> rows{{"eval", 1.0, EvalFiles(ref, test, roi)}};
        std::ostringstream os;
        WriteMetricsTsv(os, rows);
        if (out.empty()) {
          std::cout << os.str();
        } else {
          std::ofstream f(out, std::ios::binary);
          f << os.str();
          if (!f) {
            throw IoError(fmt::format("cannot write '{}'", out));
          }
        }
      } else {
        if (c.config.empty()) {
          return Fail(2, "eval needs --config, or --ref and --test");
        }
        auto const cfg = Resolve(c, eval);
        EvalStage(cfg);
        std::ifstream t(cfg.output_dir / files::table);
        std::cout << t.rdbuf();
      }
    } else if (plot->parsed()) {
      TracePlot(input, column, image);
    } else if (run->parsed()) {
      auto const cfg = Resolve(c, run);
      RunExperiment(cfg, c.trace);
      std::ifstream t(cfg.output_dir / files::table);
      std::cout << t.rdbuf();
    }
  } catch (ConfigError const &e) {
    return Fail(2, e.what());
  } catch (InvalidInput const &e) {
    return Fail(2, e.what());
  } catch (NumericalError const &e) {
    return Fail(3, e.what());
  } catch (IoError const &e) {
    return Fail(4, e.what());
  } catch (std::filesystem::filesystem_error const &e) {
    return Fail(4, e.what());
  } catch (std::exception const &e) {
    return Fail(1, e.what());
  }
  return 0;
}
