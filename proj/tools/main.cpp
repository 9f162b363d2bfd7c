// Command-line driver for the sparsegeo experiment pipelines. Talks to the
// shared library exclusively through the public C API.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "sparsegeo.h"

namespace {

struct CommonOptions {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool has_seed = false;
  bool strict = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "Path to a key-value config file");
  cmd->add_option("--out", opts.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", opts.seed, "Master seed override")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--strict", opts.strict,
                "Exit nonzero when a bound certificate fails");
}

int dispatch(const std::string& name, const CommonOptions& opts) {
  const char* config = opts.config.empty() ? nullptr : opts.config.c_str();
  const std::uint64_t* seed = opts.has_seed ? &opts.seed : nullptr;
  const int strict = opts.strict ? 1 : 0;
  int rc = SG_ERR_UNKNOWN;
  if (name == "generate") rc = sg_run_generate(config, opts.out.c_str(), seed, strict);
  else if (name == "stability") rc = sg_run_stability(config, opts.out.c_str(), seed, strict);
  else if (name == "training") rc = sg_run_training(config, opts.out.c_str(), seed, strict);
  else if (name == "geometry") rc = sg_run_geometry(config, opts.out.c_str(), seed, strict);
  if (rc != SG_OK) {
    std::fprintf(stderr, "error (%d): %s\n", rc, sg_last_error());
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("sparsegeo experiment runner (") + sg_version() + ")"};
  app.require_subcommand(1);

  CommonOptions generate_opts, stability_opts, training_opts, geometry_opts;
  CLI::App* generate =
      app.add_subcommand("generate", "Write the synthetic graph, features, "
                                     "labels and masks");
  add_common(generate, generate_opts);
  CLI::App* stability =
      app.add_subcommand("stability", "Forward-map error sweep with bound "
                                      "certificates and budget-level summary");
  add_common(stability, stability_opts);
  CLI::App* training =
      app.add_subcommand("training", "Matched dense/sparse gradient-descent "
                                     "trajectory sweep");
  add_common(training, training_opts);
  CLI::App* geometry =
      app.add_subcommand("geometry", "Embedding-geometry sweep with centroid "
                                     "and Procrustes reports");
  add_common(geometry, geometry_opts);

  CLI11_PARSE(app, argc, argv);

  generate_opts.has_seed = generate->count("--seed") > 0;
  stability_opts.has_seed = stability->count("--seed") > 0;
  training_opts.has_seed = training->count("--seed") > 0;
  geometry_opts.has_seed = geometry->count("--seed") > 0;

  if (generate->parsed()) return dispatch("generate", generate_opts);
  if (stability->parsed()) return dispatch("stability", stability_opts);
  if (training->parsed()) return dispatch("training", training_opts);
  if (geometry->parsed()) return dispatch("geometry", geometry_opts);
  return SG_ERR_UNKNOWN;
}
