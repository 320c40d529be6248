#include <omp.h>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "kerrdecay/cli_io.hpp"
#include "kerrdecay/kernel_oracle.hpp"
#include "kerrdecay/numerics.hpp"

using namespace kerrdecay;

namespace {

struct KernelFlags {
  double beta = 3.0, eta = 2.0, gamma_w = 1.0, delta_small = 0.05;
  std::vector<double> t_range{10.0, 1000.0};
  std::vector<double> r_over_t{0.1, 0.3, 0.5, 0.7, 0.9, 0.99};
  unsigned per_decade = 8;
};

RunManifest run_kernel(const KernelFlags& f, const std::filesystem::path& out) {
  std::ostringstream key;
  key.precision(17);
  key << "kernel " << f.beta << ' ' << f.eta << ' ' << f.gamma_w << ' ' << f.delta_small << ' ' << f.t_range[0] << ' '
      << f.t_range[1] << ' ' << f.per_decade;
  for (double q : f.r_over_t) key << ' ' << q;
  RunManifest m;
  m.subcommand = "kernel";
  m.config_hash = num::hex64(num::fnv1a64(key.str()));
  m.code_version = code_version();
  m.start_time = utc_timestamp();
  m.outcome = "completed";
  std::filesystem::remove(out / "manifest.json");
  ArtifactWriter w(out, m);
  try {
    WeightedSource src;
    src.beta = f.beta;
    src.eta = f.eta;
    src.gamma_w = f.gamma_w;
    const BoundReport rep = verify_weighted_source_bound(src, f.delta_small, log_times(f.t_range[0], f.t_range[1], f.per_decade), f.r_over_t);
    w.write("kernel.csv", kernel_csv(rep));
    std::ostringstream s;
    s.precision(6);
    s << "exponent " << rep.exponent << ", sup Xi " << rep.sup << ", per-decade sup";
    for (std::size_t i = 0; i < rep.decade_start.size(); ++i) s << ' ' << rep.decade_start[i] << ':' << rep.decade_sup[i];
    s << (rep.non_increasing ? ", non-increasing" : ", increasing");
    m.message = s.str();
  } catch (const std::exception& e) {
    m.outcome = "error";
    m.message = e.what();
  }
  m.end_time = utc_timestamp();
  write_manifest(out, m);
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semilinear waves on Kerr: evolutions, norms, decay fits and checks"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "run";
  int threads = 0;
  unsigned seed = 0;
  app.add_option("--config", config_path, "INI run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "OpenMP threads (0 keeps the runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "seed for synthetic test generators");

  for (const char* name : {"evolve", "norms", "fit", "convergence", "check-operators", "check-multipliers"}) {
    app.add_subcommand(name);
  }
  double M = -1.0, a = 0.0, R_switch = -1.0;
  auto* geo = app.add_subcommand("check-geometry");
  geo->add_option("--M", M, "mass");
  geo->add_option("--a", a, "rotation");
  geo->add_option("--R-switch", R_switch, "start of the r* blend");

  KernelFlags kf;
  auto* kernel = app.add_subcommand("kernel", "Duhamel kernel oracle for the weighted source");
  kernel->add_option("--beta", kf.beta);
  kernel->add_option("--eta", kf.eta);
  kernel->add_option("--gamma-w", kf.gamma_w);
  kernel->add_option("--delta-small", kf.delta_small);
  kernel->add_option("--t-range", kf.t_range)->expected(2)->delimiter(',');
  kernel->add_option("--r-over-t", kf.r_over_t)->delimiter(',');
  kernel->add_option("--per-decade", kf.per_decade);

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);
  const std::string sub = app.get_subcommands().front()->get_name();

  RunManifest m;
  try {
    if (sub == "kernel") {
      m = run_kernel(kf, out_dir);
    } else {
      RunConfig config = config_path.empty() ? parse_config("") : load_config(config_path);
      if (sub == "check-geometry") {
        if (M > 0.0) config.evolution.params.M = M;
        if (geo->count("--a") > 0) config.evolution.params.a = a;
        if (R_switch > 0.0) config.evolution.R_switch = R_switch;
      }
      config.evolution.progress = [](double t, double wall) {
        std::fprintf(stderr, "t = %.1f after %.0f s\n", t, wall);
      };
      m = run(sub, config, out_dir);
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  std::cout << sub << ": " << m.outcome;
  if (m.outcome == "blow-up") std::cout << " at t = " << m.blowup_time << ", r = " << m.blowup_location;
  if (!m.message.empty()) std::cout << " (" << m.message << ')';
  std::cout << "\n" << m.files.size() << " files in " << out_dir << '\n';
  return m.outcome == "error" ? 1 : 0;
}
