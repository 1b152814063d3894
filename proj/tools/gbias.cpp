// gbias command line: thin wrappers over the library with JSON/CSV file I/O.
// Failures print {"error": {...}} on stderr; exit codes 2 config, 3 numerical,
// 4 infeasible.

#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gbias/experiment.hpp"

using namespace gbias;

namespace {

void emit(const json& j, const std::string& out) {
  if (out.empty()) std::cout << j.dump(2) << '\n';
  else write_json_file(out, j);
}

std::string dims_text(const std::vector<std::size_t>& dims) {
  std::ostringstream s;
  s << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) s << (i ? "," : "") << dims[i];
  s << ']';
  return s.str();
}

IrrepSet irreps_for(const GroupBuild& g, const std::string& source, const std::string& path, std::uint64_t seed) {
  return build_irreps(g, IrrepSourceConfig{source, path}, seed);
}

int cmd_group(const std::string& spec, const std::string& exp) {
  const GroupBuild g = build_group(spec);
  const std::string axioms = check_group_axioms(g.table);
  if (!exp.empty()) write_json_file(exp, group_to_json(g.table));
  std::cout << json{{"order", g.table.order()},
                    {"family", to_string(g.table.family())},
                    {"abelian", g.table.is_abelian()},
                    {"axioms", axioms.empty() ? "PASS" : "FAIL: " + axioms}}
                   .dump(2)
            << '\n';
  return axioms.empty() ? 0 : 3;
}

int cmd_irreps(const std::string& spec, const std::string& source, const std::string& path, std::uint64_t seed,
               bool verify, const std::string& exp) {
  const GroupBuild g = build_group(spec);
  const IrrepSet s = irreps_for(g, source, path, seed);
  std::cout << "dims " << dims_text(s.dims()) << '\n';
  if (!exp.empty()) write_json_file(exp, irreps_to_json(materialize(s)));
  if (!verify) return 0;
  const auto r = verify_irreps(s);
  auto line = [](const char* name, bool pass, double v) {
    std::cout << name << ' ' << (pass ? "PASS" : "FAIL") << ' ' << v << '\n';
  };
  std::cout << "complete " << (r.complete ? "PASS" : "FAIL") << " sum_d2=" << s.sum_of_squared_dims()
            << " order=" << g.table.order() << '\n';
  line("homomorphism", r.homomorphism <= 1e-10, r.homomorphism);
  line("unitarity", r.unitarity <= 1e-10, r.unitarity);
  line("schur_orthogonality", r.schur <= 1e-8, r.schur);
  line("character_separation", r.character_separation > 1e-6, r.character_separation);
  return r.ok() ? 0 : 3;
}

int cmd_fourier(const std::string& spec, const std::string& signal, bool inverse, const std::string& out) {
  const GroupBuild g = build_group(spec);
  const IrrepSet s = irreps_for(g, "builtin", "", 1);
  const json in = read_json_file(signal);
  if (!inverse) {
    emit(blocks_to_json(gft(signal_from_json(in), s)), out);
    return 0;
  }
  const CVec f = igft(blocks_from_json(in), s);
  if (f.imag().cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, f.cwiseAbs().maxCoeff())) {
    emit(signal_to_json(f.real()), out);
  } else {
    emit(json{{"real", vec_json(f.real())}, {"imag", vec_json(f.imag())}}, out);
  }
  return 0;
}

Vec read_beta(const std::string& path, const std::string& arch, std::size_t init) {
  const json j = read_json_file(path);
  if (j.is_object() && !j.contains("values")) {
    if (arch.empty()) throw Error(ErrorKind::config, "beta file holds several architectures; pass --arch");
    try {
      return signal_from_json(j.at(arch).at(init).at("real"));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::config, "beta file has no entry " + arch + "[" + std::to_string(init) + "]: " + e.what());
    }
  }
  return signal_from_json(j);
}

int cmd_analyze(const std::string& spec, const std::string& beta_path, const std::string& arch, std::size_t init,
                std::size_t layers, const std::string& data_path, double margin_tol, const std::string& out) {
  const GroupBuild g = build_group(spec);
  const IrrepSet s = irreps_for(g, "builtin", "", 1);
  const Vec beta = read_beta(beta_path, arch, init);
  const double q = 2.0 / static_cast<double>(layers);
  const NormReport nr = norm_report(beta, s, {q, 1.0, 2.0});
  json j{{"fourier_schatten_2L", schatten_quasi_norm(gft(beta, s), q)},
         {"real_norm_2L", real_quasi_norm(beta, q)},
         {"norms", norm_report_json(nr)},
         {"uncertainty", uncertainty_json(uncertainty_check(beta, s))}};
  if (!data_path.empty()) {
    if (layers < 2) throw Error(ErrorKind::validation, "KKT analysis needs --layers >= 2");
    j["kkt"] = kkt_json(fit_dual_coefficients(beta, dataset_from_json_file(data_path), s, layers, margin_tol));
  }
  emit(j, out);
  return 0;
}

int cmd_baseline(const std::string& spec, const std::string& data_path, double p, std::uint64_t seed,
                 std::size_t iters, const std::string& out) {
  const GroupBuild g = build_group(spec);
  const IrrepSet s = irreps_for(g, "builtin", "", 1);
  BaselineOptions opt;
  if (iters) opt.iters = iters;
  emit(baseline_json(min_schatten_baseline(dataset_from_json_file(data_path), s, p, seed, opt)), out);
  return 0;
}

/// Writes the run and returns the exit code of its first stage failure.
int finish_run(const ExperimentResult& res, const std::filesystem::path& dir) {
  write_run(res, dir);
  std::cout << json{{"output_dir", dir.string()}, {"seconds", res.seconds}}.dump() << '\n';
  if (const auto f = res.first_failure()) {
    ErrorKind kind = ErrorKind::numerical;
    for (auto k : {ErrorKind::infeasible, ErrorKind::numerical, ErrorKind::resource, ErrorKind::validation,
                   ErrorKind::config, ErrorKind::parse, ErrorKind::shape_mismatch, ErrorKind::wrong_variant})
      if (f->kind == to_string(k)) kind = k;
    std::cerr << error_json(kind, f->message, f->stage).dump() << '\n';
    return exit_code(kind);
  }
  return 0;
}

std::filesystem::path output_dir(const ExperimentConfig& c, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!c.output_dir.empty()) return c.output_dir;
  return std::filesystem::path("runs") / c.name;
}

int cmd_train(const std::string& config, const std::string& arch, const std::string& out) {
  ExperimentConfig c = load_config(config);
  std::size_t idx = c.architectures.size();
  for (std::size_t i = 0; i < c.architectures.size(); ++i)
    if (c.arch_name(i) == arch) idx = i;
  if (idx == c.architectures.size()) throw Error(ErrorKind::config, "config has no architecture named '" + arch + "'");
  const std::uint64_t base = c.architectures[idx].seed.value_or(derive_seed(c.master_seed, "arch", idx));
  ArchitectureConfig a = c.architectures[idx];
  a.seed = base;  // keep the seed the full run would use
  if (a.name.empty()) a.name = c.arch_name(idx);
  c.architectures = {a};
  c.analysis.kkt = c.analysis.uncertainty = c.analysis.baseline = false;
  c.replicas = 1;
  return finish_run(run_experiment(c), output_dir(c, out));
}

int cmd_run(const std::string& config, const std::string& out, std::size_t replicas) {
  ExperimentConfig c = load_config(config);
  if (replicas) c.replicas = replicas;
  return finish_run(run_experiment(c), output_dir(c, out));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gbias: group Fourier analysis and implicit-bias experiments for group-convolutional networks"};
  app.require_subcommand(1);

  std::string spec, exp, source = "builtin", path, signal, out, beta, arch, data, config;
  std::uint64_t seed = 1;
  bool verify = false, inverse = false;
  std::size_t layers = 3, init = 0, iters = 0, replicas = 0;
  double p = 2.0 / 3.0, margin_tol = 1e-3;

  auto* group = app.add_subcommand("group", "Build and validate a group; optionally export its table");
  group->add_option("--spec,-g", spec, "cyclic:n | dihedral:n | quaternion | affine:n | table:<file> | A*B")->required();
  group->add_option("--export", exp, "Write the table as JSON");

  auto* irreps = app.add_subcommand("irreps", "Compute, verify or export irreps");
  irreps->add_option("--group,-g", spec, "Group spec")->required();
  irreps->add_option("--source", source, "builtin | numerical | file")->check(CLI::IsMember({"builtin", "numerical", "file"}));
  irreps->add_option("--path", path, "Irreps JSON for --source file");
  irreps->add_option("--seed", seed, "Seed for the numerical decomposition");
  irreps->add_flag("--verify", verify, "Check homomorphism, unitarity and Schur orthogonality");
  irreps->add_option("--export", exp, "Write the irreps as JSON");

  auto* fourier = app.add_subcommand("fourier", "Fourier transform of a signal file (or inverse of a blocks file)");
  fourier->add_option("--group,-g", spec, "Group spec")->required();
  fourier->add_option("--signal,-s", signal, "Signal JSON, or blocks JSON with --inverse")->required();
  fourier->add_flag("--inverse", inverse, "Inverse transform");
  fourier->add_option("--out,-o", out, "Output file (default stdout)");

  auto* train_cmd = app.add_subcommand("train", "Train one architecture of a config");
  train_cmd->add_option("--config,-c", config, "Experiment config")->required();
  train_cmd->add_option("--arch,-a", arch, "Architecture name")->required();
  train_cmd->add_option("--out,-o", out, "Output directory");

  auto* analyze = app.add_subcommand("analyze", "Norm, uncertainty and KKT reports for a saved beta");
  analyze->add_option("--group,-g", spec, "Group spec")->required();
  analyze->add_option("--beta,-b", beta, "Signal JSON or a run's beta.json")->required();
  analyze->add_option("--arch,-a", arch, "Architecture entry in beta.json");
  analyze->add_option("--init", init, "Init index in beta.json");
  analyze->add_option("--layers,-L", layers, "Depth L (norms use p = 2/L)");
  analyze->add_option("--data,-d", data, "Dataset JSON; enables the KKT fit");
  analyze->add_option("--margin-tol", margin_tol, "Active-set tolerance for the KKT fit");
  analyze->add_option("--out,-o", out, "Output file (default stdout)");

  auto* base = app.add_subcommand("baseline", "Minimum Fourier-norm separator of a dataset");
  base->add_option("--group,-g", spec, "Group spec")->required();
  base->add_option("--data,-d", data, "Dataset JSON")->required();
  base->add_option("--p", p, "Schatten exponent in (0, 1]");
  base->add_option("--seed", seed, "Solver seed");
  base->add_option("--iters", iters, "Subgradient iterations");
  base->add_option("--out,-o", out, "Output file (default stdout)");

  auto* run = app.add_subcommand("run", "Run a full experiment config");
  run->add_option("--config,-c", config, "Experiment config")->required();
  run->add_option("--out,-o", out, "Output directory (overrides output_dir)");
  run->add_option("--replicas", replicas, "Replicas with seeds derived from the master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_json(ErrorKind::config, e.what()).dump() << '\n';
    return 2;
  }

  try {
    if (*group) return cmd_group(spec, exp);
    if (*irreps) return cmd_irreps(spec, source, path, seed, verify, exp);
    if (*fourier) return cmd_fourier(spec, signal, inverse, out);
    if (*train_cmd) return cmd_train(config, arch, out);
    if (*analyze) return cmd_analyze(spec, beta, arch, init, layers, data, margin_tol, out);
    if (*base) return cmd_baseline(spec, data, p, seed, iters, out);
    if (*run) return cmd_run(config, out, replicas);
  } catch (const StageError& e) {
    std::cerr << error_json(e.kind(), e.what(), e.stage()).dump() << '\n';
    return exit_code(e.kind());
  } catch (const Error& e) {
    std::cerr << error_json(e.kind(), e.what()).dump() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << error_json(ErrorKind::numerical, e.what()).dump() << '\n';
    return 3;
  }
  return 0;
}
