// rsurmise: generate spectra, histogram ratios, fit the surmise, build ansatz curves.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <rsurmise/rsurmise.hpp>

namespace fs = std::filesystem;
using namespace rsurmise;
using json = nlohmann::ordered_json;

namespace {

struct Globals {
  unsigned threads = 0;
  std::uint64_t seed = 1;
  std::string out = ".";
};

std::string sha256_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::vector<char> buf(1 << 16);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  while (is) {
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char b[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects the output files of one command and writes <command>.manifest.json.
class Run {
 public:
  Run(std::string command, const Globals& g, json params)
      : command_(std::move(command)), g_(g), params_(std::move(params)), started_(utc_now()) {
    fs::create_directories(g_.out);
  }

  fs::path path(const std::string& name) const { return fs::path(g_.out) / name; }

  template <class Writer>
  void text(const std::string& name, Writer&& w) {
    std::ofstream os(path(name));
    if (!os) throw IoError("cannot write " + path(name).string());
    w(os);
    os.close();
    outputs_.push_back(name);
  }

  void json_file(const std::string& name, const json& j) {
    text(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }

  void binary(const std::string& name, const SpectrumBatch& b) {
    write_batch_file(path(name).string(), b);
    outputs_.push_back(name);
  }

  void finish() const {
    json m;
    m["command"] = command_;
    m["parameters"] = params_;
    m["seed"] = g_.seed;
    m["threads"] = g_.threads;
    m["version"] = RSURMISE_VERSION;
    m["started"] = started_;
    m["finished"] = utc_now();
    json files = json::array();
    for (const auto& f : outputs_) files.push_back({{"file", f}, {"sha256", sha256_file(path(f))}});
    m["outputs"] = files;
    std::ofstream os(path(command_ + ".manifest.json"));
    os << m.dump(2) << '\n';
  }

 private:
  std::string command_;
  Globals g_;
  json params_;
  std::string started_;
  std::vector<std::string> outputs_;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw InvalidArgument("not a number: '" + item + "'");
    v.push_back(x);
  }
  if (v.empty()) throw InvalidArgument("empty list");
  return v;
}

std::vector<std::size_t> parse_counts(const std::string& s) {
  std::vector<std::size_t> out;
  for (double x : parse_list(s)) {
    if (!(x >= 1.0) || x != std::floor(x)) throw InvalidArgument("expected positive integers, got " + s);
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

// Model options shared by generate and crossover.
struct ModelOptions {
  std::string ensemble;
  std::string model;
  std::size_t n = 500;
  double lambda = 0.0;
  double beta = 1.0;
  int sites = 11;
  double omega = 1.0;
  double coupling = 1.0;
  bool open = false;
  double sz = -0.5;
  int spins = 9;
  double alpha = 0.0;
  double kappa = 0.5;
  double gaudin_lambda = 1.0;
  int parity = 1;

  void add(CLI::App* app) {
    auto* e = app->add_option("--ensemble", ensemble, "poisson, goe, gue, beta, mix-poisson-goe, mix-poisson-gue, mix-goe-gue");
    auto* m = app->add_option("--model", model, "xxz or gaudin")->check(CLI::IsMember({"xxz", "gaudin"}));
    e->excludes(m);
    app->add_option("--n", n, "matrix order for ensembles");
    app->add_option("--lambda", lambda, "mixture parameter");
    app->add_option("--beta", beta, "Dyson index of the beta ensemble");
    app->add_option("--sites", sites, "XXZ chain length");
    app->add_option("--omega", omega, "XXZ disorder strength");
    app->add_option("--coupling", coupling, "XXZ exchange J");
    app->add_flag("--open", open, "XXZ open boundary");
    app->add_option("--sz", sz, "XXZ magnetization sector");
    app->add_option("--spins", spins, "Gaudin spin count");
    app->add_option("--alpha", alpha, "Gaudin mixing angle in [0, pi/2]");
    app->add_option("--kappa", kappa, "Gaudin elliptic modulus");
    app->add_option("--gaudin-lambda", gaudin_lambda, "Gaudin cosine-coupling frequency scale");
    app->add_option("--parity", parity, "Gaudin spin-flip sector (+1 or -1)");
  }

  void require_one() const {
    if (ensemble.empty() == model.empty()) throw InvalidArgument("give exactly one of --ensemble or --model");
  }

  json to_json() const {
    json j;
    if (!ensemble.empty()) {
      j["ensemble"] = ensemble;
      j["n"] = n;
      j["lambda"] = lambda;
      j["beta"] = beta;
    } else if (model == "xxz") {
      j["model"] = model;
      j["sites"] = sites;
      j["omega"] = omega;
      j["coupling"] = coupling;
      j["boundary"] = open ? "open" : "periodic";
      j["sz"] = sz;
    } else {
      j["model"] = model;
      j["spins"] = spins;
      j["alpha"] = alpha;
      j["kappa"] = kappa;
      j["gaudin_lambda"] = gaudin_lambda;
      j["parity"] = parity;
    }
    return j;
  }

  EnsembleSpec ensemble_spec(double parameter, std::uint64_t seed) const {
    EnsembleSpec s{parse_ensemble(ensemble), n, parameter, seed};
    validate(s);
    return s;
  }

  double default_parameter() const {
    const auto k = parse_ensemble(ensemble);
    return k == EnsembleKind::BetaEnsemble ? beta : lambda;
  }

  XXZSpec xxz(double disorder, std::uint64_t seed) const {
    return {sites, coupling, disorder, open ? Boundary::Open : Boundary::Periodic, sz, seed};
  }

  GaudinSpec gaudin(double a, std::uint64_t seed) const { return {spins, a, kappa, gaudin_lambda, parity, seed}; }

  // Spectrum generator for one grid point; `parameter` replaces the swept quantity.
  std::function<std::vector<double>(std::size_t)> generator(double parameter, std::uint64_t seed) const {
    if (!ensemble.empty()) {
      const auto s = ensemble_spec(parameter, seed);
      return [s](std::size_t m) { return sample_spectrum(s, m).energies; };
    }
    if (model == "xxz") {
      const auto s = xxz(parameter, seed);
      return [s](std::size_t m) { return xxz_spectrum(s, m); };
    }
    const auto s = gaudin(parameter, seed);
    return [s](std::size_t m) { return gaudin_spectrum(s, m); };
  }

  double model_parameter() const { return model == "xxz" ? omega : alpha; }
};

// ---------------------------------------------------------------------------

struct GenerateCmd {
  ModelOptions model;
  std::size_t m = 10;
  bool csv = false;
  std::string name = "spectra";
};

void run_generate(const GenerateCmd& c, const Globals& g) {
  c.model.require_one();
  if (c.m < 1) throw InvalidArgument("--m must be positive");
  json params = c.model.to_json();
  params["m"] = c.m;
  params["csv"] = c.csv;
  const double p = c.model.ensemble.empty() ? c.model.model_parameter() : c.model.default_parameter();
  const auto gen = c.model.generator(p, g.seed);

  std::vector<std::vector<double>> spectra(c.m);
  parallel_for(c.m, g.threads, [&](std::size_t k) { spectra[k] = gen(k); });
  SpectrumBatch b;
  b.order = spectra[0].size();
  b.count = c.m;
  b.seed = g.seed;
  b.levels.reserve(b.order * b.count);
  for (const auto& s : spectra) b.levels.insert(b.levels.end(), s.begin(), s.end());

  Run run("generate", g, params);
  run.binary(c.name + ".bin", b);
  if (c.csv) run.text(c.name + ".csv", [&](std::ostream& os) { write_batch_csv(os, b); });
  run.finish();
  std::cout << "wrote " << b.count << " spectra of " << b.order << " levels to " << run.path(c.name + ".bin").string()
            << '\n';
}

// ---------------------------------------------------------------------------

struct AnalyzeCmd {
  std::string spectra;
  double dr = 0.005;
  double rmax = 5.0;
  std::string fit_mode = "free";
  std::string transition;
  std::string ansatz_file;
  double trim = 0.05;
  bool weighted = false;
  bool table1 = false;
};

AnsatzCurve load_curve(const AnalyzeCmd& c) {
  if (!c.ansatz_file.empty()) {
    std::ifstream is(c.ansatz_file);
    if (!is) throw IoError("cannot open " + c.ansatz_file);
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("ansatz manifest: ") + e.what());
    }
    return ansatz_from_json(j);
  }
  if (c.transition.empty()) throw InvalidArgument("--fit-mode ansatz needs --transition or --ansatz");
  return tabulated_ansatz(parse_transition(c.transition));
}

void run_analyze(const AnalyzeCmd& c, const Globals& g) {
  json params;
  params["table1"] = c.table1;
  if (c.table1 && c.spectra.empty()) {
    Run run("analyze", g, params);
    run.text("table1.csv", [](std::ostream& os) { write_table1_csv(os); });
    run.finish();
    write_table1_csv(std::cout);
    return;
  }
  if (c.spectra.empty()) throw InvalidArgument("analyze: spectra file required");
  params["spectra"] = c.spectra;
  params["dr"] = c.dr;
  params["rmax"] = c.rmax;
  params["fit_mode"] = c.fit_mode;
  params["trim"] = c.trim;
  params["weighted"] = c.weighted;

  const auto batch = read_batch_file(c.spectra);
  RatioOptions ropt;
  ropt.trim_fraction = c.trim;
  auto pooled = accumulate_ratios(
      batch.count,
      [&](std::size_t m) {
        const auto s = batch.spectrum(m);
        return std::vector<double>(s.begin(), s.end());
      },
      Binning{c.dr, c.rmax}, ropt, g.threads);

  FitOptions fopt;
  fopt.poisson_weighted = c.weighted;
  FitReport rep;
  std::optional<AnsatzCurve> curve;
  if (c.fit_mode == "free") {
    rep = fit_free(pooled.histogram, initial_guess(pooled.mean_r_tilde), fopt);
  } else {
    curve = load_curve(c);
    params["transition"] = std::string(to_string(curve->transition));
    rep = fit_ansatz(pooled.histogram, *curve, fopt);
  }

  json out;
  out["fit"] = to_json(rep);
  out["mean_r_tilde"] = pooled.mean_r_tilde;
  out["spectra"] = batch.count;
  out["levels"] = batch.order;
  out["merged_levels"] = pooled.merged_levels;
  json wig;
  for (int b : {1, 2, 4}) wig[std::to_string(b)] = error_metrics_wigner(pooled.histogram, b).mean_error;
  out["wigner_mean_error"] = wig;
  out["poisson_mean_error"] = error_metrics(pooled.histogram, make_surmise(0.0, 0.0)).mean_error;

  Run run("analyze", g, params);
  if (c.table1) run.text("table1.csv", [](std::ostream& os) { write_table1_csv(os); });
  run.text("histogram.csv", [&](std::ostream& os) { write_histogram_csv(os, pooled.histogram); });
  run.json_file("fit.json", out);
  run.finish();
  std::cout << "beta = " << fmt(rep.params.beta) << " +- " << fmt(rep.beta_err) << "\ngamma = " << fmt(rep.params.gamma)
            << " +- " << fmt(rep.gamma_err) << "\nC = " << fmt(rep.params.c) << "\nmean error = "
            << fmt(rep.mean_error) << '\n';
}

// ---------------------------------------------------------------------------

struct CrossoverCmd {
  ModelOptions model;
  std::string grid;
  std::size_t m = 200;
  double dr = 0.05;
  double rmax = 5.0;
  double trim = 0.05;
};

std::vector<double> default_grid(const ModelOptions& mo) {
  if (!mo.model.empty()) {
    if (mo.model == "xxz") return {5.0, 3.0, 2.4, 2.0};
    std::vector<double> a;
    for (int q = 0; q <= 10; ++q) a.push_back(std::numbers::pi / 2 * q / 10.0);
    return a;
  }
  return default_sweep_grid(parse_ensemble(mo.ensemble));
}

void run_crossover(const CrossoverCmd& c, const Globals& g) {
  c.model.require_one();
  const auto grid = c.grid.empty() ? default_grid(c.model) : parse_list(c.grid);
  json params = c.model.to_json();
  params["grid"] = grid;
  params["m"] = c.m;
  params["dr"] = c.dr;
  params["rmax"] = c.rmax;
  params["trim"] = c.trim;
  if (c.m < 1) throw InvalidArgument("--m must be positive");

  RatioOptions ropt;
  ropt.trim_fraction = c.trim;
  std::vector<PooledStats> pooled;
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const auto gen = c.model.generator(grid[q], grid_point_seed(g.seed, q));
    pooled.push_back(accumulate_ratios(c.m, gen, Binning{c.dr, c.rmax}, ropt, g.threads));
  }
  const auto rows = crossover_curve(grid, pooled, {}, g.threads);

  Run run("crossover", g, params);
  run.text("crossover.csv", [&](std::ostream& os) { write_crossover_csv(os, rows); });
  run.finish();
  write_crossover_csv(std::cout, rows);
}

// ---------------------------------------------------------------------------

struct AnsatzCmd {
  std::string transition = "all";
  std::size_t points = 101;
};

void run_ansatz(const AnsatzCmd& c, const Globals& g) {
  std::vector<Transition> ts;
  if (c.transition == "all") ts = {Transition::PoissonGOE, Transition::PoissonGUE, Transition::GOEGUE};
  else ts = {parse_transition(c.transition)};
  if (c.points < 20) throw InvalidArgument("--points must be at least 20");
  json params;
  params["transition"] = c.transition;
  params["points"] = c.points;
  Run run("ansatz", g, params);
  std::cout << "transition,c0,c1,c2,exponents,max_deviation,gamma_lo,gamma_hi\n";
  for (auto t : ts) {
    const auto tab = solve_gamma_curve(t, c.points, g.threads);
    const auto poly = fit_ansatz_polynomial(tab);
    const std::string name(to_string(t));
    run.text("ansatz_" + name + ".csv", [&](std::ostream& os) { write_ansatz_csv(os, poly); });
    json j = ansatz_to_json(poly);
    j["tabulated_coefficients"] = tabulated_ansatz(t).coefficients;
    run.json_file("ansatz_" + name + ".json", j);
    std::cout << name;
    for (double x : poly.coefficients) std::cout << ',' << fmt(x);
    std::cout << ",{";
    for (std::size_t i = 0; i < poly.exponents.size(); ++i) std::cout << (i ? " " : "") << poly.exponents[i];
    std::cout << "}," << fmt(poly.max_deviation) << ',' << fmt(tab.gamma.front()) << ',' << fmt(tab.gamma.back())
              << '\n';
  }
  run.finish();
}

// ---------------------------------------------------------------------------

struct ScalingCmd {
  std::string ensemble = "goe";
  std::string mode = "m";
  std::string orders = "10,100,500";
  double budget = 1e6;
  std::size_t n = 200;
  std::string realizations = "100,1000,10000";
  double dr = 0.005;
  double rmax = 5.0;
};

void run_scaling(const ScalingCmd& c, const Globals& g) {
  const auto kind = parse_ensemble(c.ensemble);
  FitSettings settings;
  settings.binning = {c.dr, c.rmax};
  json params;
  params["ensemble"] = c.ensemble;
  params["mode"] = c.mode;
  params["dr"] = c.dr;
  params["rmax"] = c.rmax;
  json summary;
  std::vector<ScalingRow> rows;
  if (c.mode == "n") {
    const auto orders = parse_counts(c.orders);
    params["orders"] = orders;
    params["budget"] = c.budget;
    rows = scaling_N(kind, orders, c.budget, g.seed, settings, g.threads);
  } else {
    const auto ms = parse_counts(c.realizations);
    params["n"] = c.n;
    params["realizations"] = ms;
    const auto res = scaling_M(kind, c.n, ms, g.seed, settings, g.threads);
    rows = res.rows;
    if (res.slope) {
      summary["slope"] = res.slope->slope;
      summary["slope_stderr"] = res.slope->slope_stderr;
      summary["intercept"] = res.slope->intercept;
    } else {
      summary["slope"] = nullptr;
    }
  }
  Run run("scaling", g, params);
  run.text("scaling.csv", [&](std::ostream& os) { write_scaling_csv(os, rows); });
  if (c.mode == "m") run.json_file("scaling.json", summary);
  run.finish();
  write_scaling_csv(std::cout, rows);
  if (summary.contains("slope") && !summary["slope"].is_null()) {
    std::cout << "slope = " << fmt(summary["slope"].get<double>()) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level-spacing ratio statistics and surmise fits"};
  app.set_config("--config", "", "flat key=value configuration file");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  g.threads = default_threads();
  app.add_option("--threads", g.threads, "worker threads (default: $RSURMISE_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out", g.out, "output directory");
  app.set_version_flag("--version", RSURMISE_VERSION);

  GenerateCmd gen;
  auto* gen_app = app.add_subcommand("generate", "sample spectra into a packed batch");
  gen.model.add(gen_app);
  gen_app->add_option("--m", gen.m, "number of realizations");
  gen_app->add_flag("--csv", gen.csv, "also export the batch as CSV");
  gen_app->add_option("--name", gen.name, "output file stem");

  AnalyzeCmd an;
  auto* an_app = app.add_subcommand("analyze", "histogram ratios of a batch and fit the surmise");
  an_app->add_option("spectra", an.spectra, "spectrum batch file");
  an_app->add_option("--dr", an.dr, "bin width");
  an_app->add_option("--rmax", an.rmax, "histogram upper edge");
  an_app->add_option("--fit-mode", an.fit_mode)->check(CLI::IsMember({"free", "ansatz"}));
  an_app->add_option("--transition", an.transition, "poisson-goe, poisson-gue or goe-gue");
  an_app->add_option("--ansatz", an.ansatz_file, "ansatz JSON written by the ansatz command");
  an_app->add_option("--trim", an.trim, "fraction of ratios dropped at each spectrum edge");
  an_app->add_flag("--weighted", an.weighted, "weight residuals by Poisson count variance");
  an_app->add_flag("--table1", an.table1, "write the surmise reference table");

  CrossoverCmd cr;
  auto* cr_app = app.add_subcommand("crossover", "free fits along a parameter sweep");
  cr.model.add(cr_app);
  cr_app->add_option("--grid", cr.grid, "comma-separated parameter values (default: built-in grid)");
  cr_app->add_option("--m", cr.m, "realizations per grid point");
  cr_app->add_option("--dr", cr.dr, "bin width");
  cr_app->add_option("--rmax", cr.rmax, "histogram upper edge");
  cr_app->add_option("--trim", cr.trim, "fraction of ratios dropped at each spectrum edge");

  AnsatzCmd az;
  auto* az_app = app.add_subcommand("ansatz", "entropy-based gamma(beta) curves and polynomial fits");
  az_app->add_option("--transition", az.transition, "poisson-goe, poisson-gue, goe-gue or all");
  az_app->add_option("--points", az.points, "beta grid size");

  ScalingCmd sc;
  auto* sc_app = app.add_subcommand("scaling", "mean fit error versus N or M");
  sc_app->add_option("--ensemble", sc.ensemble);
  sc_app->add_option("--mode", sc.mode)->check(CLI::IsMember({"n", "m"}));
  sc_app->add_option("--orders", sc.orders, "N values for --mode n");
  sc_app->add_option("--budget", sc.budget, "ratios per N for --mode n");
  sc_app->add_option("--n", sc.n, "matrix order for --mode m");
  sc_app->add_option("--realizations", sc.realizations, "M values for --mode m");
  sc_app->add_option("--dr", sc.dr, "bin width");
  sc_app->add_option("--rmax", sc.rmax, "histogram upper edge");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen_app) run_generate(gen, g);
    else if (*an_app) run_analyze(an, g);
    else if (*cr_app) run_crossover(cr, g);
    else if (*az_app) run_ansatz(az, g);
    else if (*sc_app) run_scaling(sc, g);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
