// tricluster_cli: construction, verification and MBQC simulation with JSON reports.
//
// Exit codes: 0 every asserted check passed, 1 a check failed, 2 bad arguments,
// 3 resource limit. Reports go to stdout (and --report when given).
#include "tricluster/tricluster.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace tricluster;
using json = nlohmann::json;

namespace {

struct RunConfig {
  int rows = 1;
  int cols = 2;
  std::string flavor = "projector";
  double tol = 0;  // 0: per-command default
  std::uint64_t seed = 0;
  double theta = 0.7;
  std::size_t budget_bytes = std::size_t(8) << 30;
  std::string out;
  std::string report;
  std::vector<int> post;
  std::string boundary = "plus";
  std::string protocol = "line";
  std::string pattern;
  std::vector<int> sizes;
  int levels = 6;
  bool adaptive = false;

  json to_json() const {
    return {{"rows", rows},         {"cols", cols},         {"flavor", flavor},   {"tol", tol},
            {"seed", seed},         {"theta", theta},       {"budget_bytes", budget_bytes},
            {"post", post},         {"boundary", boundary}, {"protocol", protocol}, {"sizes", sizes},
            {"levels", levels},     {"adaptive", adaptive}};
  }
  Budget budget() const { return Budget{budget_bytes}; }
  double tol_or(double d) const { return tol > 0 ? tol : d; }
};

struct Report {
  std::string command;
  json body = json::object();
  json checks = json::array();

  void check(const std::string& name, bool pass, json detail = json::object()) {
    detail["name"] = name;
    detail["pass"] = pass;
    checks.push_back(std::move(detail));
  }
  std::vector<std::string> failures() const {
    std::vector<std::string> f;
    for (const auto& c : checks)
      if (!c["pass"].get<bool>()) f.push_back(c["name"]);
    return f;
  }
};

BoundaryAssignment make_boundary(const HexLattice& L, const std::string& kind, std::uint64_t seed) {
  if (kind == "plus") return BoundaryAssignment::all_plus(L);
  if (kind == "zero") return BoundaryAssignment::uniform(L, Qubit{cplx(1), cplx(0)});
  if (kind == "minus") return BoundaryAssignment::uniform(L, Qubit{cplx(M_SQRT1_2), cplx(-M_SQRT1_2)});
  if (kind == "free") return BoundaryAssignment::all_free(L);
  if (kind == "seeded") {
    CounterRng rng(seed);
    BoundaryAssignment b;
    for (LegId l : L.dangling()) {
      cplx a(rng.uniform() - 0.5, rng.uniform() - 0.5), c(rng.uniform() - 0.5, rng.uniform() - 0.5);
      double n = std::sqrt(std::norm(a) + std::norm(c));
      b.legs[l] = Qubit{a / n, c / n};
    }
    return b;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown boundary " + kind);
}

json complex_json(const CVec& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
  return a;
}

LogicalState seeded_input(const std::vector<std::string>& wires, std::uint64_t seed) {
  CounterRng rng(seed ^ 0x5EEDull);
  LogicalState s{wires, CVec(Index(1) << wires.size()), 1.0};
  for (Index i = 0; i < s.amplitudes.size(); ++i) s.amplitudes(i) = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
  s.amplitudes.normalize();
  return s;
}

// ---------------------------------------------------------------------------

void cmd_state_build(const RunConfig& c, Report& r) {
  HexLattice L = build_patch({c.rows, c.cols});
  ContractOptions co;
  co.budget = c.budget();
  StateVector sv = contract_state(L, projector(ProjectorKind::TRIC), make_boundary(L, c.boundary, c.seed), co);
  r.body["lattice"] = to_json(L);
  r.body["state"] = {{"sites", sv.sites.size()}, {"size", sv.size()}, {"norm", sv.norm},
                     {"open_legs", sv.open_legs}, {"boundary", c.boundary}};
  if (!c.out.empty()) {
    write_state(c.out, sv, {{"rows", c.rows}, {"cols", c.cols}, {"boundary", c.boundary}, {"seed", c.seed}});
    r.body["written"] = c.out;
  }
  r.check("state_nonzero", sv.norm > 0, {{"norm", sv.norm}});
}

void cmd_ground_check(const RunConfig& c, Report& r) {
  HexLattice L = build_patch({c.rows, c.cols});
  Flavor f = parse_flavor(c.flavor);
  AssembleOptions ao;
  ao.budget = c.budget();
  HamiltonianOperator H = assemble(L, f, ao);
  double tol = c.tol_or(f == Flavor::SPIN_EXPLICIT ? 1e-8 : 1e-10);
  ContractOptions co;
  co.budget = c.budget();
  for (std::string b : {"plus", "zero", "seeded"}) {
    StateVector psi = contract_state(L, projector(ProjectorKind::TRIC), make_boundary(L, b, c.seed), co);
    CVec y;
    H.apply(psi.amplitudes, y);
    double res = y.norm() / psi.amplitudes.norm();
    r.check("ground_" + b, res < tol, {{"boundary", b}, {"residual", res}, {"tol", tol}});
  }
  r.body["flavor"] = to_string(f);
  r.body["terms"] = H.terms().size();
  r.body["dim"] = H.dim();
}

void cmd_spectrum(const RunConfig& c, Report& r) {
  HexLattice L = build_patch({c.rows, c.cols});
  Flavor f = parse_flavor(c.flavor);
  AssembleOptions ao;
  ao.budget = c.budget();
  HamiltonianOperator H = assemble(L, f, ao);
  SpectrumOptions so;
  so.seed = c.seed;
  so.tol = c.tol_or(1e-9);
  so.budget = c.budget();
  auto sp = lowest_spectrum(H, c.levels, so);
  r.body["flavor"] = to_string(f);
  r.body["dim"] = H.dim();
  r.body["spectrum"] = sp.to_json();
  r.check("spectrum_converged", sp.converged);
  if (f == Flavor::PROJECTOR) {
    auto g = spectral_gap(L, H, so);
    r.body["gap"] = g.to_json();
    r.check("gap_at_least_1/24", g.gap >= 1.0 / 24, {{"gap", g.gap}});
  }
}

void cmd_uniqueness(const RunConfig& c, Report& r) {
  HexLattice L = build_patch({c.rows, c.cols});
  std::vector<int> sizes = c.sizes.empty() ? std::vector<int>{3, 4} : c.sizes;
  double tol = c.tol_or(1e-8);
  json regions = json::array();
  int total = 0, ok = 0;
  for (int k : sizes)
    for (const auto& reg : enumerate_regions(L, k)) {
      auto u = check_uniqueness(L, reg, tol);
      regions.push_back(u.to_json());
      ++total;
      ok += u.pass;
    }
  r.body["regions"] = regions;
  r.check("uniqueness", ok == total && total > 0, {{"passed", ok}, {"total", total}, {"angle_tol", tol}});
}

void cmd_injectivity(const RunConfig& c, Report& r) {
  HexLattice L = build_patch({c.rows, c.cols});
  std::vector<int> sizes = c.sizes.empty() ? std::vector<int>{2, 3, 4} : c.sizes;
  json regions = json::array();
  int total = 0, ok = 0;
  for (int k : sizes)
    for (const auto& reg : enumerate_regions(L, k)) {
      auto inj = check_injectivity(L, reg);
      regions.push_back({{"region", coords_json(L, reg)}, {"rank", inj.rank}, {"expected", inj.expected},
                         {"injective", inj.injective}});
      ++total;
      ok += inj.injective;
    }
  r.body["regions"] = regions;
  r.check("injectivity", ok == total && total > 0, {{"passed", ok}, {"total", total}});
}

void cmd_gap_lemmas(const RunConfig& c, Report& r) {
  HexLattice req = build_patch({c.rows, c.cols});
  auto [L, substituted] = gap_lemma_patch(req);
  r.body["patch"] = to_json(L);
  r.body["substituted_interior_block_patch"] = substituted;
  BlockPartition P = block_partition(L);
  if (P.adjacency.empty()) throw Error(ErrorKind::Partition, "patch has no adjacent blocks");
  auto [m, n] = P.adjacency.front();
  double dense_tol = c.tol_or(1e-9);
  auto half = check_mu(L, P, m, n, 0.5, dense_tol);
  auto over = check_mu(L, P, m, n, 0.55, dense_tol);
  r.check("mu_0.5_psd", half.inequality.passes, half.to_json());
  r.check("mu_0.55_not_psd", !over.inequality.passes, over.to_json());
  auto anti = check_anticommutators(L, 1e-7, c.seed);
  r.check("anticommutator_classes", anti.pass(), anti.to_json());
  std::vector<Coord> two = {L.coord(P.blocks[m].lower), L.coord(P.blocks[m].upper), L.coord(P.blocks[n].lower),
                            L.coord(P.blocks[n].upper)};
  SpectrumOptions so;
  so.seed = c.seed;
  so.budget = c.budget();
  auto kb = check_K_bound(HexLattice::from_coords(two), so);
  r.check("K_bound_1/3", kb.pass(), kb.to_json());
}

void cmd_appendix_a(const RunConfig& c, Report& r) {
  auto search = find_level_map(c.tol_or(1e-8));
  json rep = search.report;
  rep.erase("permutations");
  r.body["level_map_search"] = rep;
  r.check("level_map_found", !search.passing.empty(), {{"passing", search.passing.size()}});
}

void cmd_verify_gates(const RunConfig& c, Report& r) {
  double tol = c.tol_or(1e-10);
  LogicalState in1 = seeded_input({"q"}, c.seed);
  LogicalState in2 = seeded_input({"a", "b"}, c.seed);
  json rows1 = json::array(), rows2 = json::array();
  bool ok1 = true, ok2 = true;
  for (int o = 0; o < 6; ++o) {
    Pattern p = protocols::line(c.theta, o);
    double fop = operator_fidelity(logical_action(p, {o, 0}, c.budget()), p.decode_out * one_qubit_table(o, c.theta) * p.encode_in);
    RunOptions ro;
    ro.seed = c.seed;
    ro.budget = c.budget();
    double fst = run_pattern(p, in1, ro).fidelity;
    ok1 = ok1 && fop >= 1 - tol && fst >= 1 - tol;
    rows1.push_back({{"outcome", o}, {"theta", c.theta}, {"operator_fidelity", fop}, {"state_fidelity", fst}});
  }
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      Pattern p = protocols::cz(std::array<int, 2>{a, b});
      double fop = operator_fidelity(logical_action(p, {a, b, 0, 0}, c.budget()), cz_correction(a, b));
      RunOptions ro;
      ro.seed = c.seed;
      ro.budget = c.budget();
      double fst = run_pattern(p, in2, ro).fidelity;
      ok2 = ok2 && fop >= 1 - tol && fst >= 1 - tol;
      rows2.push_back({{"outcomes", {a, b}}, {"operator_fidelity", fop}, {"state_fidelity", fst}});
    }
  r.body["one_qubit"] = rows1;
  r.body["cz"] = rows2;
  r.check("one_qubit_gates", ok1, {{"rows", 6}, {"tol", tol}});
  r.check("cz_gate", ok2, {{"rows", 36}, {"tol", tol}});
}

Pattern load_pattern(const RunConfig& c) {
  auto builtin = [&]() -> Pattern {
    if (c.protocol == "line") return protocols::line(c.theta);
    if (c.protocol == "cz") return protocols::cz();
    if (c.protocol == "appendix-b") return protocols::appendix_b();
    if (c.protocol == "init") return protocols::init();
    if (c.protocol == "readout") return protocols::readout();
    throw Error(ErrorKind::InvalidArgument, "unknown protocol " + c.protocol);
  };
  Pattern p;
  if (c.pattern.empty()) {
    p = builtin();
  } else {
    std::ifstream is(c.pattern);
    if (!is) throw Error(ErrorKind::InvalidArgument, "cannot open pattern file " + c.pattern);
    json j = json::parse(is);
    if (j.is_array()) {
      p = builtin();
      p.steps = steps_from_json(p.lattice, j);
    } else {
      p = pattern_from_json(j);
    }
  }
  if (c.post.size() > p.steps.size()) throw Error(ErrorKind::InvalidArgument, "more --post outcomes than steps");
  for (std::size_t i = 0; i < c.post.size(); ++i) p.steps[i].mode = MeasureMode::post(c.post[i]);
  return p;
}

void cmd_mbqc_run(const RunConfig& c, Report& r) {
  Pattern p = load_pattern(c);
  LogicalState in = seeded_input(p.input_names(), c.seed);
  RunOptions ro;
  ro.seed = c.seed;
  ro.adaptive = c.adaptive;
  ro.budget = c.budget();
  RunResult res = run_pattern(p, in, ro);
  r.body["pattern"] = p.name;
  r.body["input"] = complex_json(in.amplitudes);
  r.body["run"] = res.to_json();
  r.body["output"] = complex_json(res.corrected.amplitudes);
  if (p.inputs.size() == p.outputs.size()) {
    double tol = c.tol_or(1e-10);
    r.check("fidelity", res.fidelity >= 1 - tol, {{"fidelity", res.fidelity}, {"tol", tol}});
  } else {
    r.check("frame_is_pauli", res.frame_is_pauli);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tricluster: spin-5/2 hexagonal PEPS construction, verification and MBQC simulation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "optional TOML/INI file; command-line flags take precedence");
  RunConfig cfg;

  auto add_common = [&](CLI::App* s) {
    s->add_option("--rows", cfg.rows, "patch rows")->check(CLI::PositiveNumber);
    s->add_option("--cols", cfg.cols, "patch columns")->check(CLI::PositiveNumber);
    s->add_option("--flavor", cfg.flavor, "Hamiltonian flavor")->check(CLI::IsMember({"projector", "spin", "block-k"}));
    s->add_option("--tol", cfg.tol, "tolerance override")->check(CLI::PositiveNumber);
    s->add_option("--seed", cfg.seed, "RNG seed");
    s->add_option("--theta", cfg.theta, "rotation angle");
    s->add_option("--budget-bytes", cfg.budget_bytes, "memory budget")->check(CLI::PositiveNumber);
    s->add_option("--out", cfg.out, "output file");
    s->add_option("--report", cfg.report, "also write the JSON report here");
    s->add_option("--post", cfg.post, "postselected outcomes, in step order")->delimiter(',')->check(CLI::Range(0, 5));
    s->add_option("--boundary", cfg.boundary, "boundary legs")->check(CLI::IsMember({"plus", "zero", "minus", "free", "seeded"}));
    s->add_option("--protocol", cfg.protocol, "built-in pattern")
        ->check(CLI::IsMember({"line", "cz", "appendix-b", "init", "readout"}));
    s->add_option("--pattern", cfg.pattern, "pattern JSON (object, or step list over --protocol)");
    s->add_option("--sizes", cfg.sizes, "region sizes")->delimiter(',')->check(CLI::PositiveNumber);
    s->add_option("--levels", cfg.levels, "eigenvalues to report")->check(CLI::PositiveNumber);
    s->add_flag("--adaptive", cfg.adaptive, "flip rotation angles from the running frame");
  };

  // Options live on the top-level app so that a config file uses plain keys; subcommands fall through to them.
  add_common(&app);
  app.fallthrough();

  std::string command;
  std::function<void(const RunConfig&, Report&)> fn;
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help, auto f) {
    auto* s = parent->add_subcommand(name, help);
    s->callback([&, f, s, parent] {
      command = parent->get_name() + " " + s->get_name();
      fn = f;
    });
  };
  auto* state = app.add_subcommand("state", "PEPS construction")->require_subcommand(1);
  leaf(state, "build", "contract the state on a patch", cmd_state_build);
  auto* ham = app.add_subcommand("ham", "Hamiltonian checks")->require_subcommand(1);
  leaf(ham, "ground-check", "H|psi> = 0 on three boundaries", cmd_ground_check);
  leaf(ham, "spectrum", "lowest eigenvalues and gap", cmd_spectrum);
  auto* ver = app.add_subcommand("verify", "structural checks")->require_subcommand(1);
  leaf(ver, "uniqueness", "intersection property on every region", cmd_uniqueness);
  leaf(ver, "injectivity", "boundary-to-physical injectivity", cmd_injectivity);
  leaf(ver, "gap-lemmas", "mu inequality, anticommutators, K bound", cmd_gap_lemmas);
  leaf(ver, "appendix-a", "spin-operator level-map search", cmd_appendix_a);
  auto* mb = app.add_subcommand("mbqc", "measurement-based computation")->require_subcommand(1);
  leaf(mb, "verify-gates", "one-qubit and CZ correction tables", cmd_verify_gates);
  leaf(mb, "run", "run a pattern", cmd_mbqc_run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  Report rep;
  rep.command = command;
  try {
    fn(cfg, rep);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Resource ? 3 : 2;
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  auto failures = rep.failures();
  json out = {{"command", rep.command}, {"config", cfg.to_json()}, {"result", rep.body}, {"checks", rep.checks},
              {"pass", failures.empty()}};
  std::string text = out.dump(2) + "\n";
  std::cout << text;
  if (!cfg.report.empty()) std::ofstream(cfg.report) << text;
  if (!failures.empty()) {
    std::cerr << "failed:";
    for (const auto& f : failures) std::cerr << " " << f;
    std::cerr << "\n";
    return 1;
  }
  return 0;
}
