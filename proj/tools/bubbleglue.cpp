// Command-line surface for the gluing laboratory: builds glued curves,
// measures norms and balancing residuals, reports kernel dimensions, runs
// the Picard correction, sweeps neck schedules, certifies convergence of
// sequences, and self-tests every module on shipped fixtures.
//
// Exit codes: 0 success; 1 numerical or input failure; 2 inadmissible neck
// sizes (the 16 (|I|+|M|) sqrt(delta) < r_C rule); 3 schema violations.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"

#include "bubbleglue/io.hpp"

using namespace bubbleglue;

namespace {

struct CommonOpts {
  std::string input;
  std::string necks;
  std::string emit;
  ExperimentConfig cfg;
};

void add_config_flags(CLI::App* cmd, CommonOpts& o, bool needs_seed = true) {
  auto* seed = cmd->add_option("--seed", o.cfg.seed,
                               "RNG seed (recorded in every artifact)");
  if (needs_seed) seed->required();
  cmd->add_option("--p", o.cfg.p, "norm exponent, p > 2");
  cmd->add_option("--ds", o.cfg.grid.ds, "radial log step of the grid");
  cmd->add_option("--nt", o.cfg.grid.nt, "angular grid nodes");
  cmd->add_option("--smax", o.cfg.grid.smax, "outer log radius of the grid");
  cmd->add_option("--margin", o.cfg.grid.margin,
                  "log depth below each neck scale");
  cmd->add_option("--tol", o.cfg.tol, "iteration tolerance");
  cmd->add_option("--max-iter", o.cfg.max_iter, "iteration cap");
  cmd->add_option("--quad-radial", o.cfg.quadrature.radial_nodes,
                  "radial quadrature nodes");
  cmd->add_option("--quad-angular", o.cfg.quadrature.angular_nodes,
                  "angular quadrature nodes");
}

json curve_to_json(const MarkedCurve& c) {
  json nodes = json::array();
  for (const int id : c.tree.tree.elements) {
    json n;
    n["id"] = id;
    const auto pit = c.tree.tree.parent.find(id);
    if (pit == c.tree.tree.parent.end())
      n["parent"] = nullptr;
    else
      n["parent"] = pit->second;
    const auto xit = c.tree.node_pos.find(id);
    if (xit != c.tree.node_pos.end())
      n["x"] = json::array({xit->second.real(), xit->second.imag()});
    nodes.push_back(n);
  }
  json marks = json::array();
  for (const auto& [label, mp] : c.marks)
    marks.push_back(json{{"label", label},
                         {"node", mp.component},
                         {"y", json::array({mp.y.real(), mp.y.imag()})}});
  return json{{"nodes", nodes}, {"marks", marks}};
}

void emit_artifact(const std::string& path, const json& j) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty())
    std::cout << text;
  else
    write_text_file(path, text);
}

std::map<int, cplx> load_necks(const std::string& path) {
  if (path.empty()) return {};
  return necks_from_json(read_json_file(path, "necks"));
}

// Schedule syntax: either a comma list ("1e-2,1e-3") or "a:b:Nlog" for N
// log-spaced values from a to b inclusive.
std::vector<double> parse_schedule(const std::string& text) {
  std::vector<double> out;
  const auto ncolon = std::count(text.begin(), text.end(), ':');
  if (ncolon == 2) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    const double a = std::stod(text.substr(0, c1));
    const double b = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    std::string tail = text.substr(c2 + 1);
    if (tail.size() < 4 || tail.substr(tail.size() - 3) != "log")
      throw GeomError("schedule: expected a:b:Nlog");
    const int n = std::stoi(tail.substr(0, tail.size() - 3));
    if (n < 1 || !(a > 0) || !(b > 0))
      throw GeomError("schedule: need N >= 1 and positive endpoints");
    for (int k = 0; k < n; ++k) {
      const double t = n == 1 ? 0.0 : double(k) / double(n - 1);
      out.push_back(a * std::pow(b / a, t));
    }
    return out;
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto comma = text.find(',', pos);
    const std::string tok =
        text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (!tok.empty()) out.push_back(std::stod(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// ------------------------------------------------------------------ selftest

struct Scoreboard {
  int failures = 0;
  void check(const std::string& name, bool ok) {
    std::printf("%-52s %s\n", name.c_str(), ok ? "ok" : "FAIL");
    if (!ok) ++failures;
  }
};

BubbleMap fixture_chain() {
  BubbleMap b;
  b.curve.tree.tree = RootedTree::from_parent_map({{0, std::nullopt}, {1, 0}});
  b.curve.tree.node_pos = {{1, cplx(0.5, 0.2)}};
  b.maps[0] = RationalMap::identity_p1();
  RationalMap ch;
  ch.degree = 1;
  ch.coeffs.resize(2, 2);
  ch.coeffs << cplx(1, 0), cplx(0.5, 0.2), cplx(0, 0), cplx(1, 0);
  b.maps[1] = ch;
  return b;
}

int run_selftest(const ExperimentConfig& cfg) {
  Scoreboard sb;
  // rounded-log-ramp cutoff energy stays under the linear bound
  {
    bool ok = true;
    for (const double eps : {0.5, 0.01})
      ok = ok && ms_cutoff_energy(eps, cfg.quadrature) <= 8.0 * eps;
    sb.check("cutoff: log-ramp energy <= 8 eps", ok);
  }
  // tree weights sum degrees plus marks at the root
  {
    bool ok = true;
    for (const RootedTree& t : enumerate_trees(4)) {
      BubbleType ty;
      ty.tree = t;
      for (const int i : t.elements) ty.degree[i] = 1 + i % 2;
      long long total = 0;
      for (const auto& [i, d] : ty.degree) total += d;
      ok = ok && ty.weights().at(t.root) == total;
      ok = ok && ty.collapse({}).tree.size() == 1;
      ok = ok && type_leq(ty, ty);
    }
    sb.check("trees: root weight totals, collapse, reflexivity", ok);
  }
  // chart change round-trips through the embedding
  {
    bool ok = true;
    for (const cplx z : {cplx(0.3, 0.4), cplx(2.0, -1.0), cplx(-5.0, 0.1)}) {
      const SpherePoint a = SpherePoint::north_coord(z);
      ok = ok && (embed(a) - embed(other_chart(a))).norm() < 1e-12;
    }
    sb.check("sphere: chart duality via the embedding", ok);
  }
  // map energy equals the degree
  {
    const double e = energy(RationalMap::identity_p1(), cfg.quadrature);
    sb.check("maps: energy of a degree-1 map is 1", std::abs(e - 1.0) < 1e-6);
  }
  // balancing drives both functionals to zero
  {
    const BalanceResult br = balance_solve(fixture_chain(), 1e-10, 80, cfg.quadrature);
    sb.check("balance: residuals vanish on the chain fixture",
             br.max_residual < 1e-8);
  }
  // the gluing map's antiholomorphic defect matches its closed form
  {
    const GluingMap g({fixture_chain(), {{1, cplx(1e-4, 4e-5)}}});
    const NeckInfo& nk = g.necks().front();
    const cplx z = nk.center + std::polar(0.75 * nk.sqrt_v(), 1.1);
    const DbarSample s = dbar_qupsilon(g, nk.surface_component, z, 1e-7);
    const double rel = std::abs(s.finite_difference - s.closed_form) /
                       std::max(1e-30, std::abs(s.closed_form));
    sb.check("gluing: stencil matches the closed-form defect", rel < 1e-4);
  }
  // kernel dimension matches the index count
  {
    bool ok = true;
    for (const int n : {1, 2}) {
      RationalMap u = RationalMap::identity_p1();
      if (n == 2) {
        u.coeffs.conservativeResize(3, 2);
        u.coeffs.row(2) << cplx(0.3, 0.1), cplx(0.2, -0.4);
      }
      ok = ok && kernel_basis(u, n).dimension() == (n + 1) * 2 - 1;
    }
    sb.check("kernel: dimension (n+1)(d+1)-1 at degree 1", ok);
  }
  // pregluing defect scales like |upsilon|^{1/p}
  {
    const GluingMap g({fixture_chain(), {{1, cplx(1e-4, 0)}}});
    const GluedGrid grid(g, cfg.grid);
    const PregluingReport rep = check_pregluing_estimates(grid, cfg.p);
    sb.check("pregluing: positive finite defect ratio",
             rep.ratio > 0 && rep.ratio < 1e3);
  }
  // the correction removes almost all of the defect
  {
    const GluingMap g({fixture_chain(), {{1, cplx(1e-4, 0)}}});
    const GluedGrid grid(g, cfg.grid);
    const CorrectionState cs = picard_correct(grid, cfg.p, cfg.tol, cfg.max_iter);
    sb.check("correction: final defect under 1% of the initial one",
             cs.final_defect_norm < 1e-2 * cs.alpha_norm &&
                 cs.eta_norm <= 2.0 * cs.alpha_norm);
  }
  // a constant sequence certifies as convergent
  {
    const BubbleMap b = fixture_chain();
    const ConvergenceCertificate cert = converge_check(
        b, std::vector<BubbleMap>{b, b}, std::vector<std::map<int, cplx>>(2),
        cfg.grid);
    sb.check("convergence: constant sequence certifies",
             cert.converged && cert.entries.back().sup_distance < 1e-6);
  }
  std::printf("%d checks failed\n", sb.failures);
  return sb.failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical gluing laboratory for bubble maps into P^n"};
  app.require_subcommand(1);

  CommonOpts o;
  o.cfg.grid = GridSpec{0.2, 32, 12.0, 6.0};
  o.cfg.threads = thread_cap();

  auto* glue = app.add_subcommand("glue", "build the glued curve and necks");
  glue->add_option("--input", o.input, "bubble map JSON")->required();
  glue->add_option("--necks", o.necks, "neck vectors JSON")->required();
  glue->add_option("--emit", o.emit, "output JSON path (default stdout)");
  add_config_flags(glue, o);

  auto* norms = app.add_subcommand("norms", "pregluing norms report");
  norms->add_option("--input", o.input, "bubble map JSON")->required();
  norms->add_option("--necks", o.necks, "neck vectors JSON")->required();
  norms->add_option("--emit", o.emit, "output CSV path (default stdout)");
  add_config_flags(norms, o);

  auto* balance = app.add_subcommand("balance", "balance a bubble map");
  balance->add_option("--input", o.input, "bubble map JSON")->required();
  balance->add_option("--emit", o.emit, "output JSON path (default stdout)");
  add_config_flags(balance, o);

  auto* kernel = app.add_subcommand("kernel", "kernel dimensions and regularity");
  kernel->add_option("--input", o.input, "bubble map JSON")->required();
  kernel->add_option("--emit", o.emit, "output JSON path (default stdout)");
  add_config_flags(kernel, o);

  auto* correct = app.add_subcommand("correct", "remove the glued map's defect");
  correct->add_option("--input", o.input, "bubble map JSON")->required();
  correct->add_option("--necks", o.necks, "neck vectors JSON")->required();
  correct->add_option("--emit", o.emit, "output JSON path (default stdout)");
  add_config_flags(correct, o);

  std::string schedule;
  auto* sweep = app.add_subcommand("sweep", "neck-size sweep to CSV");
  sweep->add_option("--input", o.input, "bubble map JSON")->required();
  sweep->add_option("--schedule", schedule,
                    "comma list or a:b:Nlog of total neck sizes")->required();
  sweep->add_option("--emit", o.emit, "output CSV path (default stdout)");
  add_config_flags(sweep, o);

  std::string target_path, sequence_path;
  auto* converge = app.add_subcommand("converge", "certify a sequence limit");
  converge->add_option("--target", target_path, "limit bubble map JSON")->required();
  converge->add_option("--sequence", sequence_path, "sequence JSON")->required();
  converge->add_option("--emit", o.emit, "output JSON path (default stdout)");
  add_config_flags(converge, o);

  auto* selftest =
      app.add_subcommand("selftest", "run the cross-module scoreboard");
  add_config_flags(selftest, o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (glue->parsed()) {
      const BubbleMap b = bubble_map_from_json(read_json_file(o.input, "bubble_map"));
      const GluingMap g({b, load_necks(o.necks)});
      json necks = json::array();
      for (const NeckInfo& nk : g.necks())
        necks.push_back(json{
            {"h", nk.h},
            {"component", nk.surface_component},
            {"center", json::array({nk.center.real(), nk.center.imag()})},
            {"slope", json::array({nk.slope.real(), nk.slope.imag()})},
            {"v", json::array({nk.v.real(), nk.v.imag()})}});
      emit_artifact(o.emit, json{{"config", to_json(o.cfg)},
                                 {"glued_curve", curve_to_json(g.glued_curve())},
                                 {"necks", necks},
                                 {"total_v", g.parameter().total()},
                                 {"delta_bound", g.delta_bound()}});
    } else if (norms->parsed()) {
      const BubbleMap b = bubble_map_from_json(read_json_file(o.input, "bubble_map"));
      const GluingMap g({b, load_necks(o.necks)});
      const GluedGrid grid(g, o.cfg.grid);
      const PregluingReport rep = check_pregluing_estimates(grid, o.cfg.p);
      const std::string csv = norms_report_csv({rep}, o.cfg);
      if (o.emit.empty())
        std::cout << csv;
      else
        write_text_file(o.emit, csv);
    } else if (balance->parsed()) {
      const BubbleMap b = bubble_map_from_json(read_json_file(o.input, "bubble_map"));
      const BalanceResult br = balance_solve(b, 1e-10, 80, o.cfg.quadrature);
      json params = json::object();
      for (const auto& [i, a] : br.params)
        params[std::to_string(i)] =
            json{{"c", json::array({a.c.real(), a.c.imag()})},
                 {"r", a.r},
                 {"theta", a.theta}};
      emit_artifact(o.emit, json{{"config", to_json(o.cfg)},
                                 {"balanced", to_json(br.balanced)},
                                 {"params", params},
                                 {"iterations", br.iterations},
                                 {"max_residual", br.max_residual}});
    } else if (kernel->parsed()) {
      const BubbleMap b = bubble_map_from_json(read_json_file(o.input, "bubble_map"));
      const int n = b.target_dim();
      json comps = json::array();
      for (const auto& [i, u] : b.maps)
        comps.push_back(json{{"component", i},
                             {"degree", u.degree},
                             {"kernel_dim", kernel_basis(u, n).dimension()}});
      const RegularityReport reg = check_regularity(b);
      emit_artifact(o.emit,
                    json{{"config", to_json(o.cfg)},
                         {"components", comps},
                         {"matched_kernel_dim", matched_kernel(b).dimension()},
                         {"all_surjective", reg.all_surjective}});
    } else if (correct->parsed()) {
      const BubbleMap b = bubble_map_from_json(read_json_file(o.input, "bubble_map"));
      const GluingMap g({b, load_necks(o.necks)});
      const GluedGrid grid(g, o.cfg.grid);
      const CorrectionState cs =
          picard_correct(grid, o.cfg.p, o.cfg.tol, o.cfg.max_iter);
      json out = to_json(cs);
      out["config"] = to_json(o.cfg);
      out["total_v"] = g.parameter().total();
      emit_artifact(o.emit, out);
    } else if (sweep->parsed()) {
      const BubbleMap b = bubble_map_from_json(read_json_file(o.input, "bubble_map"));
      const SweepResult s =
          neck_sweep(b, parse_schedule(schedule), o.cfg.p, o.cfg.grid);
      const std::string csv = sweep_to_csv(s, o.cfg);
      if (o.emit.empty())
        std::cout << csv;
      else
        write_text_file(o.emit, csv);
    } else if (converge->parsed()) {
      const BubbleMap target =
          bubble_map_from_json(read_json_file(target_path, "bubble_map"));
      const json seq = read_json_file(sequence_path, "sequence");
      std::vector<SequenceEntry> entries;
      for (const json& e : seq.at("entries")) {
        const std::map<int, cplx> v = necks_from_json(json{{"v", e.at("v")}});
        if (e.contains("map") && !e.at("map").is_null())
          entries.push_back(sequence_entry(bubble_map_from_json(e.at("map")), v));
        else
          entries.push_back(corrected_entry(target, v, o.cfg.p, o.cfg.grid));
      }
      const ConvergenceCertificate cert =
          converge_check(target, entries, o.cfg.grid);
      json out = to_json(cert);
      out["config"] = to_json(o.cfg);
      emit_artifact(o.emit, out);
      if (!cert.converged) return 1;
    } else if (selftest->parsed()) {
      return run_selftest(o.cfg);
    }
  } catch (const SchemaError& ex) {
    std::cerr << "schema violation at " << ex.what() << "\n";
    return 3;
  } catch (const json::exception& ex) {
    std::cerr << "invalid JSON: " << ex.what() << "\n";
    return 3;
  } catch (const GeomError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    const std::string what = ex.what();
    return what.find("inadmissible") != std::string::npos ? 2 : 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
