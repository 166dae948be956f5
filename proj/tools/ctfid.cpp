#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "ctfid/bounds.hpp"
#include "ctfid/engine.hpp"
#include "ctfid/layers.hpp"
#include "ctfid/oracle.hpp"
#include "ctfid/witness.hpp"

using namespace ctfid;

namespace {

constexpr int kExitIdentified = 0;
constexpr int kExitError = 1;
constexpr int kExitFail = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string trim(std::string s) {
  auto blank = [](char c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; };
  while (!s.empty() && blank(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && blank(s[i])) ++i;
  return s.substr(i);
}

struct QueryArgs {
  std::string graph;
  std::string query;
  std::string query_file;
  std::string regimes_file;
  std::vector<std::string> regimes;

  void attach(CLI::App* app, bool with_regimes) {
    app->add_option("-g,--graph", graph, "causal diagram file")->required()->check(CLI::ExistingFile);
    app->add_option("-q,--query", query, "query text, e.g. \"P(Y[X=x]=y)\"");
    app->add_option("--query-file", query_file, "file holding the query text")->check(CLI::ExistingFile);
    if (with_regimes) {
      app->add_option("-r,--regimes", regimes_file, "file with one regime per line")->check(CLI::ExistingFile);
      app->add_option("--regime", regimes, "inline regime, e.g. \"ctf-rand(X -> Y)\"; repeatable");
    }
  }

  CausalDiagram diagram() const { return load_diagram(graph); }

  Query parsed(const CausalDiagram& g) const {
    std::string text = query;
    if (!query_file.empty()) text = read_file(query_file);
    text = trim(text);
    if (text.empty()) throw std::runtime_error("a query is required (--query or --query-file)");
    return parse_query(text, g);
  }

  // The observational regime is used when none is given.
  std::vector<RegimeSpec> regime_list(const CausalDiagram& g) const {
    std::vector<RegimeSpec> out;
    if (!regimes_file.empty()) out = load_regimes(regimes_file, g);
    for (const auto& r : regimes) out.push_back(parse_regime(r, g));
    if (out.empty()) out.push_back(RegimeSpec{});
    return out;
  }
};

int verify(const CausalDiagram& g, const Query& q, const std::vector<RegimeSpec>& regs, const IdResult& res,
           int count, std::uint64_t seed) {
  double worst = 0.0;
  int mismatches = 0;
  for (int i = 0; i < count; ++i) {
    DiscreteSCM m = random_scm(g, seed + static_cast<std::uint64_t>(i));
    std::vector<RegimeTable> tables;
    for (const auto& r : regs) tables.push_back(regime_distribution(m, r));
    double truth = l3_query(m, q);
    double est = evaluate_estimand(res.estimand, tables);
    double diff = std::abs(truth - est);
    worst = std::max(worst, diff);
    if (diff > 1e-6) {
      ++mismatches;
      std::cout << "verify: model seed " << seed + i << " truth " << truth << " estimand " << est << "\n";
    }
  }
  std::cout << "verify: " << count << " models, max |diff| = " << worst << ", mismatches = " << mismatches << "\n";
  return mismatches == 0 ? kExitIdentified : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual identification from observational, interventional and counterfactual data"};
  app.require_subcommand(1);
  std::uint64_t cap = 0;
  app.add_option("--cap", cap, "exogenous enumeration cap (overrides CTFID_CAP, at least 1024)")
      ->check(CLI::Range(std::uint64_t{1024}, std::uint64_t{1} << 62));

  // id
  auto* id = app.add_subcommand("id", "identify a query from a set of data-collection regimes");
  QueryArgs id_args;
  id_args.attach(id, true);
  int verify_count = 0;
  std::uint64_t seed = 1;
  bool show_log = false;
  id->add_option("--verify", verify_count, "compare against the oracle on this many random SCMs");
  id->add_option("--seed", seed, "first random SCM seed for --verify");
  id->add_flag("--log", show_log, "print the derivation log");

  // classify / realizable
  auto* classify = app.add_subcommand("classify", "report the lowest layer containing the query");
  QueryArgs classify_args;
  classify_args.attach(classify, false);
  auto* realizable = app.add_subcommand("realizable", "check whether the query's event can be sampled");
  QueryArgs real_args;
  real_args.attach(realizable, false);

  // oracle
  auto* oracle = app.add_subcommand("oracle", "exact regime tables, samples and query values from an SCM");
  std::string scm_path, oracle_graph, oracle_query, oracle_regime, oracle_out;
  std::uint64_t scm_seed = 1;
  std::size_t samples = 0;
  oracle->add_option("--scm", scm_path, "SCM JSON file")->check(CLI::ExistingFile);
  oracle->add_option("-g,--graph", oracle_graph, "diagram for a random SCM (with --seed)")->check(CLI::ExistingFile);
  oracle->add_option("--seed", scm_seed, "seed of the random SCM");
  oracle->add_option("--regime", oracle_regime, "regime whose distribution is tabulated");
  oracle->add_option("-q,--query", oracle_query, "evaluate this query exactly instead");
  oracle->add_option("--sample", samples, "draw this many rows from the regime instead");
  oracle->add_option("--save-scm", oracle_out, "write the SCM used to this path");

  // witness
  auto* witness = app.add_subcommand("witness", "build two SCMs that agree on the inputs but not on the query");
  QueryArgs wit_args;
  wit_args.attach(witness, true);
  std::string out_dir = ".";
  double eps = 1e-3;
  witness->add_option("-o,--out-dir", out_dir, "directory for the SCM JSON files");
  witness->add_option("--eps", eps, "smoothing noise level");

  // bounds
  auto* bounds = app.add_subcommand("bounds", "partial identification on the bow graph X -> Y, X <-> Y");
  std::string obs_csv, exp_csv, ctf_csv, csv_out, svg_out, bounds_scm, tables_out;
  int bx = 1, bxp = 0, by = 1, byp = 0;
  std::vector<double> benefits;
  auto* obs_opt = bounds->add_option("--obs", obs_csv, "CSV x,y,p")->check(CLI::ExistingFile);
  auto* scm_opt = bounds->add_option("--scm", bounds_scm, "derive all three tables (and the truth) from an SCM JSON")
                      ->check(CLI::ExistingFile);
  obs_opt->excludes(scm_opt);
  bounds->add_option("--tables-out", tables_out, "write the tables used as obs.csv, exp.csv, ctf.csv here");
  bounds->add_option("--exp", exp_csv, "CSV x,y_x,p")->check(CLI::ExistingFile);
  bounds->add_option("--ctf", ctf_csv, "CSV x_natural,x_assigned,y,p")->check(CLI::ExistingFile);
  bounds->add_option("--x", bx, "treatment arm x of P(y_x | x', y')");
  bounds->add_option("--xp", bxp, "natural value x'");
  bounds->add_option("--y", by, "outcome y");
  bounds->add_option("--yp", byp, "observed outcome y'");
  bounds->add_option("--benefits", benefits, "unit-selection benefits: always-1 helped hurt always-0")
      ->expected(4);
  bounds->add_option("--csv", csv_out, "write interval data as CSV");
  bounds->add_option("--svg", svg_out, "write an interval figure as SVG");

  CLI11_PARSE(app, argc, argv);
  if (cap > 0) setenv("CTFID_CAP", std::to_string(cap).c_str(), 1);

  try {
    if (*id) {
      CausalDiagram g = id_args.diagram();
      Query q = id_args.parsed(g);
      auto regs = id_args.regime_list(g);
      IdResult res = ctfidu_plus(g, q, regs);
      if (show_log)
        for (const auto& line : res.estimand.log) std::cout << "# " << line << "\n";
      if (!res.identified) {
        std::cout << render_certificate(res);
        std::cout << certificate_json(res).dump() << "\n";
        return kExitFail;
      }
      std::cout << render_text(res.estimand) << "\n";
      std::cout << to_json(res.estimand).dump() << "\n";
      if (verify_count > 0) return verify(g, q, regs, res, verify_count, seed);
      return kExitIdentified;
    }

    if (*classify) {
      CausalDiagram g = classify_args.diagram();
      std::cout << layer_name(classify_layer(g, classify_args.parsed(g))) << "\n";
      return 0;
    }

    if (*realizable) {
      CausalDiagram g = real_args.diagram();
      Query q = real_args.parsed(g);
      Conjunction all = q.joint;
      if (q.given)
        for (const auto& e : q.given->events) all.add(e);
      std::cout << (realizable_check(g, all) ? "realizable" : "not realizable") << "\n";
      return 0;
    }

    if (*oracle) {
      DiscreteSCM m;
      if (!scm_path.empty()) m = load_scm(scm_path);
      else if (!oracle_graph.empty()) m = random_scm(load_diagram(oracle_graph), scm_seed);
      else throw std::runtime_error("oracle needs --scm or --graph");
      if (!oracle_out.empty()) save_scm(m, oracle_out);
      CausalDiagram g = induced_diagram(m);
      if (!oracle_query.empty()) {
        std::cout << l3_query(m, parse_query(oracle_query, g)) << "\n";
        return 0;
      }
      RegimeSpec a = oracle_regime.empty() ? RegimeSpec{} : parse_regime(oracle_regime, g);
      if (samples > 0) {
        std::cout << dataset_csv(sample_regime(m, a, samples, scm_seed));
        return 0;
      }
      RegimeTemplate t = regime_regex(g, a);
      IndexPool pool = t.pool();
      RegimeTable tab = regime_distribution(m, a);
      std::cout << "# regime: " << render_regime(a, g) << "\n";
      std::cout << "# events: " << render(t.events, g, &pool) << "\n";
      for (const auto& s : t.syms) std::cout << s.name << ",";
      std::cout << "p\n";
      std::vector<int> assign(tab.cards.size(), 0);
      std::cout.precision(12);
      for (std::size_t off = 0; off < tab.p.size(); ++off) {
        std::size_t k = off;
        for (std::size_t j = tab.cards.size(); j-- > 0;) {
          assign[j] = static_cast<int>(k % tab.cards[j]);
          k /= tab.cards[j];
        }
        for (int v : assign) std::cout << v << ",";
        std::cout << tab.p[off] << "\n";
      }
      return 0;
    }

    if (*witness) {
      CausalDiagram g = wit_args.diagram();
      Query q = wit_args.parsed(g);
      IdResult res = ctfidu_plus(g, q, wit_args.regime_list(g));
      if (res.identified) throw std::runtime_error("query is identifiable; there is no hedge to witness");
      if (!res.fail.hedge) throw std::runtime_error("failure has no hedge: " + res.fail.reason);
      WitnessReport w = hedge_witness(g, *res.fail.hedge, eps);
      std::filesystem::create_directories(out_dir);
      save_scm(w.m1, out_dir + "/witness_m1.json");
      save_scm(w.m2, out_dir + "/witness_m2.json");
      save_scm(w.s1, out_dir + "/witness_m1_smoothed.json");
      save_scm(w.s2, out_dir + "/witness_m2_smoothed.json");
      std::cout << render_certificate(res);
      std::cout << "input agreement: max |P1 - P2| = " << w.input_gap << "\n";
      std::cout << "target gap: " << w.target_gap << "\n";
      std::cout << "smoothed (eps=" << w.eps << ") input agreement: " << w.smoothed_input_gap << "\n";
      std::cout << "smoothed target gap: " << w.smoothed_target_gap << "\n";
      bool ok = w.input_gap <= 1e-12 && w.target_gap >= 0.05;
      std::cout << (ok ? "witness verified" : "witness check failed") << "\n";
      return ok ? 0 : kExitError;
    }

    if (*bounds) {
      BowData d;
      std::optional<double> truth;
      if (!bounds_scm.empty()) {
        DiscreteSCM m = load_scm(bounds_scm);
        d = bow_data_from_scm(m);
        truth = nte_truth(m, bx, bxp, by, byp);
      } else if (!obs_csv.empty()) {
        d = load_bow_csv(obs_csv, exp_csv, ctf_csv);
      } else {
        throw std::runtime_error("bounds needs --obs or --scm");
      }
      if (!tables_out.empty()) {
        std::filesystem::create_directories(tables_out);
        BowCsv t = bow_csv(d);
        write_file(tables_out + "/obs.csv", t.obs);
        if (!t.exp.empty()) write_file(tables_out + "/exp.csv", t.exp);
        if (!t.ctf.empty()) write_file(tables_out + "/ctf.csv", t.ctf);
      }
      nlohmann::json rep;
      std::vector<IntervalRow> rows;
      std::string query = "P(Y_" + std::to_string(bx) + "=" + std::to_string(by) + " | X=" + std::to_string(bxp) +
                          ", Y=" + std::to_string(byp) + ")";
      rep["query"] = query;
      if (truth) rep["truth"] = *truth;
      auto add = [&](const std::string& tier, const Interval& analytic, const PolytopeResult& lp) {
        rep["nte"].push_back({{"tier", tier},
                              {"interval", interval_json(lp.interval)},
                              {"analytic", interval_json(analytic)},
                              {"method", lp.method},
                              {"constraints-used", lp.constraints}});
        rows.push_back({query, tier, lp.interval, truth});
      };
      add("L1", nte_bounds_l1(), nte_polytope_bounds(d, ConstraintSet::observational(), bx, bxp, by, byp));
      if (d.exp)
        add("L2", nte_bounds_l2(d, bx, bxp, by, byp),
            nte_polytope_bounds(d, ConstraintSet::interventional(), bx, bxp, by, byp));
      if (d.ctf)
        add("L2.5", nte_bounds_l25(d, bx, bxp, by, byp),
            nte_polytope_bounds(d, ConstraintSet::counterfactual(), bx, bxp, by, byp));
      if (!benefits.empty()) {
        Benefits b{benefits[0], benefits[1], benefits[2], benefits[3]};
        UnitSelectionReport u = unit_selection(d, b);
        nlohmann::json us;
        us["population"] = {{"interval", interval_json(u.population)},
                            {"constraints-used", ConstraintSet::interventional().labels()},
                            {"decision", decision_name(u.population_decision)}};
        rows.push_back({"benefit, all units", "L2", u.population, std::nullopt});
        for (std::size_t x = 0; x < u.subgroup.size(); ++x) {
          us["subgroups"].push_back({{"natural_x", x},
                                     {"interval", interval_json(u.subgroup[x])},
                                     {"constraints-used", ConstraintSet::counterfactual().labels()},
                                     {"decision", decision_name(u.subgroup_decision[x])}});
          rows.push_back({"benefit, natural X=" + std::to_string(x), "L2.5", u.subgroup[x], std::nullopt});
        }
        us["subgroup_policy_dominates"] = u.dominates;
        us["margin_vs_treat_all"] = u.margin_vs_treat_all;
        us["margin_vs_treat_none"] = u.margin_vs_treat_none;
        us["method"] = "exact linear programming over the canonical model";
        us["note"] = "endpoints are exact polytope extremes, not posterior credible intervals";
        rep["unit_selection"] = us;
      }
      if (!csv_out.empty()) write_file(csv_out, intervals_csv(rows));
      if (!svg_out.empty()) write_file(svg_out, intervals_svg(rows, "bounds"));
      std::cout << rep.dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
