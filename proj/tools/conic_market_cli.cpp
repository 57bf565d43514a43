#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "conic/arbitrage.hpp"
#include "conic/dual.hpp"
#include "conic/io.hpp"
#include "conic/market.hpp"
#include "conic/utility.hpp"

namespace {

using conic::Mat;
using conic::Vec;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("CONIC_MARKET_LOG");
  if (!env) return LogLevel::Info;
  std::string v = env;
  if (v == "quiet") return LogLevel::Quiet;
  if (v == "debug") return LogLevel::Debug;
  if (v == "info") return LogLevel::Info;
  std::cerr << "warning: CONIC_MARKET_LOG must be quiet|info|debug\n";
  return LogLevel::Info;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cerr << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::cerr << msg << "\n";
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw CLI::ValidationError("empty numeric list: " + s);
  return out;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file: " + path);
  out << text;
}

json plan_to_json(const conic::EventTree& tree, const conic::TransferPlan& plan) {
  json arr = json::array();
  for (int n = 0; n < tree.num_nodes(); ++n) {
    json jn;
    jn["id"] = tree.id_at(n);
    jn["t"] = tree.time(n);
    jn["xi"] = plan.xi.at(n);
    arr.push_back(jn);
  }
  return arr;
}

json base_payload(const json& config) {
  json doc;
  doc["version"] = kVersion;
  doc["config"] = config;
  return doc;
}

// ---------------------------------------------------------------------------
// shared option bundles

struct UtilityOpts {
  std::string kind = "log";
  double p = 0.5;
  double weight = 1.0;
  double discount = 1.0;
  std::string variant = "sum";

  void attach(CLI::App* cmd) {
    cmd->add_option("--utility", kind, "log|power")->check(CLI::IsMember({"log", "power"}));
    cmd->add_option("--p", p, "power exponent in (0,1)");
    cmd->add_option("--weight", weight, "stage weight");
    cmd->add_option("--discount", discount, "geometric stage discount");
    cmd->add_option("--variant", variant, "sum|first")->check(CLI::IsMember({"sum", "first"}));
  }

  conic::UtilityFamily family(const conic::MarketSpec& market) const {
    conic::Utility1D u;
    u.kind = kind == "log" ? conic::Utility1D::Kind::Log : conic::Utility1D::Kind::Power;
    u.p = p;
    conic::UtilityFamily fam;
    for (int t = 0; t <= market.tree().horizon(); ++t) {
      conic::Utility1D ut = u;
      ut.weight = weight * std::pow(discount, t);
      conic::UtilityStage st;
      if (variant == "first") {
        st.variant = conic::UtilityStage::Variant::FirstCoordinate;
        st.coord = {ut};
      } else {
        st.variant = conic::UtilityStage::Variant::CoordinateSum;
        st.coord.assign(market.d(), ut);
      }
      fam.stages.push_back(st);
    }
    return fam;
  }

  json echo() const {
    json j;
    j["utility"] = kind;
    j["p"] = p;
    j["weight"] = weight;
    j["discount"] = discount;
    j["variant"] = variant;
    return j;
  }
};

// ---------------------------------------------------------------------------
// generators

double next_unit(std::mt19937& g) {
  // avoid std::uniform_real_distribution: its output is not pinned down by
  // the standard and the files must be byte-identical across platforms
  return static_cast<double>(g()) / 4294967296.0;
}

Mat cost_matrix(int dim, double cost, const Vec& price) {
  // exchange rates routed through coordinate 0 at the quoted prices
  Mat pi(dim, dim, 1.0);
  Vec to_cash(dim, 1.0), from_cash(dim, 1.0);
  for (int i = 1; i < dim; ++i) {
    from_cash[i] = cost * price[i];
    to_cash[i] = cost / price[i];
  }
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      if (i == j) continue;
      double r = (i == 0 ? 1.0 : to_cash[i]) * (j == 0 ? 1.0 : from_cash[j]);
      pi(i, j) = r;
    }
  return pi;
}

json cone_json(const Mat& pi) {
  json jc;
  json rows = json::array();
  for (std::size_t i = 0; i < pi.rows(); ++i) rows.push_back(pi.row(i));
  jc["bidask"] = rows;
  return jc;
}

json return_json(const std::string& kind, int d, int N) {
  json jr;
  if (kind == "zero") {
    jr["kind"] = "zero";
  } else if (kind == "linear") {
    jr["kind"] = "linear";
    json m = json::array();
    for (int i = 0; i < d + N; ++i) {
      Vec row(N, 0.0);
      if (i == 0)
        for (int j = 0; j < N; ++j) row[j] = 1.05;
      m.push_back(row);
    }
    jr["M"] = m;
  } else {
    jr["kind"] = "cobb_douglas";
    Vec gamma(N, 0.5 / N);
    jr["gamma"] = gamma;
    jr["p"] = 1.0;
    Vec eta(N, 1.0);
    jr["eta"] = eta;
    jr["payout_coord"] = 1;
  }
  return jr;
}

struct GenOpts {
  std::string kind = "binomial";
  int T = 2;
  int d = 2;
  int N = 1;
  double cost = 1.05;
  std::string ret = "zero";
  unsigned seed = 0;
};

json generate_instance(const GenOpts& o) {
  if (o.T < 1 || o.d < 1 || o.N < 0 || o.cost < 1.0)
    throw CLI::ValidationError("BadParams: need T >= 1, d >= 1, N >= 0, cost >= 1");
  if (o.ret != "zero" && o.N < 1)
    throw CLI::ValidationError("BadParams: nonzero returns need N >= 1");
  const int dim = o.d + o.N;
  json doc;
  doc["schema"] = 1;
  doc["T"] = o.T;
  doc["d"] = o.d;
  doc["N"] = o.N;
  json nodes = json::array();
  json cones = json::array();

  auto push_node = [&](int id, int t, int parent, double q, const Vec& price) {
    json jn;
    jn["id"] = id;
    jn["t"] = t;
    jn["parent"] = parent;
    jn["q"] = q;
    nodes.push_back(jn);
    cones.push_back(cone_json(cost_matrix(dim, o.cost, price)));
  };

  if (o.kind == "chain") {
    Vec price(dim, 1.0);
    for (int t = 0; t <= o.T; ++t) push_node(t, t, t - 1, 1.0, price);
  } else if (o.kind == "binomial") {
    const double up = 1.25, dn = 0.8;
    struct Item {
      int id, t, parent;
      double q;
      Vec price;
    };
    std::vector<Item> level = {{0, 0, -1, 1.0, Vec(dim, 1.0)}};
    int next_id = 1;
    for (const Item& it : level) push_node(it.id, it.t, it.parent, it.q, it.price);
    for (int t = 1; t <= o.T; ++t) {
      std::vector<Item> next;
      for (const Item& it : level)
        for (int b = 0; b < 2; ++b) {
          Vec price = it.price;
          for (int i = 1; i < dim; ++i) price[i] *= (b == 0 ? up : dn);
          Item ch{next_id++, t, it.id, 0.5, price};
          push_node(ch.id, ch.t, ch.parent, ch.q, ch.price);
          next.push_back(ch);
        }
      level = std::move(next);
    }
  } else if (o.kind == "random_tree") {
    std::mt19937 g(o.seed);
    struct Item {
      int id, t, parent;
      double q;
      Vec price;
    };
    std::vector<Item> level = {{0, 0, -1, 1.0, Vec(dim, 1.0)}};
    int next_id = 1;
    for (const Item& it : level) push_node(it.id, it.t, it.parent, it.q, it.price);
    for (int t = 1; t <= o.T; ++t) {
      std::vector<Item> next;
      for (const Item& it : level) {
        int kids = 1 + static_cast<int>(g() % 3u);
        Vec qs(kids);
        double total = 0.0;
        for (int b = 0; b < kids; ++b) {
          qs[b] = 0.2 + next_unit(g);
          total += qs[b];
        }
        for (int b = 0; b < kids; ++b) {
          Vec price = it.price;
          for (int i = 1; i < dim; ++i) price[i] *= 0.7 + 0.7 * next_unit(g);
          Item ch{next_id++, t, it.id, qs[b] / total, price};
          push_node(ch.id, ch.t, ch.parent, ch.q, ch.price);
          next.push_back(ch);
        }
      }
      level = std::move(next);
    }
  } else {
    throw CLI::ValidationError("BadParams: kind must be binomial|chain|random_tree");
  }

  doc["nodes"] = nodes;
  doc["cones"] = cones;
  doc["return"] = return_json(o.ret, o.d, o.N);
  return doc;
}

// ---------------------------------------------------------------------------

struct CommonOpts {
  std::string instance;
  std::string output;
};

int run(int argc, char** argv) {
  CLI::App app{"scenario-tree markets with transaction costs and nonlinear returns"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOpts validate_o, na_o, nar_o, sh_o, umax_o, gap_o;
  std::string nar_eps = "0.5,0.1,0.01";
  std::string sh_claim, sh_x, sh_dir;
  UtilityOpts umax_u, gap_u;
  std::string umax_x;
  double umax_x1 = 1.0;
  std::string gap_y, gap_x = "0.25,0.5,1,2,4,8";
  GenOpts gen_o;
  std::string gen_out;

  auto add_common = [](CLI::App* cmd, CommonOpts& o, bool need_instance = true) {
    auto* opt = cmd->add_option("--instance", o.instance, "instance JSON file");
    if (need_instance) opt->required();
    cmd->add_option("--output,-o", o.output, "output file (default stdout)");
  };

  CLI::App* c_validate = app.add_subcommand("validate", "parse and validate an instance");
  add_common(c_validate, validate_o);

  CLI::App* c_na = app.add_subcommand("check-na", "no-arbitrage verdict");
  add_common(c_na, na_o);

  CLI::App* c_nar = app.add_subcommand("check-nar", "robust no-arbitrage over an epsilon list");
  add_common(c_nar, nar_o);
  c_nar->add_option("--epsilons", nar_eps, "comma list, e.g. 0.5,0.1,0.01");

  CLI::App* c_sh = app.add_subcommand("superhedge", "minimal superhedging price of a leaf claim");
  add_common(c_sh, sh_o);
  c_sh->add_option("--claim", sh_claim, "JSON array of per-leaf claim vectors")->required();
  c_sh->add_option("--x", sh_x, "base endowment, comma list (default zeros)");
  c_sh->add_option("--direction", sh_dir, "shift direction, comma list (default e_1)");

  CLI::App* c_umax = app.add_subcommand("umax", "maximize expected utility of consumption");
  add_common(c_umax, umax_o);
  umax_u.attach(c_umax);
  c_umax->add_option("--x", umax_x, "endowment, comma list");
  c_umax->add_option("--x1", umax_x1, "first-coordinate endowment (used when --x absent)");

  CLI::App* c_gap = app.add_subcommand("dual-gap", "primal/dual sweep, CSV output");
  add_common(c_gap, gap_o);
  gap_u.attach(c_gap);
  c_gap->add_option("--y", gap_y, "dual grid, comma list")->required();
  c_gap->add_option("--x-grid", gap_x, "primal grid, comma list");

  CLI::App* c_gen = app.add_subcommand("gen", "write a deterministic instance");
  c_gen->add_option("--kind", gen_o.kind, "binomial|chain|random_tree")
      ->check(CLI::IsMember({"binomial", "chain", "random_tree"}));
  c_gen->add_option("--T", gen_o.T, "horizon");
  c_gen->add_option("--d", gen_o.d, "financial assets");
  c_gen->add_option("--N", gen_o.N, "industrial assets");
  c_gen->add_option("--cost", gen_o.cost, "proportional cost level (>= 1)");
  c_gen->add_option("--return", gen_o.ret, "zero|linear|cobb_douglas")
      ->check(CLI::IsMember({"zero", "linear", "cobb_douglas"}));
  c_gen->add_option("--seed", gen_o.seed, "sampler seed");
  c_gen->add_option("--output,-o", gen_out, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  if (c_gen->parsed()) {
    json doc = generate_instance(gen_o);
    conic::parse_market(doc);  // generated instances must validate
    write_output(gen_out, conic::dump_instance(doc));
    log_info("gen: instance written");
    return 0;
  }

  if (c_validate->parsed()) {
    conic::MarketSpec market = conic::load_market(validate_o.instance);
    json payload = base_payload({{"instance", validate_o.instance}});
    payload["verdict"] = "Valid";
    payload["T"] = market.tree().horizon();
    payload["d"] = market.d();
    payload["N"] = market.N();
    payload["nodes"] = market.tree().num_nodes();
    write_output(validate_o.output, conic::dump_instance(payload));
    return 0;
  }

  if (c_na->parsed()) {
    conic::MarketSpec market = conic::load_market(na_o.instance);
    conic::NAReport rep = conic::check_na(market);
    json payload = base_payload({{"instance", na_o.instance}});
    payload["verdict"] = rep.no_arbitrage ? "NoArbitrage" : "Arbitrage";
    payload["value"] = rep.objective;
    if (rep.has_witness) {
      payload["witness"] = json{{"plan", plan_to_json(market.tree(), rep.witness)}};
      json term = json::array();
      for (const Vec& v : rep.witness_terminal) term.push_back(v);
      payload["witness"]["terminal"] = term;
    }
    write_output(na_o.output, conic::dump_instance(payload));
    return 0;
  }

  if (c_nar->parsed()) {
    conic::MarketSpec market = conic::load_market(nar_o.instance);
    conic::NARReport rep = conic::check_nar(market, parse_list(nar_eps));
    json payload = base_payload({{"instance", nar_o.instance}, {"epsilons", nar_eps}});
    payload["verdict"] = rep.robust_na ? "RobustNA" : "NotRobustNA";
    json rows = json::array();
    for (const auto& r : rep.results)
      rows.push_back({{"epsilon", r.epsilon},
                      {"no_arbitrage", r.no_arbitrage},
                      {"objective", r.objective}});
    payload["epsilon_results"] = rows;
    payload["note"] = rep.note;
    write_output(nar_o.output, conic::dump_instance(payload));
    return 0;
  }

  if (c_sh->parsed()) {
    conic::MarketSpec market = conic::load_market(sh_o.instance);
    json jclaim = json::parse(sh_claim);
    std::vector<Vec> claim;
    for (const auto& row : jclaim) claim.push_back(row.get<Vec>());
    Vec x(market.dim(), 0.0);
    if (!sh_x.empty()) x = parse_list(sh_x);
    Vec dir;
    if (!sh_dir.empty()) dir = parse_list(sh_dir);

    conic::SuperhedgeResult res = conic::superhedge_price(
        claim, x, market, dir.empty() ? nullptr : &dir);
    std::vector<conic::PriceSystem> candidates =
        conic::enumerate_consistent_candidates(market, &claim);
    double dual_bound = -conic::kInf;
    int binding = -1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      double b;
      try {
        b = conic::superhedge_dual_bound(claim, x, market, {candidates[i]});
      } catch (const conic::ValidationError&) {
        continue;  // candidate too close to the consistency boundary
      }
      if (b > dual_bound) {
        dual_bound = b;
        binding = static_cast<int>(i);
      }
    }
    json payload = base_payload({{"instance", sh_o.instance}});
    payload["primal_price"] = res.price;
    payload["dual_bound"] = dual_bound;
    payload["gap"] = res.price - dual_bound;
    payload["certificate_plan"] = plan_to_json(market.tree(), res.plan);
    payload["binding_candidate"] = binding;
    write_output(sh_o.output, conic::dump_instance(payload));
    return 0;
  }

  if (c_umax->parsed()) {
    conic::MarketSpec market = conic::load_market(umax_o.instance);
    conic::UtilityFamily fam = umax_u.family(market);
    conic::PrimalResult res;
    json config = umax_u.echo();
    config["instance"] = umax_o.instance;
    if (!umax_x.empty()) {
      Vec x = parse_list(umax_x);
      config["x"] = x;
      res = conic::solve_primal(market, fam, x);
    } else {
      config["x1"] = umax_x1;
      res = conic::solve_u1(market, fam, umax_x1);
    }
    json payload = base_payload(config);
    if (!res.finite)
      payload["value"] = res.value > 0 ? "+inf" : "-inf";
    else
      payload["value"] = res.value;
    payload["status"] = res.feasible ? (res.finite ? "Optimal" : "Unbounded")
                                     : "Infeasible";
    if (res.feasible) {
      json cons = json::array();
      for (int n = 0; n < market.tree().num_nodes(); ++n)
        cons.push_back({{"id", market.tree().id_at(n)},
                        {"c", res.consumption.c.at(n)}});
      payload["consumption"] = cons;
      payload["plan"] = plan_to_json(market.tree(), res.plan);
    }
    write_output(umax_o.output, conic::dump_instance(payload));
    return 0;
  }

  if (c_gap->parsed()) {
    conic::MarketSpec market = conic::load_market(gap_o.instance);
    conic::UtilityFamily fam = gap_u.family(market);
    conic::GapReport rep =
        conic::duality_gap(market, fam, parse_list(gap_y), parse_list(gap_x));
    std::string csv = "y,w_y,dual_y,gap\n";
    char buf[160];
    for (const auto& r : rep.rows) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g\n", r.y, r.w_y,
                    r.dual_y, r.gap);
      csv += buf;
    }
    write_output(gap_o.output, csv);
    if (!rep.weak_duality_ok) {
      log_info("dual-gap: weak duality violated beyond tolerance");
      return 3;
    }
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const conic::SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const conic::Error& e) {
    std::cerr << "invalid instance: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "invalid instance: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
