#include "conic/io.hpp"

#include <fstream>
#include <set>
#include <string>

namespace conic {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::set<std::string>& required, const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + ": object expected");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ValidationError(where + ": unknown field '" + it.key() + "'");
  for (const std::string& k : required)
    if (!obj.contains(k))
      throw ValidationError(where + ": missing field '" + k + "'");
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ValidationError(where + ": number expected");
  return v.get<double>();
}

int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ValidationError(where + ": integer expected");
  return v.get<int>();
}

Vec as_vec(const json& v, int dim, const std::string& where) {
  if (!v.is_array() || static_cast<int>(v.size()) != dim)
    throw ValidationError(where + ": array of length " + std::to_string(dim) +
                          " expected");
  Vec out(dim);
  for (int i = 0; i < dim; ++i) out[i] = as_number(v[i], where);
  return out;
}

Mat as_mat(const json& v, int rows, int cols, const std::string& where) {
  if (!v.is_array() || static_cast<int>(v.size()) != rows)
    throw ValidationError(where + ": " + std::to_string(rows) + " rows expected");
  Mat out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    Vec r = as_vec(v[i], cols, where);
    for (int j = 0; j < cols; ++j) out(i, j) = r[j];
  }
  return out;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(m.row(i));
  return rows;
}

struct ConeEntry {
  bool is_bidask = false;
  Mat bidask;
  std::vector<Vec> gens;
};

ConeEntry parse_cone(const json& spec, int dim, const std::string& where) {
  require_keys(spec, {"bidask", "generators"}, {}, where);
  if (spec.contains("bidask") == spec.contains("generators"))
    throw ValidationError(where + ": exactly one of bidask/generators expected");
  ConeEntry e;
  if (spec.contains("bidask")) {
    e.is_bidask = true;
    e.bidask = as_mat(spec["bidask"], dim, dim, where + ".bidask");
  } else {
    const json& g = spec["generators"];
    if (!g.is_array() || g.empty())
      throw ValidationError(where + ".generators: nonempty array expected");
    for (std::size_t i = 0; i < g.size(); ++i)
      e.gens.push_back(as_vec(g[i], dim, where + ".generators"));
  }
  return e;
}

ReturnSpec parse_return(const json& r, const EventTree& tree,
                        const std::vector<int>& input_to_idx) {
  ReturnSpec ret;
  if (!r.is_object() || !r.contains("kind"))
    throw ValidationError("return: object with 'kind' expected");
  const std::string kind = r["kind"].get<std::string>();
  const int d = tree.asset_d(), N = tree.asset_N();
  const int num = tree.num_nodes();
  if (kind == "zero") {
    require_keys(r, {"kind"}, {"kind"}, "return");
    ret.kind = ReturnSpec::Kind::Zero;
  } else if (kind == "linear") {
    require_keys(r, {"kind", "M", "M_by_node"}, {"kind"}, "return");
    if (r.contains("M") == r.contains("M_by_node"))
      throw ValidationError("return: exactly one of M/M_by_node expected");
    ret.kind = ReturnSpec::Kind::Linear;
    ret.lin.M.assign(num, Mat());
    if (r.contains("M")) {
      Mat m = as_mat(r["M"], d + N, N, "return.M");
      for (int n = 0; n < num; ++n) ret.lin.M[n] = m;
    } else {
      const json& arr = r["M_by_node"];
      if (!arr.is_array() || static_cast<int>(arr.size()) != num)
        throw ValidationError("return.M_by_node: one matrix per node expected");
      for (int i = 0; i < num; ++i)
        ret.lin.M[input_to_idx[i]] = as_mat(arr[i], d + N, N, "return.M_by_node");
    }
  } else if (kind == "cobb_douglas") {
    require_keys(r, {"kind", "gamma", "p", "eta", "payout_coord"},
                 {"kind", "gamma", "p", "eta", "payout_coord"}, "return");
    ret.kind = ReturnSpec::Kind::CobbDouglas;
    ret.cd.gamma = as_vec(r["gamma"], N, "return.gamma");
    ret.cd.payout_coord = as_int(r["payout_coord"], "return.payout_coord") - 1;
    ret.cd.p.assign(num, 0.0);
    if (r["p"].is_number()) {
      double v = r["p"].get<double>();
      for (int n = 0; n < num; ++n) ret.cd.p[n] = v;
    } else {
      Vec v = as_vec(r["p"], num, "return.p");
      for (int i = 0; i < num; ++i) ret.cd.p[input_to_idx[i]] = v[i];
    }
    ret.cd.eta.assign(num, Vec(N, 0.0));
    const json& eta = r["eta"];
    if (!eta.is_array() || eta.empty())
      throw ValidationError("return.eta: array expected");
    if (eta[0].is_number()) {
      Vec shared = as_vec(eta, N, "return.eta");
      for (int n = 0; n < num; ++n) ret.cd.eta[n] = shared;
    } else {
      if (static_cast<int>(eta.size()) != num)
        throw ValidationError("return.eta: one vector per node expected");
      for (int i = 0; i < num; ++i)
        ret.cd.eta[input_to_idx[i]] = as_vec(eta[i], N, "return.eta");
    }
  } else {
    throw ValidationError("return.kind: zero|linear|cobb_douglas expected");
  }
  return ret;
}

}  // namespace

MarketSpec parse_market(const json& doc) {
  require_keys(doc,
               {"schema", "T", "d", "N", "nodes", "cones", "cones_by_time",
                "return"},
               {"schema", "T", "d", "N", "nodes", "return"}, "instance");
  if (!doc["schema"].is_number_integer() || doc["schema"].get<int>() != 1)
    throw ValidationError("instance: \"schema\": 1 required");
  const int T = as_int(doc["T"], "T");
  const int d = as_int(doc["d"], "d");
  const int N = as_int(doc["N"], "N");

  const json& jnodes = doc["nodes"];
  if (!jnodes.is_array() || jnodes.empty())
    throw ValidationError("nodes: nonempty array expected");
  std::vector<NodeDesc> descs;
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const json& jn = jnodes[i];
    require_keys(jn, {"id", "t", "parent", "q"}, {"id", "t", "parent", "q"},
                 "nodes[" + std::to_string(i) + "]");
    NodeDesc nd;
    nd.id = as_int(jn["id"], "nodes.id");
    nd.t = as_int(jn["t"], "nodes.t");
    nd.q = as_number(jn["q"], "nodes.q");
    if (jn["parent"].is_null()) {
      nd.parent = std::nullopt;
    } else {
      int p = as_int(jn["parent"], "nodes.parent");
      if (p >= 0) nd.parent = p;  // -1 marks the root as well
    }
    descs.push_back(nd);
  }
  EventTree tree = EventTree::build(T, d, N, descs);

  // input position -> breadth-first index
  std::vector<int> input_to_idx(jnodes.size());
  for (std::size_t i = 0; i < descs.size(); ++i)
    input_to_idx[i] = tree.index_of(descs[i].id);

  if (doc.contains("cones") == doc.contains("cones_by_time"))
    throw ValidationError("instance: exactly one of cones/cones_by_time expected");
  std::vector<ConeEntry> entries(tree.num_nodes());
  if (doc.contains("cones")) {
    const json& jc = doc["cones"];
    if (!jc.is_array() || static_cast<int>(jc.size()) != tree.num_nodes())
      throw ValidationError("cones: one entry per node expected");
    for (std::size_t i = 0; i < jc.size(); ++i)
      entries[input_to_idx[i]] =
          parse_cone(jc[i], d + N, "cones[" + std::to_string(i) + "]");
  } else {
    const json& jc = doc["cones_by_time"];
    if (!jc.is_array() || static_cast<int>(jc.size()) != T + 1)
      throw ValidationError("cones_by_time: one entry per time expected");
    std::vector<ConeEntry> by_time;
    for (int t = 0; t <= T; ++t)
      by_time.push_back(
          parse_cone(jc[t], d + N, "cones_by_time[" + std::to_string(t) + "]"));
    for (int n = 0; n < tree.num_nodes(); ++n) entries[n] = by_time[tree.time(n)];
  }

  bool all_bidask = true;
  for (const ConeEntry& e : entries) all_bidask = all_bidask && e.is_bidask;
  std::vector<PolyCone> cones;
  std::optional<std::vector<Mat>> bidask;
  if (all_bidask) bidask.emplace();
  for (const ConeEntry& e : entries) {
    if (e.is_bidask) {
      cones.push_back(PolyCone::from_bid_ask(e.bidask));
      if (all_bidask) bidask->push_back(e.bidask);
    } else {
      cones.push_back(PolyCone::from_generators(d + N, e.gens));
    }
  }

  ReturnSpec ret = parse_return(doc["return"], tree, input_to_idx);
  return MarketSpec::build(std::move(tree), std::move(cones), std::move(ret),
                           std::move(bidask));
}

MarketSpec load_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open instance file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ValidationError("instance parse error: " + std::string(e.what()));
  }
  return parse_market(doc);
}

json market_to_json(const MarketSpec& market) {
  const EventTree& tree = market.tree();
  if (market.ret().kind == ReturnSpec::Kind::Oracle)
    throw ValidationError("oracle returns are not serializable");
  if (market.ret().perturbation)
    throw ValidationError("perturbed markets are not serializable");

  json doc;
  doc["schema"] = 1;
  doc["T"] = tree.horizon();
  doc["d"] = tree.asset_d();
  doc["N"] = tree.asset_N();
  json jnodes = json::array();
  for (int n = 0; n < tree.num_nodes(); ++n) {
    json jn;
    jn["id"] = tree.id_at(n);
    jn["t"] = tree.time(n);
    jn["parent"] = tree.parent(n) < 0 ? -1 : tree.id_at(tree.parent(n));
    jn["q"] = tree.cond_prob(n);
    jnodes.push_back(jn);
  }
  doc["nodes"] = jnodes;

  json jcones = json::array();
  for (int n = 0; n < tree.num_nodes(); ++n) {
    json jc;
    if (market.bidask())
      jc["bidask"] = mat_to_json((*market.bidask())[n]);
    else
      jc["generators"] = market.cone(n).gens;
    jcones.push_back(jc);
  }
  doc["cones"] = jcones;

  const ReturnSpec& ret = market.ret();
  json jr;
  switch (ret.kind) {
    case ReturnSpec::Kind::Zero:
      jr["kind"] = "zero";
      break;
    case ReturnSpec::Kind::Linear: {
      jr["kind"] = "linear";
      json arr = json::array();
      for (int n = 0; n < tree.num_nodes(); ++n)
        arr.push_back(mat_to_json(ret.lin.M[n]));
      jr["M_by_node"] = arr;
      break;
    }
    case ReturnSpec::Kind::CobbDouglas: {
      jr["kind"] = "cobb_douglas";
      jr["gamma"] = ret.cd.gamma;
      jr["p"] = ret.cd.p;
      json eta = json::array();
      for (int n = 0; n < tree.num_nodes(); ++n) eta.push_back(ret.cd.eta[n]);
      jr["eta"] = eta;
      jr["payout_coord"] = ret.cd.payout_coord + 1;
      break;
    }
    default:
      break;
  }
  doc["return"] = jr;
  return doc;
}

std::string dump_instance(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace conic
