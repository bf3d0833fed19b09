#pragma once

#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "prostar/cli/report_io.hpp"
#include "prostar/tower.hpp"

namespace prostar::cli {

// Scenario problem with a location: a JSON pointer, or line:column for syntax errors.
class ParseError : public Error {
 public:
  ParseError(std::string where, const std::string& what) : Error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct TaskSpec {
  std::string name;
  std::string type;
  std::string where;
  Json params;
};

// Resolved scenario. Objects keep declaration order.
struct Scenario {
  std::optional<double> tolerance;
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<std::string, FiniteCStarAlgebra>> algebras;
  std::vector<std::pair<std::string, FiniteGroup>> groups;
  std::vector<std::pair<std::string, SystemPtr>> actions;
  std::vector<std::pair<std::string, HilbertModule>> modules;
  std::vector<std::pair<std::string, UnitaryRepresentation>> representations;
  std::vector<std::pair<std::string, CompletelyPositiveMap>> cp_maps;
  std::vector<std::pair<std::string, std::shared_ptr<AlgebraTower>>> towers;
  std::vector<TaskSpec> tasks;

  template <class T>
  static const T* lookup(const std::vector<std::pair<std::string, T>>& v, const std::string& name) {
    for (const auto& [k, x] : v)
      if (k == name) return &x;
    return nullptr;
  }
};

namespace detail {

inline std::string child(const std::string& where, const std::string& key) { return where + "/" + key; }
inline std::string child(const std::string& where, std::size_t i) { return where + "/" + std::to_string(i); }

inline const Json& need(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where, "missing field \"" + key + "\"");
  return j.at(key);
}

inline std::string need_string(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = need(j, key, where);
  if (!v.is_string()) throw ParseError(child(where, key), "expected a string");
  return v.get<std::string>();
}

inline long long as_int(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ParseError(where, "expected an integer");
  return v.get<long long>();
}

inline Complex parse_complex(const Json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) return {v[0].get<double>(), v[1].get<double>()};
  throw ParseError(where, "expected a number or [re, im]");
}

inline ComplexMatrix parse_matrix(const Json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ParseError(where, "expected a non-empty array of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  if (cols == 0) throw ParseError(child(where, 0), "expected a non-empty row");
  ComplexMatrix m(static_cast<Index>(v.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != cols) throw ParseError(child(where, i), "rows must have equal length");
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = parse_complex(v[i][j], child(child(where, i), j));
  }
  return m;
}

inline std::vector<ComplexMatrix> parse_matrix_list(const Json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where, "expected an array of matrices");
  std::vector<ComplexMatrix> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_matrix(v[i], child(where, i)));
  return out;
}

inline std::vector<Index> parse_index_list(const Json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where, "expected an array of integers");
  std::vector<Index> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(static_cast<Index>(as_int(v[i], child(where, i))));
  return out;
}

inline Json matrix_to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) {
      const Complex z = m(i, j);
      if (z.imag() == 0.0) row.push_back(z.real());
      else row.push_back(Json::array({z.real(), z.imag()}));
    }
    rows.push_back(row);
  }
  return rows;
}

template <class T>
const T& resolve(const std::vector<std::pair<std::string, T>>& v, const Json& j, const std::string& key,
                 const std::string& where, const char* kind) {
  const std::string name = need_string(j, key, where);
  const T* p = Scenario::lookup(v, name);
  if (!p) throw ParseError(child(where, key), std::string("unknown ") + kind + " \"" + name + "\"");
  return *p;
}

// Runs a constructor and reports library errors at `where`.
template <class F>
auto located(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(where, e.what());
  }
}

inline FiniteCStarAlgebra parse_algebra(const Json& v, const std::string& where) {
  const Json& blocks = v.is_object() ? need(v, "blocks", where) : v;
  const auto sizes = parse_index_list(blocks, v.is_object() ? child(where, "blocks") : where);
  if (sizes.empty()) throw ParseError(where, "an algebra needs at least one block");
  for (Index s : sizes)
    if (s < 1) throw ParseError(where, "block sizes must be positive");
  return FiniteCStarAlgebra(sizes);
}

inline FiniteGroup parse_group(const Json& v, const std::string& where) {
  FiniteGroup g;
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "trivial") g = FiniteGroup::trivial();
    else if (s == "S3") g = FiniteGroup::symmetric3();
    else if (s.size() > 1 && s[0] == 'Z' && s.find_first_not_of("0123456789", 1) == std::string::npos) {
      const long n = std::stol(s.substr(1));
      if (n < 1 || n > 64) throw ParseError(where, "cyclic group order must be in 1..64");
      g = FiniteGroup::cyclic(n);
    } else {
      throw ParseError(where, "unknown group \"" + s + "\" (use trivial, Zn, S3 or {\"cayley\": ...})");
    }
  } else if (v.is_object()) {
    const Json& t = need(v, "cayley", where);
    if (!t.is_array() || t.empty()) throw ParseError(child(where, "cayley"), "expected a square table");
    std::vector<std::vector<Index>> table;
    for (std::size_t i = 0; i < t.size(); ++i) {
      auto row = parse_index_list(t[i], child(child(where, "cayley"), i));
      if (row.size() != t.size()) throw ParseError(child(child(where, "cayley"), i), "table must be square");
      for (Index x : row)
        if (x < 0 || x >= static_cast<Index>(t.size())) throw ParseError(child(child(where, "cayley"), i), "entry out of range");
      table.push_back(std::move(row));
    }
    g = FiniteGroup(table, v.contains("name") && v["name"].is_string() ? v["name"].get<std::string>() : "G");
  } else {
    throw ParseError(where, "expected a group name or {\"cayley\": ...}");
  }
  const auto rep = verify_group(g);
  if (!rep.passed()) throw ParseError(where, "not a group" + (rep.witness ? ": " + *rep.witness : std::string()));
  return g;
}

inline SystemPtr parse_action(const Scenario& s, const Json& v, const std::string& where) {
  const auto& g = resolve(s.groups, v, "group", where, "group");
  const auto& a = resolve(s.algebras, v, "algebra", where, "algebra");
  const std::string type = v.contains("type") ? need_string(v, "type", where) : "trivial";
  if (type == "trivial") return make_system(GroupAction::trivial(g, a));
  if (type == "inner") {
    const auto us = parse_matrix_list(need(v, "unitaries", where), child(where, "unitaries"));
    return located(where, [&] { return make_system(GroupAction::inner(g, a, us)); });
  }
  if (type == "automorphisms") {
    const auto ms = parse_matrix_list(need(v, "matrices", where), child(where, "matrices"));
    return located(where, [&] {
      std::vector<StarHomomorphism> autos;
      for (const auto& m : ms) autos.emplace_back(a, a, m);
      return make_system(GroupAction(g, a, std::move(autos)));
    });
  }
  if (type == "block-permutation") {
    const Json& ps = need(v, "permutations", where);
    if (!ps.is_array() || static_cast<Index>(ps.size()) != g.order())
      throw ParseError(child(where, "permutations"), "one block permutation per group element required");
    std::vector<std::vector<Index>> perms;
    for (std::size_t i = 0; i < ps.size(); ++i) perms.push_back(parse_index_list(ps[i], child(child(where, "permutations"), i)));
    return located(child(where, "permutations"), [&] { return make_system(GroupAction::block_permutation(g, a, perms)); });
  }
  throw ParseError(child(where, "type"), "unknown action type \"" + type + "\"");
}

inline HilbertModule parse_module(const Scenario& s, const Json& v, const std::string& where) {
  const auto& b = resolve(s.algebras, v, "algebra", where, "algebra");
  const Index rank = v.contains("rank") ? static_cast<Index>(as_int(v["rank"], child(where, "rank"))) : 1;
  if (rank < 1) throw ParseError(child(where, "rank"), "rank must be positive");
  if (!v.contains("projection")) return HilbertModule(b, rank);
  const auto p = parse_matrix(v["projection"], child(where, "projection"));
  return located(child(where, "projection"), [&] { return HilbertModule(b, rank, p); });
}

inline UnitaryRepresentation parse_representation(const Scenario& s, const Json& v, const std::string& where) {
  const auto& g = resolve(s.groups, v, "group", where, "group");
  const auto& e = resolve(s.modules, v, "module", where, "module");
  const std::string type = v.contains("type") ? need_string(v, "type", where) : "trivial";
  if (type == "trivial") return UnitaryRepresentation::trivial(g, e);
  if (type == "matrices") {
    const auto rs = parse_matrix_list(need(v, "matrices", where), child(where, "matrices"));
    if (static_cast<Index>(rs.size()) != g.order()) throw ParseError(child(where, "matrices"), "one matrix per group element required");
    ComplexMatrix w = ComplexMatrix::Identity(e.flat_dim(), e.flat_dim());
    if (v.contains("unitary")) w = parse_matrix(v["unitary"], child(where, "unitary"));
    return located(where, [&] { return UnitaryRepresentation::from_matrices(g, e, rs, w); });
  }
  if (type == "operators") {
    const auto os = parse_matrix_list(need(v, "operators", where), child(where, "operators"));
    return located(where, [&] {
      std::vector<AdjointableOperator> us;
      for (const auto& o : os) us.emplace_back(e, e, o);
      return UnitaryRepresentation(g, e, std::move(us));
    });
  }
  throw ParseError(child(where, "type"), "unknown representation type \"" + type + "\"");
}

inline CompletelyPositiveMap parse_cp(const Scenario& s, const Json& v, const std::string& where) {
  const auto& a = resolve(s.algebras, v, "source", where, "algebra");
  const auto& e = resolve(s.modules, v, "module", where, "module");
  const std::string type = need_string(v, "type", where);
  const Index d = e.flat_dim();
  if (type == "values") {
    const auto vs = parse_matrix_list(need(v, "values", where), child(where, "values"));
    if (static_cast<Index>(vs.size()) != a.linear_dim()) throw ParseError(child(where, "values"), "one value per basis element of the source required");
    return located(child(where, "values"), [&] {
      std::vector<AdjointableOperator> ops;
      for (const auto& m : vs) ops.emplace_back(e, e, m);
      return CompletelyPositiveMap(a, e, std::move(ops));
    });
  }
  if (type == "choi") {
    const auto cs = parse_matrix_list(need(v, "blocks", where), child(where, "blocks"));
    if (static_cast<Index>(cs.size()) != a.num_blocks()) throw ParseError(child(where, "blocks"), "one Choi matrix per block of the source required");
    std::vector<ComplexMatrix> vals(static_cast<std::size_t>(a.linear_dim()));
    for (Index k = 0; k < a.num_blocks(); ++k) {
      const Index m = a.block_size(k);
      const auto& c = cs[static_cast<std::size_t>(k)];
      if (c.rows() != m * d || c.cols() != m * d) throw ParseError(child(child(where, "blocks"), static_cast<std::size_t>(k)), "Choi block has the wrong size");
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j) vals[static_cast<std::size_t>(a.basis_position(k, i, j))] = c.block(i * d, j * d, d, d);
    }
    return located(child(where, "blocks"), [&] {
      std::vector<AdjointableOperator> ops;
      for (const auto& m : vals) ops.emplace_back(e, e, m);
      return CompletelyPositiveMap(a, e, std::move(ops));
    });
  }
  if (type == "identity" || type == "transpose") {
    if (e.base().total_matrix_dim() != 1 || e.rank() != a.total_matrix_dim())
      throw ParseError(child(where, "module"), "identity and transpose maps need the module C^N over C with N the matrix size of the source");
    if (type == "identity") return CompletelyPositiveMap::identity_representation(a);
    return CompletelyPositiveMap::from_function(a, e, [&](const AlgebraElement& x) {
      return AdjointableOperator(e, e, ComplexMatrix(x.block_diagonal().transpose()));
    });
  }
  if (type == "trace-state") return located(where, [&] { return CompletelyPositiveMap::trace_state(a, e); });
  if (type == "conjugation") {
    const auto m = parse_matrix(need(v, "matrix", where), child(where, "matrix"));
    const Index k = v.contains("multiplicity") ? static_cast<Index>(as_int(v["multiplicity"], child(where, "multiplicity"))) : 1;
    return located(child(where, "matrix"), [&] { return CompletelyPositiveMap::conjugation(a, e, m, k); });
  }
  if (type == "random-covariant") {
    const auto& sys = resolve(s.actions, v, "action", where, "action");
    const auto& u = resolve(s.representations, v, "representation", where, "representation");
    const std::uint64_t seed = v.contains("seed") ? static_cast<std::uint64_t>(as_int(v["seed"], child(where, "seed"))) : 0;
    const Index k = v.contains("multiplicity") ? static_cast<Index>(as_int(v["multiplicity"], child(where, "multiplicity"))) : 2;
    if (sys->algebra() != a || u.module() != e || sys->group() != u.group())
      throw ParseError(where, "action, representation, source and module do not fit together");
    Rng rng(seed);
    return covariant_average(random_unital_cp(rng, a, e, k), *sys, u);
  }
  throw ParseError(child(where, "type"), "unknown CP map type \"" + type + "\"");
}

inline std::shared_ptr<AlgebraTower> parse_tower(const Scenario& s, const Json& v, const std::string& where) {
  const Json& lv = need(v, "levels", where);
  if (!lv.is_array() || lv.empty()) throw ParseError(child(where, "levels"), "expected a non-empty list of algebra names");
  std::vector<FiniteCStarAlgebra> levels;
  for (std::size_t i = 0; i < lv.size(); ++i) {
    if (!lv[i].is_string()) throw ParseError(child(child(where, "levels"), i), "expected an algebra name");
    const auto* a = Scenario::lookup(s.algebras, lv[i].get<std::string>());
    if (!a) throw ParseError(child(child(where, "levels"), i), "unknown algebra \"" + lv[i].get<std::string>() + "\"");
    levels.push_back(*a);
  }
  const Index n = static_cast<Index>(levels.size());
  std::vector<std::pair<Index, Index>> covers;
  std::vector<TowerEdge> edges;
  const Json maps = v.contains("maps") ? v["maps"] : Json::array();
  if (!maps.is_array()) throw ParseError(child(where, "maps"), "expected an array");
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const std::string w = child(child(where, "maps"), i);
    const Json& m = maps[i];
    const Index from = static_cast<Index>(as_int(need(m, "from", w), child(w, "from")));
    const Index to = static_cast<Index>(as_int(need(m, "to", w), child(w, "to")));
    if (from < 0 || from >= n || to < 0 || to >= n || from == to) throw ParseError(w, "bad level indices");
    covers.emplace_back(from, to);
    const auto& src = levels[static_cast<std::size_t>(from)];
    const auto& dst = levels[static_cast<std::size_t>(to)];
    const std::string type = m.contains("type") ? need_string(m, "type", w) : "matrix";
    if (type == "block-projection") {
      const auto kept = parse_index_list(need(m, "kept", w), child(w, "kept"));
      for (Index k : kept)
        if (k < 0 || k >= src.num_blocks()) throw ParseError(child(w, "kept"), "block index out of range");
      auto h = StarHomomorphism::block_projection(src, kept);
      if (h.target() != dst) throw ParseError(w, "projection does not land in level " + std::to_string(to));
      edges.push_back({from, to, h});
    } else if (type == "matrix") {
      const auto mat = parse_matrix(need(m, "matrix", w), child(w, "matrix"));
      edges.push_back({from, to, located(w, [&] { return StarHomomorphism(src, dst, mat); })});
    } else {
      throw ParseError(child(w, "type"), "unknown map type \"" + type + "\"");
    }
  }
  DirectedPoset poset = located(where, [&] { return DirectedPoset(n, covers); });
  return located(where, [&] { return std::make_shared<AlgebraTower>(poset, levels, edges); });
}

inline const std::vector<std::string>& task_types() {
  static const std::vector<std::string> t = {"dilate", "crossed-product", "extend", "tower-check", "verify-all"};
  return t;
}

// Reference and shape checks for one task, before anything runs.
inline void check_task(const Scenario& s, const TaskSpec& t) {
  const Json& p = t.params;
  const std::string& w = t.where;
  auto opt_ref = [&](const char* key) { return p.contains(key); };
  if (t.type == "dilate" || t.type == "extend") {
    const auto& rho = resolve(s.cp_maps, p, "cp", w, "CP map");
    if (opt_ref("action")) {
      const auto& sys = resolve(s.actions, p, "action", w, "action");
      if (sys->algebra() != rho.source()) throw ParseError(child(w, "action"), "action is not on the source algebra of the CP map");
      if (opt_ref("representation")) {
        const auto& u = resolve(s.representations, p, "representation", w, "representation");
        if (u.module() != rho.target()) throw ParseError(child(w, "representation"), "representation is not on the module of the CP map");
        if (u.group() != sys->group()) throw ParseError(child(w, "representation"), "representation and action use different groups");
      } else if (sys->group().order() != 1) {
        throw ParseError(w, "a non-trivial action needs a representation");
      }
    } else if (opt_ref("representation")) {
      throw ParseError(w, "a representation needs an action");
    }
  } else if (t.type == "crossed-product") {
    resolve(s.actions, p, "action", w, "action");
    if (p.contains("expect_blocks")) parse_index_list(p["expect_blocks"], child(w, "expect_blocks"));
  } else if (t.type == "tower-check") {
    const auto& tw = resolve(s.towers, p, "tower", w, "tower");
    if (opt_ref("module")) {
      const auto& e = resolve(s.modules, p, "module", w, "module");
      const auto top = tw->poset().top();
      if (!top) throw ParseError(child(w, "tower"), "tower needs a top level for module checks");
      if (e.base() != tw->level(*top)) throw ParseError(child(w, "module"), "module is not over the top level of the tower");
      if (opt_ref("cp")) {
        const auto& rho = resolve(s.cp_maps, p, "cp", w, "CP map");
        if (rho.target() != e) throw ParseError(child(w, "cp"), "CP map is not on the tower module");
        const auto& sys = resolve(s.actions, p, "action", w, "action");
        const auto& u = resolve(s.representations, p, "representation", w, "representation");
        if (sys->algebra() != rho.source() || u.module() != e || u.group() != sys->group())
          throw ParseError(w, "action, representation and CP map do not fit together");
      }
    } else if (opt_ref("cp")) {
      throw ParseError(w, "a CP map check on a tower needs a module");
    }
  } else if (t.type == "verify-all") {
  } else {
    throw ParseError(child(w, "type"), "unknown task type \"" + t.type + "\"");
  }
}

inline std::pair<long, long> line_column(const std::string& text, std::size_t byte) {
  long line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

// Parses and resolves a scenario document. Throws ParseError with a location.
inline Scenario parse_scenario(const Json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw ParseError("/", "scenario must be a JSON object");
  if (!doc.contains("schema") || doc["schema"] != kScenarioSchema)
    throw ParseError("/schema", std::string("expected \"") + kScenarioSchema + "\"");
  static const std::vector<std::string> known = {"schema", "description", "tolerance", "seed", "algebras", "groups", "actions",
                                                 "modules", "representations", "cp_maps", "towers", "tasks"};
  for (const auto& [k, _] : doc.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ParseError("/" + k, "unknown top-level field");
  Scenario s;
  if (doc.contains("tolerance")) {
    if (!doc["tolerance"].is_number() || doc["tolerance"].get<double>() <= 0.0) throw ParseError("/tolerance", "expected a positive number");
    s.tolerance = doc["tolerance"].get<double>();
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ParseError("/seed", "expected a non-negative integer");
    s.seed = doc["seed"].get<std::uint64_t>();
  }
  auto section = [&](const char* key, auto&& body) {
    if (!doc.contains(key)) return;
    const Json& sec = doc[key];
    if (!sec.is_object()) throw ParseError(std::string("/") + key, "expected an object of named declarations");
    for (const auto& [name, v] : sec.items()) body(name, v, std::string("/") + key + "/" + name);
  };
  auto unique = [](const auto& v, const std::string& name, const std::string& where) {
    if (Scenario::lookup(v, name)) throw ParseError(where, "duplicate name");
  };
  section("algebras", [&](const std::string& n, const Json& v, const std::string& w) {
    unique(s.algebras, n, w);
    s.algebras.emplace_back(n, parse_algebra(v, w));
  });
  section("groups", [&](const std::string& n, const Json& v, const std::string& w) {
    unique(s.groups, n, w);
    s.groups.emplace_back(n, parse_group(v, w));
  });
  section("actions", [&](const std::string& n, const Json& v, const std::string& w) {
    unique(s.actions, n, w);
    s.actions.emplace_back(n, parse_action(s, v, w));
  });
  section("modules", [&](const std::string& n, const Json& v, const std::string& w) {
    unique(s.modules, n, w);
    s.modules.emplace_back(n, parse_module(s, v, w));
  });
  section("representations", [&](const std::string& n, const Json& v, const std::string& w) {
    unique(s.representations, n, w);
    s.representations.emplace_back(n, parse_representation(s, v, w));
  });
  section("cp_maps", [&](const std::string& n, const Json& v, const std::string& w) {
    unique(s.cp_maps, n, w);
    s.cp_maps.emplace_back(n, parse_cp(s, v, w));
  });
  section("towers", [&](const std::string& n, const Json& v, const std::string& w) {
    unique(s.towers, n, w);
    s.towers.emplace_back(n, parse_tower(s, v, w));
  });
  if (doc.contains("tasks")) {
    const Json& ts = doc["tasks"];
    if (!ts.is_array()) throw ParseError("/tasks", "expected an array");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const std::string w = "/tasks/" + std::to_string(i);
      TaskSpec t;
      t.where = w;
      t.params = ts[i];
      t.type = need_string(ts[i], "type", w);
      t.name = ts[i].contains("name") ? need_string(ts[i], "name", w) : t.type + "-" + std::to_string(i);
      for (const auto& other : s.tasks)
        if (other.name == t.name) throw ParseError(child(w, "name"), "duplicate task name");
      check_task(s, t);
      s.tasks.push_back(std::move(t));
    }
  }
  return s;
}

inline Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte);
    std::string msg = e.what();
    const auto pos = msg.find("syntax error");
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col),
                     pos == std::string::npos ? msg : msg.substr(pos));
  }
}

}  // namespace prostar::cli
