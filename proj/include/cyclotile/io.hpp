#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reduce.hpp"

namespace cyclotile::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* library_version = "1.0.0";
inline constexpr int format_version = 1;

/// An instance file: a modulus with one or both sides present.
struct InstanceFile {
  Modulus mod;
  std::optional<Multiset> a;
  std::optional<Multiset> b;

  const Multiset& side(char which) const {
    const auto& s = which == 'a' ? a : b;
    require(s.has_value(), ErrorCode::invalid_argument, std::string("instance has no set ") + which);
    return *s;
  }
  TilingInstance instance() const {
    require(a && b, ErrorCode::invalid_argument, "instance needs both a and b");
    return {*a, *b};
  }
};

namespace detail {

inline Multiset side_from(const Modulus& mod, const std::vector<Int>& elems,
                          const std::vector<std::pair<Int, Int>>& weights, const std::string& name) {
  Multiset s(mod);
  for (std::size_t i = 0; i < elems.size(); ++i) {
    require(elems[i] >= 0 && elems[i] < mod.m(), ErrorCode::parse_error,
            name + ": element " + std::to_string(elems[i]) + " outside [0, m)");
    require(i == 0 || elems[i - 1] < elems[i], ErrorCode::parse_error, name + ": elements must be strictly increasing");
    s.set_weight(elems[i], 1);
  }
  for (const auto& [x, w] : weights) {
    require(x >= 0 && x < mod.m(), ErrorCode::parse_error, "weights_" + name + ": element outside [0, m)");
    s.set_weight(x, w);
  }
  return s;
}

inline Modulus modulus_from(Int m, const std::optional<Json>& primes) {
  require(m >= 2, ErrorCode::parse_error, "m must be at least 2");
  Modulus mod = Modulus::of(m);
  if (primes) {
    require(primes->is_array(), ErrorCode::parse_error, "primes must be an array of [p, n] pairs");
    std::vector<PrimeFactor> f;
    for (const auto& e : *primes) {
      require(e.is_array() && e.size() == 2, ErrorCode::parse_error, "primes must be an array of [p, n] pairs");
      f.push_back({e[0].get<Int>(), e[1].get<int>()});
    }
    require(f == mod.factors(), ErrorCode::parse_error, "primes inconsistent with m");
  }
  return mod;
}

inline InstanceFile parse_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed JSON: ") + e.what());
  }
  try {
    require(j.is_object() && j.contains("m"), ErrorCode::parse_error, "instance must be an object with key m");
    std::optional<Json> primes;
    if (j.contains("primes")) primes = j["primes"];
    InstanceFile f{modulus_from(j["m"].get<Int>(), primes), std::nullopt, std::nullopt};
    for (const char* name : {"a", "b"}) {
      std::string key = name, wkey = std::string("weights_") + name;
      if (!j.contains(key) && !j.contains(wkey)) continue;
      std::vector<Int> elems = j.contains(key) ? j[key].get<std::vector<Int>>() : std::vector<Int>{};
      std::vector<std::pair<Int, Int>> weights;
      if (j.contains(wkey))
        for (const auto& e : j[wkey]) {
          require(e.is_array() && e.size() == 2, ErrorCode::parse_error, wkey + " must hold [element, weight] pairs");
          weights.emplace_back(e[0].get<Int>(), e[1].get<Int>());
        }
      (key == "a" ? f.a : f.b) = side_from(f.mod, elems, weights, key);
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("bad instance field: ") + e.what());
  }
}

inline InstanceFile parse_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::optional<Int> m;
  std::optional<std::vector<Int>> a, b;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    std::vector<Int> values;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        values.push_back(std::stoll(tok, &used));
        require(used == tok.size(), ErrorCode::parse_error, "not an integer: " + tok);
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::parse_error, "not an integer: " + tok);
      }
    }
    if (tag == "m") {
      require(values.size() == 1, ErrorCode::parse_error, "line m takes one integer");
      m = values[0];
    } else if (tag == "a" || tag == "b") {
      std::sort(values.begin(), values.end());
      (tag == "a" ? a : b) = values;
    } else {
      throw Error(ErrorCode::parse_error, "unknown line tag: " + tag);
    }
  }
  require(m.has_value(), ErrorCode::parse_error, "missing line m");
  InstanceFile f{modulus_from(*m, std::nullopt), std::nullopt, std::nullopt};
  if (a) f.a = side_from(f.mod, *a, {}, "a");
  if (b) f.b = side_from(f.mod, *b, {}, "b");
  return f;
}

}  // namespace detail

/// Parses JSON, or the line format "m 225" / "a 0 15 30" / "b ...".
inline InstanceFile parse_instance(const std::string& text) {
  auto first = text.find_first_not_of(" \t\r\n");
  require(first != std::string::npos, ErrorCode::parse_error, "empty instance");
  return text[first] == '{' ? detail::parse_json(text) : detail::parse_text(text);
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline InstanceFile read_instance(const std::string& path) { return parse_instance(read_text(path)); }

inline Json to_json(const InstanceFile& f) {
  Json j;
  j["m"] = f.mod.m();
  Json primes = Json::array();
  for (const auto& pf : f.mod.factors()) primes.push_back({pf.p, pf.n});
  j["primes"] = primes;
  auto put = [&](const char* name, const std::optional<Multiset>& s) {
    if (!s) return;
    std::vector<Int> elems;
    Json weights = Json::array();
    for (Int x : s->support()) {
      if (s->weight(x) == 1) elems.push_back(x);
      else weights.push_back({x, s->weight(x)});
    }
    j[name] = elems;
    if (!weights.empty()) j[std::string("weights_") + name] = weights;
  };
  put("a", f.a);
  put("b", f.b);
  return j;
}

inline InstanceFile to_file(const TilingInstance& t) { return {t.modulus(), t.a, t.b}; }

/// Canonical single-line rendering.
inline std::string canonical(const InstanceFile& f) { return to_json(f).dump(); }

inline Json to_json(const ShiftMove& mv, const Modulus& mod) {
  return Json{{"direction", mod.prime(mv.direction)}, {"root", mv.root}, {"target", mv.target}};
}

inline Json to_json(const StructureFinding& s, const Modulus& mod) {
  Json j;
  j["kind"] = to_string(s.kind);
  j["direction"] = s.direction ? Json(mod.prime(*s.direction)) : Json(nullptr);
  j["grid"] = s.grid;
  j["missing_divisors"] = s.missing_divisors;
  j["points"] = s.points;
  return j;
}

inline Json to_json(const ClassificationReport& r, const Modulus& mod, std::uint64_t seed, std::size_t budget) {
  Json j;
  switch (r.branch) {
    case Branch::unfibered_to_grid:
      j["branch"] = "grid-reduction";
      j["route"] = "unfibered";
      break;
    case Branch::fibered_to_grid:
      j["branch"] = "grid-reduction";
      j["route"] = "fibered-I";
      break;
    default:
      j["branch"] = to_string(r.branch);
      j["route"] = nullptr;
  }
  j["direction"] = r.direction ? Json(mod.prime(*r.direction)) : Json(nullptr);
  j["swapped"] = r.swapped;
  j["slab_swapped"] = r.slab_swapped;
  j["in_scope"] = r.in_scope;
  j["t1_a"] = r.t1_a;
  j["t1_b"] = r.t1_b;
  j["t2_a"] = r.t2_a;
  j["t2_b"] = r.t2_b;
  j["standard_cross_check"] = r.standard_cross_check;
  Json structures = Json::array();
  for (const auto& s : r.structures) structures.push_back(to_json(s, mod));
  j["structures"] = structures;
  if (r.ijk) {
    j["ijk"] = Json{{"sizes", {r.ijk->sets[0].size(), r.ijk->sets[1].size(), r.ijk->sets[2].size()}},
                    {"triple", r.ijk->triple.size()},
                    {"f1", r.ijk->assumption_f1},
                    {"f2", r.ijk->assumption_f2},
                    {"f3", r.ijk->assumption_f3}};
  } else {
    j["ijk"] = nullptr;
  }
  if (r.trace) {
    Json moves = Json::array();
    for (const auto& mv : r.trace->moves) moves.push_back(to_json(mv, mod));
    j["trace"] = Json{{"moves", moves},
                      {"grid", r.trace->grid},
                      {"states_expanded", r.trace->states_expanded},
                      {"s_a", r.trace->s_a_snapshots.back()}};
  } else {
    j["trace"] = nullptr;
  }
  j["notes"] = r.notes;
  j["budget"] = budget;
  j["seed"] = seed;
  return j;
}

inline Json error_json(const Error& e) { return Json{{"error", e.what()}, {"code", to_string(e.code())}}; }

}  // namespace cyclotile::io
