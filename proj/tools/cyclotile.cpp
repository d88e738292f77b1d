#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>

#include "cyclotile/io.hpp"
#include "cyclotile/search.hpp"

namespace ct = cyclotile;
namespace io = cyclotile::io;

namespace {

enum Exit { yes = 0, no = 1, failure = 2 };

io::InstanceFile load(const std::string& path) {
  if (path == "-") {
    std::string text((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
    return io::parse_instance(text);
  }
  return io::read_instance(path);
}

void emit(const std::string& line, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << line << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  ct::require(static_cast<bool>(out), ct::ErrorCode::io_error, "cannot write " + out_path);
  out << line << '\n';
}

const char* yn(bool v) { return v ? "yes" : "no"; }

std::size_t direction_of(const ct::Modulus& mod, ct::Int p) {
  for (std::size_t nu = 0; nu < mod.rank(); ++nu)
    if (mod.prime(nu) == p) return nu;
  throw ct::Error(ct::ErrorCode::invalid_argument, "--dir " + std::to_string(p) + " is not a prime factor of m");
}

int cmd_verify(const io::InstanceFile& f) {
  auto t = f.instance();
  bool sizes = t.a.total() * t.b.total() == t.m();
  bool direct = ct::verify_direct(t);
  bool poly = ct::verify_poly(t);
  bool sands = sizes && ct::verify_sands(t);
  std::cout << "direct: " << yn(direct) << '\n'
            << "polynomial: " << yn(poly) << '\n'
            << "sands: " << yn(sands) << '\n'
            << "agree: " << yn(direct == poly && poly == sands) << '\n'
            << "tiling: " << yn(direct) << '\n';
  return direct ? yes : no;
}

int cmd_spectrum(const io::InstanceFile& f, char which) {
  auto s = ct::spectrum(f.side(which));
  for (ct::Int d : s.divisors) {
    bool pp = std::binary_search(s.prime_powers.begin(), s.prime_powers.end(), d);
    std::cout << d << (pp ? " S" : "") << '\n';
  }
  return yes;
}

int cmd_t(const io::InstanceFile& f, char which, int level) {
  bool ok = level == 1 ? ct::t1_check(f.side(which)) : ct::t2_check(f.side(which));
  std::cout << "t" << level << ": " << yn(ok) << '\n';
  return ok ? yes : no;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integer tilings of cyclic groups Z_M"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("cyclotile ") + io::library_version + " (instance format " +
                                        std::to_string(io::format_version) + ")");
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads for wrapped operations")->check(CLI::PositiveNumber);

  std::string file, out_path;
  std::string which = "a";
  std::size_t budget = 10000;
  std::uint64_t seed = 0;
  ct::Int dir = 0, root = 0, target = 0, size = 0, m = 0;
  std::size_t limit = 1;
  bool complement = false;

  auto add_file = [&](CLI::App* sub) { sub->add_option("file", file, "Instance file (JSON or line format), - for stdin")->required(); };
  auto add_set = [&](CLI::App* sub) { sub->add_option("--set", which, "Which side")->check(CLI::IsMember({"a", "b"})); };

  auto* verify = app.add_subcommand("verify", "Check A + B = Z_M with three independent verifiers");
  add_file(verify);
  auto* spectrum = app.add_subcommand("spectrum", "Divisors s of M with Phi_s | set; prime powers marked S");
  add_file(spectrum);
  add_set(spectrum);
  auto* t1 = app.add_subcommand("t1", "Coven-Meyerowitz condition (T1)");
  add_file(t1);
  add_set(t1);
  auto* t2 = app.add_subcommand("t2", "Coven-Meyerowitz condition (T2)");
  add_file(t2);
  add_set(t2);
  auto* standardize = app.add_subcommand("standardize", "Emit the standard complement of b as a");
  add_file(standardize);
  standardize->add_option("-o,--output", out_path);
  auto* classify = app.add_subcommand("classify", "Route a tiling through the reduction pipeline (JSON report)");
  add_file(classify);
  classify->add_option("--budget", budget, "States expanded by the grid search")->check(CLI::PositiveNumber);
  classify->add_option("--seed", seed);
  auto* shift = app.add_subcommand("shift", "Move one M-fiber of A");
  add_file(shift);
  shift->add_option("--dir", dir, "Prime p_nu of the fiber direction")->required();
  shift->add_option("--root", root, "An element of the fiber to move")->required();
  shift->add_option("--to", target, "Point the fiber is moved onto")->required();
  shift->add_option("-o,--output", out_path);
  auto* search = app.add_subcommand("search", "Find tiling complements of a");
  add_file(search);
  search->add_flag("--complement", complement, "Search complements of a")->required();
  search->add_option("--limit", limit, "Maximum number of complements")->check(CLI::PositiveNumber);
  search->add_option("--seed", seed);
  auto* enumerate = app.add_subcommand("enumerate", "Stream every tiling (A, B) of Z_m");
  enumerate->add_option("m", m, "Modulus")->required();
  enumerate->add_option("--size", size, "Required |A|");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? yes : failure;
  }

  try {
    if (*verify) return cmd_verify(load(file));
    if (*spectrum) return cmd_spectrum(load(file), which[0]);
    if (*t1) return cmd_t(load(file), which[0], 1);
    if (*t2) return cmd_t(load(file), which[0], 2);
    if (*standardize) {
      auto f = load(file);
      f.a = ct::standard_complement_of(f.side('b'));
      emit(io::canonical(f), out_path);
      return yes;
    }
    if (*classify) {
      auto f = load(file);
      auto report = ct::classify(f.instance(), {budget});
      std::cout << io::to_json(report, f.mod, seed, budget).dump() << '\n';
      return report.branch == ct::Branch::unresolved ? no : yes;
    }
    if (*shift) {
      auto f = load(file);
      auto t = f.instance();
      std::size_t nu = direction_of(f.mod, dir);
      auto moved = ct::fiber_shift(t, {nu, root, target});
      emit(io::canonical(io::to_file(moved)), out_path);
      return yes;
    }
    if (*search) {
      auto f = load(file);
      std::optional<std::uint64_t> s;
      if (search->count("--seed")) s = seed;
      auto found = ct::find_complements(f.side('a'), limit, s);
      for (const auto& b : found) std::cout << io::canonical({f.mod, f.a, b}) << '\n';
      return found.empty() ? no : yes;
    }
    if (*enumerate) {
      for (const auto& t : ct::enumerate_tilings({m, size})) std::cout << io::canonical(io::to_file(t)) << '\n';
      return yes;
    }
  } catch (const ct::Error& e) {
    std::cerr << io::error_json(e).dump() << '\n';
    return failure;
  } catch (const std::exception& e) {
    std::cerr << io::Json{{"error", e.what()}, {"code", "internal"}}.dump() << '\n';
    return failure;
  }
  return failure;
}
