#include <string>

#include "doctest.h"
#include "noisestab/config.hpp"
#include "noisestab/experiments.hpp"

using namespace noisestab;

namespace {

// Returns the ConfigError raised by `fn`, failing the test if none is.
template <typename Fn>
ConfigError config_error(Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("no ConfigError raised");
  return ConfigError("", 0, "", "");
}

const char* kSample = R"(# header comment
experiment = verify-main
seed = 3   # trailing comment
sets = a, b

[matrix]
kind = equicorrelated
rho = 0.25

[set.a]
type = halfspace
normal = 1, 0
offset = 0.5

[set.b]
type = ball
center = 0, 0
radius = 1.5
)";

}  // namespace

TEST_CASE("parse keeps entries, sections and lines") {
  const auto doc = ConfigDocument::parse(kSample, "sample.cfg");
  CHECK(doc.top().entries.size() == 3);
  CHECK(doc.top().find("seed")->value == "3");
  CHECK(doc.top().find("seed")->line == 3);
  REQUIRE(doc.section("set.b") != nullptr);
  CHECK(doc.section("set.b")->line == 15);
  CHECK(doc.section("set.b")->find("radius")->value == "1.5");
  CHECK(doc.section("nope") == nullptr);
}

TEST_CASE("emit is a fixed point after one round trip") {
  const auto doc = ConfigDocument::parse(kSample);
  const std::string once = doc.emit();
  const auto again = ConfigDocument::parse(once);
  CHECK(again.emit() == once);
  CHECK(again == doc);
  // Canonical text passes through byte for byte.
  CHECK(ConfigDocument::parse(once).emit() == once);
}

TEST_CASE("split_list") {
  CHECK(split_list("") == std::vector<std::string>{});
  CHECK(split_list(" a ,b,  c ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_list("x") == std::vector<std::string>{"x"});
}

TEST_CASE("syntax errors name the line") {
  auto e = config_error([] { ConfigDocument::parse("a = 1\nthis is wrong\n", "f.cfg"); });
  CHECK(e.line() == 2);
  CHECK(std::string(e.what()).rfind("f.cfg:2:", 0) == 0);

  e = config_error([] { ConfigDocument::parse("a = 1\na = 2\n"); });
  CHECK(e.line() == 2);
  CHECK(e.field() == "a");

  e = config_error([] { ConfigDocument::parse("[s]\nk = 1\n[s]\n"); });
  CHECK(e.line() == 3);

  e = config_error([] { ConfigDocument::parse("[bad name]\n"); });
  CHECK(e.line() == 1);
  e = config_error([] { ConfigDocument::parse("[open\n"); });
  CHECK(e.line() == 1);
}

TEST_CASE("typed reads anchor errors to line and field") {
  const auto doc = ConfigDocument::parse("[s]\nn = 12\nx = 1.5e-3\nbad = 1.5x\nlist = 1, inf, -inf\nneg = -4\n");
  const SectionReader r(doc, doc.section("s"), "s");
  CHECK(r.count("n") == 12);
  CHECK(r.real("x") == 1.5e-3);
  CHECK(r.reals("list") == std::vector<double>{1, HUGE_VAL, -HUGE_VAL});
  CHECK_FALSE(r.optional_real("missing").has_value());

  auto e = config_error([&] { r.real("bad"); });
  CHECK(e.line() == 4);
  CHECK(e.field() == "s.bad");
  e = config_error([&] { r.count("neg"); });
  CHECK(e.line() == 6);
  e = config_error([&] { r.string("missing"); });
  CHECK(e.field() == "s.missing");
  CHECK(e.line() == 1);  // the section header
  e = config_error([&] { r.restrict_keys({"n", "x"}); });
  CHECK(e.field() == "s.bad");
}

TEST_CASE("resolve writes defaults back and the result re-resolves identically") {
  const auto doc = ConfigDocument::parse(kSample, "sample.cfg");
  const auto cfg = resolve_config(doc, "verify-main");
  CHECK(cfg.seed == 3);
  CHECK(cfg.samples == 1'000'000);
  CHECK(cfg.target_se == 1e-6);
  CHECK(cfg.sets.size() == 2);
  CHECK(cfg.matrices.front().size == 2);
  CHECK(cfg.resolved.top().find("samples")->value == "1000000");
  CHECK(cfg.resolved.section("matrix")->find("size")->value == "2");

  const auto again = resolve_config(ConfigDocument::parse(cfg.resolved.emit()), "verify-main");
  CHECK(again.resolved.emit() == cfg.resolved.emit());
}

TEST_CASE("seed precedence: flag, then document, then environment, then 1") {
  const auto with_seed = ConfigDocument::parse(kSample);
  const auto without = ConfigDocument::parse("experiment = condition-check\nrandom_ou = 1\n");
  ConfigOverrides o;
  o.default_seed = 11;
  CHECK(resolve_config(with_seed, "verify-main", o).seed == 3);
  CHECK(resolve_config(without, "condition-check", o).seed == 11);
  o.seed = 5;
  CHECK(resolve_config(with_seed, "verify-main", o).seed == 5);
  CHECK(resolve_config(without, "condition-check").seed == 1);
}

TEST_CASE("semantic errors") {
  auto resolve = [](const std::string& text, const char* experiment) {
    return config_error([&] { resolve_config(ConfigDocument::parse(text, "t.cfg"), experiment); });
  };
  // Wrong experiment.
  CHECK(resolve("experiment = occupation\n", "verify-main").field() == "experiment");
  // Unknown key for this experiment.
  auto e = resolve("paths = 10\n", "verify-main");
  CHECK(e.field() == "paths");
  CHECK(e.line() == 1);
  // Missing set section.
  e = resolve("sets = a\n[matrix]\nkind = equicorrelated\nrho = 0\n", "verify-main");
  CHECK(e.field() == "sets");
  // Dimension mismatch in a normal.
  e = resolve("dimension = 3\nsets = a\n[matrix]\nkind = equicorrelated\nrho = 0\n[set.a]\ntype = halfspace\nnormal = 1, 0\noffset = 0\n",
              "verify-main");
  CHECK(e.field() == "set.a.normal");
  CHECK(e.line() == 8);
  // Matrix and set count disagree.
  e = resolve("sets = a\n[matrix]\nkind = explicit\nentries = 1, 0.5, 0.5, 1\n[set.a]\ntype = full\n", "verify-main");
  CHECK(e.field() == "sets");
  // Not positive semidefinite.
  e = resolve("sets = a, b, c\n[matrix]\nkind = explicit\nentries = 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1\n"
              "[set.a]\ntype = full\n[set.b]\ntype = full\n[set.c]\ntype = full\n",
              "verify-main");
  CHECK(e.field() == "matrix.entries");
  CHECK(e.line() == 4);
  // Self reference.
  e = resolve("sets = a, b\nt = 1\n[set.a]\ntype = complement\nof = a\n[set.b]\ntype = full\n", "noise-stability");
  CHECK(e.field() == "set.a.of");
  // Unknown set type.
  e = resolve("sets = a, b\n[set.a]\ntype = donut\n[set.b]\ntype = full\n", "noise-stability");
  CHECK(e.field() == "set.a.type");
  CHECK(e.line() == 3);
  // Occupation takes one horizon.
  e = resolve("sets = a, b\ntau = 0.1, 0.2\n[set.a]\ntype = full\n[set.b]\ntype = full\n", "occupation");
  CHECK(e.field() == "tau");
  // Sweep needs either a grid or random points.
  e = resolve("[sweep]\nx = 0.5\nrandom = 3\n", "hessian-sweep");
  CHECK(e.field() == "sweep.random");
  // Section that does not belong to the experiment.
  e = resolve("[sweep]\nx = 0.5\n", "condition-check");
  CHECK(e.line() == 1);
}

TEST_CASE("set constructions resolve to the intended sets") {
  const auto doc = ConfigDocument::parse(R"(
[set.h]
type = halfspace
normal = 0, 2
measure = 0.5
[set.b]
type = ball
measure = 0.5
[set.box]
type = box
lo = -1, -inf
hi = 1, inf
[set.u]
type = union
members = h, box
[set.c]
type = complement
of = u
)");
  const auto h = parse_set(doc, "h", 2);
  CHECK(h.contains(Eigen::Vector2d(5, -0.01)));
  CHECK_FALSE(h.contains(Eigen::Vector2d(5, 0.01)));
  const auto b = parse_set(doc, "b", 2);
  // gamma_2 of a centered disk of radius r is 1 - exp(-r^2 / 2).
  const double r = std::sqrt(2.0 * std::log(2.0));
  CHECK(b.contains(Eigen::Vector2d(r - 1e-9, 0)));
  CHECK_FALSE(b.contains(Eigen::Vector2d(r + 1e-9, 0)));
  const auto c = parse_set(doc, "c", 2);
  CHECK(c.contains(Eigen::Vector2d(2, 1)));
  CHECK_FALSE(c.contains(Eigen::Vector2d(0.5, 1)));
  CHECK_FALSE(c.contains(Eigen::Vector2d(2, -1)));
}
