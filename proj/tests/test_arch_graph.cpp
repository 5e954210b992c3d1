#include <set>

#include "doctest.h"
#include "graf/arch_graph.hpp"
#include "graf/common.hpp"
#include "oracles.hpp"

using namespace graf;

namespace {

bool has_violation(const ValidationReport& r, const std::string& needle) {
  for (const auto& v : r.violations)
    if (v.find(needle) != std::string::npos) return true;
  return false;
}

CellGraph unreachable_example(const SearchSpaceSpec& s) {
  return make_edge_cell(s, {{0, 1, "zero"}, {1, 2, "conv3x3"}, {1, 3, "skip"},
                            {0, 2, "skip"}, {0, 3, "zero"}, {2, 3, "conv3x3"}});
}

}  // namespace

TEST_CASE("builtin spaces pass their own checks") {
  for (const auto& name : builtin_space_names()) {
    const SearchSpaceSpec s = builtin_space(name);
    CHECK_NOTHROW(s.check());
    const SearchSpaceSpec back = spec_from_json(spec_to_json(s));
    CHECK(spec_to_json(back) == spec_to_json(s));
  }
  CHECK_THROWS_AS(builtin_space("nope"), Error);
}

TEST_CASE("spec invariants are enforced") {
  SearchSpaceSpec s = builtin_space("nb201_like");
  s.operations.push_back("skip");
  CHECK_THROWS_AS(s.check(), Error);
  s = builtin_space("nb201_like");
  s.output_node = 0;
  CHECK_THROWS_AS(s.check(), Error);
  s = builtin_space("nb201_like");
  s.operations.clear();
  CHECK_THROWS_AS(s.check(), Error);
}

TEST_CASE("validate_cell reports unknown operations and order violations") {
  const auto s = builtin_space("nb201_like");
  CHECK(validate_cell(cell_at(s, 1234), s).ok());

  auto bad_op = make_edge_cell(s, {{0, 1, "conv7x7"}, {0, 2, "skip"}, {0, 3, "skip"},
                                   {1, 2, "skip"}, {1, 3, "skip"}, {2, 3, "skip"}});
  CHECK(has_violation(validate_cell(bad_op, s), "unknown operation"));

  CellGraph cyc = cell_at(s, 0);
  cyc.edges[3] = {3, 1};
  const auto rep = validate_cell(cyc, s);
  CHECK(has_violation(rep, "not a DAG"));
  CHECK_THROWS_AS(require_valid(cyc, s), Error);

  CellGraph bad_id = cell_at(s, 0);
  bad_id.edges[0] = {0, 9};
  CHECK_FALSE(validate_cell(bad_id, s).ok());
}

TEST_CASE("find_unreachable on the documented examples") {
  const auto s = builtin_space("nb201_like");
  CHECK(find_unreachable(make_edge_cell(s, {{0, 1, "skip"}, {0, 2, "conv3x3"}, {0, 3, "skip"},
                                            {1, 2, "skip"}, {1, 3, "conv1x1"}, {2, 3, "avgpool3x3"}}),
                         s)
            .empty());

  const auto u = find_unreachable(unreachable_example(s), s);
  CHECK(std::set<Edge>(u.edges.begin(), u.edges.end()) == std::set<Edge>{{1, 2}, {1, 3}});
  CHECK_FALSE(is_well_formed(unreachable_example(s), s));

  // Output fed only through zero edges.
  const auto dead = make_edge_cell(s, {{0, 1, "skip"}, {0, 2, "conv3x3"}, {0, 3, "zero"},
                                       {1, 2, "skip"}, {1, 3, "zero"}, {2, 3, "zero"}});
  CHECK(find_unreachable(dead, s).edges.size() == 3);

  CHECK(is_well_formed(make_edge_cell(s, {{0, 1, "skip"}, {0, 2, "skip"}, {0, 3, "skip"},
                                          {1, 2, "skip"}, {1, 3, "skip"}, {2, 3, "skip"}}),
                       s));
}

TEST_CASE("find_unreachable equals the path-enumeration oracle on every 4-node cell") {
  for (const char* name : {"nb201_like", "tnb_micro_like"}) {
    const auto s = builtin_space(name);
    for_each_cell(s, false, [&](std::uint64_t, const CellGraph& c) {
      const auto u = find_unreachable(c, s);
      REQUIRE(std::set<Edge>(u.edges.begin(), u.edges.end()) == oracle::unreachable_edges(c, s));
    });
  }
}

TEST_CASE("well-formedness is invariant under edge-list permutation") {
  const auto s = builtin_space("nb201_like");
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    CellGraph c = oracle::random_cell(s, rng);
    CellGraph p = c;
    std::vector<std::size_t> idx(c.edges.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      p.edges[i] = c.edges[idx[i]];
      p.labels[i] = c.labels[idx[i]];
    }
    REQUIRE(is_well_formed(p, s) == is_well_formed(c, s));
    REQUIRE(canonical_edge_order(p, s) == canonical_edge_order(c, s));
  }
}

TEST_CASE("enumeration counts") {
  const auto nb201 = builtin_space("nb201_like");
  CHECK(space_size(nb201) == 15625);
  CHECK(enumerate_cells(nb201, false).size() == 15625);
  CHECK(enumerate_cells(nb201, true).size() == 9445);
  const auto tnb = builtin_space("tnb_micro_like");
  CHECK(enumerate_cells(tnb, false).size() == 4096);
  CHECK(enumerate_cells(tnb, true).size() == 2128);

  SearchSpaceSpec one = oracle::tiny_space(2, {"conv"});
  one.zero_op.reset();
  CHECK(enumerate_cells(one, false).size() == 1);
}

TEST_CASE("enumeration is lexicographic, deterministic and duplicate-free") {
  const auto s = builtin_space("tnb_micro_like");
  std::vector<CellGraph> seen;
  for_each_cell(s, false, [&](std::uint64_t i, const CellGraph& c) {
    REQUIRE(c == cell_at(s, i));
    seen.push_back(c);
  });
  REQUIRE(seen.size() == 4096);
  for (std::size_t i = 1; i < seen.size(); ++i) REQUIRE(seen[i - 1].labels < seen[i].labels);
  CHECK(seen[1].labels.back() == 1);
}

TEST_CASE("enumeration refuses spaces above the cap and names the needed cap") {
  const auto s = builtin_space("nb201_like");
  try {
    enumerate_cells(s, false, 1000);
    FAIL("expected refusal");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("15625") != std::string::npos);
  }
  CHECK_THROWS_AS(space_size(builtin_space("nb301_like")), Error);
}

TEST_CASE("macro architectures") {
  CHECK_NOTHROW(check_macro({{ModuleKind::kNormal, ModuleKind::kStrided, ModuleKind::kNormal, ModuleKind::kNormal}}));
  CHECK_THROWS_AS(check_macro({{ModuleKind::kNormal, ModuleKind::kNormal, ModuleKind::kNormal}}), Error);
  CHECK_THROWS_AS(check_macro({std::vector<ModuleKind>(7, ModuleKind::kNormal)}), Error);
  for (int k = 0; k < 4; ++k) {
    const auto m = static_cast<ModuleKind>(k);
    CHECK(parse_module_kind(module_kind_name(m)) == m);
  }
  CHECK_THROWS_AS(parse_module_kind("bogus"), Error);
}

TEST_CASE("node-labeled cells") {
  const auto s = builtin_space("nb101_like");
  const auto c = make_node_cell(s, {{0, 1}, {1, 2}, {0, 2}, {2, 6}, {0, 6}},
                                {"conv3x3", "maxpool3x3", "conv1x1", "conv1x1", "conv1x1"});
  CHECK(validate_cell(c, s).ok());
  CHECK(c.labels.front() == kNoOp);
  CHECK(c.labels.back() == kNoOp);
  CHECK(is_well_formed(c, s));
}

TEST_CASE("two-input concatenating cells") {
  const auto s = builtin_space("nb301_like");
  const auto c = make_edge_cell(s, {{0, 2, "sepconv3x3"}, {1, 2, "skip"}, {0, 3, "maxpool3x3"},
                                    {2, 3, "dilconv3x3"}, {1, 4, "skip"}, {3, 4, "sepconv5x5"},
                                    {0, 5, "avgpool3x3"}, {4, 5, "dilconv5x5"}});
  CHECK(validate_cell(c, s).ok());
  CellGraph into_out = c;
  into_out.edges[0] = {0, 6};
  CHECK_FALSE(validate_cell(into_out, s).ok());
}
