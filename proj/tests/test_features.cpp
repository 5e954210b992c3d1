#include "doctest.h"
#include "graf/features.hpp"
#include "oracles.hpp"

using namespace graf;

namespace {

CellGraph fig3_cell(const SearchSpaceSpec& s) {
  return make_edge_cell(s, {{0, 1, "conv3x3"}, {0, 2, "avgpool3x3"}, {0, 3, "skip"},
                            {1, 2, "skip"}, {1, 3, "conv3x3"}, {2, 3, "conv3x3"}});
}

double feat(const std::vector<double>& v, const FeatureSchema& schema, const std::string& name) {
  return v.at(schema.index_of(name));
}

}  // namespace

TEST_CASE("schema sizes") {
  CHECK(feature_schema(builtin_space("nb201_like")).size() == 191);
  CHECK(feature_schema(builtin_space("tnb_micro_like")).size() == 4 + 6 * 15);
  CHECK(feature_schema(builtin_space("tnb_macro")).size() == 16);
  CHECK(feature_schema(oracle::tiny_space(3, {"zero"})).size() == 7);
  // node-labeled, single input: 3 + 6*7
  CHECK(feature_schema(builtin_space("nb101_like")).size() == 45);
  // two cells, two inputs, no min path, no output in-degree: 2*(7 + 127*(2+2+1+1))
  CHECK(feature_schema(builtin_space("nb301_like")).size() == 1538);
}

TEST_CASE("schema names follow the grammar and are unique") {
  const auto s = builtin_space("nb201_like");
  const auto schema = feature_schema(s);
  CHECK(schema.features[0].name == "op_count(zero)");
  CHECK(schema.features[5].name == "min_path(zero)");
  CHECK_NOTHROW(schema.index_of("max_path(skip,conv3x3)"));
  CHECK_NOTHROW(schema.index_of("mean_out_degree(zero,skip,conv1x1,conv3x3,avgpool3x3)"));
  CHECK_THROWS_AS(schema.index_of("max_path(conv3x3,skip)"), Error);

  const auto nb301 = feature_schema(builtin_space("nb301_like"));
  CHECK_NOTHROW(nb301.index_of("max_path(skip)@reduce#input_1"));
  CHECK_NOTHROW(nb301.index_of("mean_in_degree(skip)@normal"));
  CHECK(nb301.to_json()["num_features"] == 1538);
}

TEST_CASE("extra feature plugins append columns") {
  const auto s = builtin_space("nb201_like");
  ExtraFeature e{"num_edges", [](std::span<const CellGraph> c, const SearchSpaceSpec&) {
                   return static_cast<double>(c[0].edges.size());
                 }};
  const auto schema = feature_schema(s, {e});
  CHECK(schema.size() == 192);
  const auto v = extract_micro(std::vector<CellGraph>{fig3_cell(s)}, s, schema);
  CHECK(v.back() == 6.0);
}

TEST_CASE("worked example cell") {
  const auto s = builtin_space("nb201_like");
  const auto c = fig3_cell(s);
  const OpMask cs = s.mask_of({"conv3x3", "skip"});
  CHECK(degree_features(c, s, cs).input_out_degree == 2);
  CHECK(max_path_over(c, s, cs) == 3);
  CHECK(max_path_over(c, s, s.mask_of({"skip"})) == 1);
  CHECK(min_path_over(c, s, s.mask_of({"skip"})) == 1);
  CHECK(min_path_over(c, s, s.mask_of({"avgpool3x3"})) == 5);
  CHECK(max_path_over(c, s, s.mask_of({"avgpool3x3"})) == 5);
  CHECK(degree_features(c, s, s.mask_of({"conv3x3"})).output_in_degree == 2);
  CHECK(min_path_over(c, s, s.full_mask()) == 1);

  const auto schema = feature_schema(s);
  const auto v = extract_micro(std::vector<CellGraph>{c}, s, schema);
  REQUIRE(v.size() == 191);
  CHECK(feat(v, schema, "op_count(conv3x3)") == 3);
  CHECK(feat(v, schema, "op_count(skip)") == 2);
  CHECK(feat(v, schema, "op_count(avgpool3x3)") == 1);
  CHECK(feat(v, schema, "op_count(zero)") == 0);
  CHECK(feat(v, schema, "op_count(conv1x1)") == 0);
}

TEST_CASE("all-zero cell") {
  const auto s = builtin_space("nb201_like");
  const auto schema = feature_schema(s);
  const auto c = cell_at(s, 0);
  const auto v = extract_micro(std::vector<CellGraph>{c}, s, schema);
  CHECK(feat(v, schema, "op_count(zero)") == 6);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema.features[i];
    if (f.family == FeatureFamily::kOpCount) continue;
    const bool has_zero = f.allowed & 1U;
    if (f.family == FeatureFamily::kMinPath || f.family == FeatureFamily::kMaxPath) {
      if (!has_zero) CHECK(v[i] == 5);
    } else if (!has_zero) {
      CHECK(v[i] == 0);
    }
  }
}

TEST_CASE("path DP equals path enumeration on every cell of a 4-node space") {
  const auto s = builtin_space("nb201_like");
  for_each_cell(s, false, [&](std::uint64_t, const CellGraph& c) {
    for (OpMask m = 1; m <= s.full_mask(); ++m) {
      REQUIRE(min_path_over(c, s, m) == oracle::min_path(c, s, m));
      REQUIRE(max_path_over(c, s, m) == oracle::max_path(c, s, m));
    }
  });
}

TEST_CASE("degrees equal the direct count oracle") {
  const auto s = builtin_space("nb201_like");
  Rng rng(3);
  for (int t = 0; t < 300; ++t) {
    const auto c = oracle::random_cell(s, rng);
    for (OpMask m = 1; m <= s.full_mask(); ++m) {
      const auto d = degree_features(c, s, m);
      const auto o = oracle::degrees(c, s, m);
      REQUIRE(d.input_out_degree == o.input_out);
      REQUIRE(d.output_in_degree == o.output_in);
      REQUIRE(d.mean_in_degree == doctest::Approx(o.mean_in));
      REQUIRE(d.mean_out_degree == doctest::Approx(o.mean_out));
    }
  }
}

TEST_CASE("path and degree properties") {
  const auto s = builtin_space("nb201_like");
  const int sentinel = path_sentinel(s);
  Rng rng(11);
  for (int t = 0; t < 300; ++t) {
    const auto c = oracle::random_cell(s, rng);
    for (OpMask a = 1; a <= s.full_mask(); ++a) {
      const int lo = min_path_over(c, s, a), hi = max_path_over(c, s, a);
      REQUIRE(lo <= hi);
      REQUIRE(((lo >= 1 && hi <= s.num_nodes - 1) || (lo == sentinel && hi == sentinel)));
      for (OpMask b = a; b <= s.full_mask(); b = (b + 1) | a) {
        const int lo2 = min_path_over(c, s, b), hi2 = max_path_over(c, s, b);
        if (hi2 != sentinel && hi != sentinel) {
          REQUIRE(lo2 <= lo);
          REQUIRE(hi2 >= hi);
        }
        if (hi != sentinel) REQUIRE(hi2 != sentinel);
        const auto da = degree_features(c, s, a), db = degree_features(c, s, b);
        REQUIRE(da.input_out_degree <= db.input_out_degree);
        REQUIRE(da.output_in_degree <= db.output_in_degree);
        REQUIRE(da.mean_in_degree <= db.mean_in_degree);
        REQUIRE(da.mean_out_degree <= db.mean_out_degree);
      }
    }
  }
}

TEST_CASE("extraction ignores edge-list order") {
  const auto s = builtin_space("nb201_like");
  const auto schema = feature_schema(s);
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    CellGraph c = oracle::random_cell(s, rng);
    CellGraph p = c;
    std::reverse(p.edges.begin(), p.edges.end());
    std::reverse(p.labels.begin(), p.labels.end());
    REQUIRE(extract_micro(std::vector<CellGraph>{c}, s, schema) ==
            extract_micro(std::vector<CellGraph>{p}, s, schema));
  }
}

TEST_CASE("node-labeled paths require every intermediate label") {
  const auto s = builtin_space("nb101_like");
  const auto c = make_node_cell(s, {{0, 1}, {1, 2}, {0, 2}, {2, 6}, {1, 6}},
                                {"conv3x3", "maxpool3x3", "conv1x1", "conv1x1", "conv1x1"});
  CHECK(max_path_over(c, s, s.mask_of({"conv3x3", "maxpool3x3"})) == 3);
  CHECK(min_path_over(c, s, s.mask_of({"conv3x3", "maxpool3x3"})) == 2);
  CHECK(min_path_over(c, s, s.mask_of({"conv3x3"})) == 2);
  CHECK(max_path_over(c, s, s.mask_of({"conv1x1"})) == path_sentinel(s));
  for (OpMask m = 1; m <= s.full_mask(); ++m) {
    CHECK(min_path_over(c, s, m) == oracle::min_path(c, s, m));
    CHECK(max_path_over(c, s, m) == oracle::max_path(c, s, m));
    const auto d = degree_features(c, s, m);
    const auto o = oracle::degrees(c, s, m);
    CHECK(d.input_out_degree == o.input_out);
    CHECK(d.mean_in_degree == doctest::Approx(o.mean_in));
  }
}

TEST_CASE("two-input cells anchor paths per input and concatenate into the output") {
  const auto s = builtin_space("nb301_like");
  const auto c = make_edge_cell(s, {{0, 2, "sepconv3x3"}, {1, 2, "skip"}, {0, 3, "maxpool3x3"},
                                    {2, 3, "dilconv3x3"}, {1, 4, "skip"}, {3, 4, "sepconv5x5"},
                                    {0, 5, "avgpool3x3"}, {4, 5, "dilconv5x5"}});
  for (int in = 0; in < 2; ++in)
    for (OpMask m = 1; m <= s.full_mask(); ++m) REQUIRE(max_path_over(c, s, m, in) == oracle::max_path(c, s, m, in));
  CHECK(max_path_over(c, s, s.full_mask(), 0) == 5);
  CHECK(max_path_over(c, s, s.mask_of({"skip"}), 1) == 2);
  const auto schema = feature_schema(s);
  const auto v = extract_graf(std::vector<CellGraph>{c, c}, s, schema);
  CHECK(v.size() == 1538);
  CHECK(feat(v, schema, "max_path(skip)@reduce#input_1") == 2);
  CHECK_THROWS_AS(extract_graf(std::vector<CellGraph>{c}, s, schema), Error);
}

TEST_CASE("macro features") {
  using M = ModuleKind;
  const auto v = extract_macro({{M::kNormal, M::kStrided, M::kStridedAndChannel, M::kNormal}});
  REQUIRE(v.size() == 16);
  CHECK(std::vector<double>(v.begin(), v.begin() + 6) == std::vector<double>{0, 1, 2, 2, 2, 2});
  CHECK(std::vector<double>(v.begin() + 6, v.begin() + 12) == std::vector<double>{0, 0, 1, 1, 1, 1});
  CHECK(std::vector<double>(v.begin() + 12, v.end()) == std::vector<double>{2, 1, 0, 1});

  const auto flat = extract_macro({std::vector<M>(4, M::kNormal)});
  for (int i = 0; i < 12; ++i) CHECK(flat[i] == 0);
  CHECK(flat[12] == 4);

  const auto six = extract_macro({{M::kChannelIncrease, M::kNormal, M::kNormal, M::kNormal, M::kNormal, M::kStrided}});
  CHECK(six[0] == 0);
  CHECK(six[5] == 1);
  CHECK(six[6] == 1);
}

TEST_CASE("parallel batch extraction equals the serial reference") {
  const auto s = builtin_space("nb201_like");
  const auto schema = feature_schema(s);
  std::vector<Architecture> archs;
  for (const auto& c : enumerate_cells(s, true)) archs.push_back(std::vector<CellGraph>{c});
  archs.resize(2000);
  const auto par = extract_graf_batch(archs, s, schema, Exec::kParallel);
  const auto ser = extract_graf_batch(archs, s, schema, Exec::kSerial);
  CHECK(par == ser);
  for (std::size_t r = 0; r < 20; ++r) {
    const auto row = extract_graf(archs[r], s, schema);
    REQUIRE(std::equal(row.begin(), row.end(), par.row(r).begin()));
  }
}
