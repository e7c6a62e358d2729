#include <algorithm>
#include <numeric>

#include "aa/featurize.h"
#include "aa/rng.h"
#include "doctest.h"
#include "featurize_oracle.h"
#include "excerpt.h"
#include "test_util.h"

using namespace aa;

namespace {

using Tokens = std::vector<std::string>;

RelationLabel rel(const char* s) { return RelationLabel::parse(s); }

EntityGrid excerpt_grid() { return build_gr_grid(test::excerpt_annotation()); }

RstGrid rst(size_t rows, size_t cols,
            std::initializer_list<std::tuple<size_t, size_t, std::vector<const char*>>> cells) {
  RstGrid g;
  g.n_sentences = rows;
  for (size_t c = 0; c < cols; ++c) g.entity_ids.push_back("e" + std::to_string(c + 1));
  g.cells.assign(rows, std::vector<std::vector<RelationLabel>>(cols));
  for (const auto& [r, c, labels] : cells) {
    for (const char* l : labels) g.cells[r][c].push_back(rel(l));
  }
  return g;
}

Vocab vocab_of(const Tokens& tokens) { return build_vocab({DiscourseSequence{tokens}}); }

}  // namespace

TEST_CASE("transition PV of the excerpt") {
  const ProbabilityVector pv = gr_transition_pv(excerpt_grid());
  REQUIRE(pv.size() == 16);
  CHECK(pv.labels == Tokens(gr_transition_labels().begin(), gr_transition_labels().end()));
  for (const auto& label : pv.labels) {
    const bool hit = label == "ss" || label == "so" || label == "ox" || label == "-s";
    CHECK(pv.at(label) == doctest::Approx(hit ? 0.25 : 0.0));
  }
}

TEST_CASE("transition PV small cases") {
  CHECK(gr_transition_pv(oracle::to_grid({"sss"}, 3)).at("ss") == 1.0);
  const auto pv = gr_transition_pv(oracle::to_grid({"s-", "-o"}, 2));
  CHECK(pv.at("s-") == 0.5);
  CHECK(pv.at("-o") == 0.5);
  CHECK(pv.at("ss") == 0.0);
  CHECK(test::error_kind_of([] { gr_transition_pv(oracle::to_grid({}, 3)); }) ==
        ErrorKind::kInsufficientContext);
  CHECK(test::error_kind_of([] { gr_transition_pv(oracle::to_grid({"s"}, 1)); }) ==
        ErrorKind::kInsufficientContext);
}

TEST_CASE("GR readings of the excerpt") {
  CHECK(gr_de_local(excerpt_grid()).tokens == Tokens{"so", "ox", "ss"});
  CHECK(gr_de_global(excerpt_grid()).tokens == Tokens{"so", "ox", "SEP", "ss"});
}

TEST_CASE("GR reading edge cases") {
  CHECK(gr_de_local(EntityGrid{}).tokens.empty());
  CHECK(gr_de_global(EntityGrid{}).tokens.empty());
  CHECK(gr_de_local(oracle::to_grid({"so"}, 2)).tokens == Tokens{"so"});
  CHECK(gr_de_global(oracle::to_grid({"s-o"}, 3)).tokens == Tokens{"so"});
  CHECK(gr_de_local(oracle::to_grid({"s-o"}, 3)).tokens.empty());
  // A lone role adds nothing and no separator.
  CHECK(gr_de_global(oracle::to_grid({"-s-", "oo-", "--x", "sx-"}, 3)).tokens ==
        Tokens{"oo", "SEP", "sx"});
  CHECK(gr_de_global(oracle::to_grid({"s-o", "oo-"}, 3), GapMode::kAdjacentOnly).tokens ==
        Tokens{"oo"});
  CHECK(gr_de_global(oracle::to_grid({"so-x", "xxx-"}, 4), GapMode::kAdjacentOnly).tokens ==
        Tokens{"so", "SEP", "xx", "xx"});
}

TEST_CASE("GR readings never start a token with an absent role") {
  oracle::for_each_grid(oracle::columns_with(3, 0), 2, [](const oracle::Columns& cols) {
    const EntityGrid g = oracle::to_grid(cols, 3);
    for (const auto& seq : {gr_de_local(g), gr_de_global(g)}) {
      for (const auto& t : seq.tokens) CHECK((t == "SEP" || t[0] != '-'));
    }
    for (const auto& t : gr_de_local(g).tokens) {
      CHECK(t[1] != '-');
      CHECK(gr_transition_pv(g).at(t) > 0);
    }
  });
}

TEST_CASE("featurizers agree with the reference on every small grid") {
  size_t grids = 0;
  for (size_t rows = 1; rows <= 3; ++rows) {
    for (size_t n_cols = 1; n_cols <= 2; ++n_cols) {
      oracle::for_each_grid(oracle::columns_with(rows, 0), n_cols, [&](const oracle::Columns& c) {
        ++grids;
        const std::string why = oracle::disagreement(c, rows);
        if (!why.empty()) FAIL_CHECK(why);
      });
    }
  }
  CHECK(grids == 4 + 16 + 16 + 256 + 64 + 4096);
}

TEST_CASE("RST PV") {
  const RstGrid g = rst(3, 1, {{0, 0, {"a.N"}}, {1, 0, {"a.N"}}, {2, 0, {"b.S"}}});
  const ProbabilityVector pv = rst_pv(g, vocab_of({"a.N", "b.S"}));
  CHECK(pv.labels == Tokens{"<unk>", "a.N", "b.S"});
  CHECK(pv.at("a.N") == doctest::Approx(2.0 / 3));
  CHECK(pv.at("b.S") == doctest::Approx(1.0 / 3));
  CHECK(pv.at("<unk>") == 0.0);

  const auto unk = rst_pv(rst(2, 1, {{0, 0, {"a.N"}}, {1, 0, {"c.S"}}}), vocab_of({"a.N", "b.S"}));
  CHECK(unk.at("a.N") == 0.5);
  CHECK(unk.at("<unk>") == 0.5);
  CHECK(unk.at("b.S") == 0.0);
  CHECK(std::accumulate(unk.probs.begin(), unk.probs.end(), 0.0) == doctest::Approx(1.0));

  CHECK(test::error_kind_of([] { rst_pv(rst(2, 2, {}), Vocab{}); }) ==
        ErrorKind::kInsufficientContext);
}

TEST_CASE("RST readings") {
  const RstGrid g = rst(2, 2, {{0, 0, {"a.N"}}, {1, 0, {"b.S"}}, {1, 1, {"c.N"}}});
  CHECK(rst_de_local(g).tokens == Tokens{"a.N", "b.S", "c.N"});
  CHECK(rst_de_global(g).tokens == Tokens{"a.N", "b.S", "SEP", "c.N"});

  const RstGrid one = rst(1, 1, {{0, 0, {"a.N", "b.S"}}});
  CHECK(rst_de_local(one).tokens == Tokens{"a.N", "b.S"});
  CHECK(rst_de_global(one).tokens == rst_de_local(one).tokens);

  CHECK(rst_de_local(rst(3, 2, {})).tokens.empty());
  CHECK(rst_de_global(rst(3, 2, {})).tokens.empty());
  CHECK(rst_de_global(RstGrid{}).tokens.empty());
}

TEST_CASE("RST readings visit the same cells") {
  Rng rng(11);
  const std::vector<const char*> labels = {"a.N", "b.S", "c.N", "d.S"};
  for (int trial = 0; trial < 100; ++trial) {
    const size_t rows = 1 + rng.below(5), cols = 1 + rng.below(4);
    RstGrid g = rst(rows, cols, {});
    for (auto& row : g.cells) {
      for (auto& cell : row) {
        const size_t n = rng.below(3);
        for (size_t i = 0; i < n; ++i) cell.push_back(rel(labels[rng.below(labels.size())]));
      }
    }
    auto local = rst_de_local(g).tokens;
    auto global = rst_de_global(g).tokens;
    global.erase(std::remove(global.begin(), global.end(), "SEP"), global.end());
    std::sort(local.begin(), local.end());
    std::sort(global.begin(), global.end());
    CHECK(local == global);
  }
}

TEST_CASE("EDU-order reading") {
  AnnotationRecord ann{"d", 1, {}, {}, {}, {}};
  CHECK(test::error_kind_of([&] { rst_de_edu_order(ann); }) == ErrorKind::kMissingEduSequence);
  ann.edu_sequence = std::vector<RelationLabel>{};
  CHECK(rst_de_edu_order(ann).tokens.empty());
  ann.edu_sequence = std::vector<RelationLabel>{rel("a.N"), rel("b.S"), rel("c.N")};
  CHECK(rst_de_edu_order(ann).tokens == Tokens{"a.N", "b.S", "c.N"});
}

TEST_CASE("vocabulary construction") {
  const std::vector<DiscourseSequence> seqs = {{{"so", "so", "ox"}}};
  const Vocab v = build_vocab(seqs);
  CHECK(v.tokens() == Tokens{"<pad>", "<unk>", "so", "ox"});
  CHECK(v.index("so") == 2);
  CHECK(v.index("never") == kUnkIndex);

  const Vocab strict = build_vocab(seqs, 2);
  CHECK(strict.size() == 3);
  CHECK(strict.index("ox") == kUnkIndex);

  CHECK(build_vocab({}).tokens() == Tokens{"<pad>", "<unk>"});

  // Ties resolve lexicographically; order of input is irrelevant.
  const Vocab a = build_vocab({{{"b", "a", "c", "c"}}});
  const Vocab b = build_vocab({{{"c", "a"}}, {{"c", "b"}}});
  CHECK(a.tokens() == Tokens{"<pad>", "<unk>", "c", "a", "b"});
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != strict.hash());
  CHECK(a.encode({"a", "zzz", "c"}) == std::vector<int>{3, 1, 2});
}
