#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "support.hpp"
#include "varlm/errors.hpp"
#include "varlm/fixtures.hpp"
#include "varlm/nlm.hpp"
#include "varlm/rng.hpp"

using namespace varlm;

namespace {

ModelDims small_dims() {
  return {.vocab = 9, .embed = 6, .hidden = 5, .author_dim = 3, .family_dim = 2,
          .kind_dim = 2, .authors = 3, .families = 4, .kinds = 3};
}

ModelParams<double> random_params(std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  return ModelParams<double>::initialized(small_dims(), scale, rng);
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.embed_dim = 8;
  c.hidden_dim = 16;
  c.author_dim = 4;
  c.family_dim = 4;
  c.kind_dim = 4;
  c.batch_size = 8;
  c.max_epochs = 3;
  c.seed = 5;
  return c;
}

const std::vector<TokenId> kTokens = {5, 6, 7, 5, 8, 2, 6, 0};

}  // namespace

TEST_CASE("analytic gradients agree with finite differences") {
  const auto report = grad_check({}, 1e-4);
  CAPTURE(report.worst_tensor);
  CAPTURE(report.worst_index);
  CHECK(report.checked > 0);
  CHECK(report.max_relative_error < 1e-4);
  CHECK(report.passed);
}

TEST_CASE("gradient check notices a sign flip") {
  const auto report = grad_check({}, 1e-4, [](ModelParams<double>& g) { g.projection(0, 0) = -g.projection(0, 0); });
  CHECK_FALSE(report.passed);
  CHECK(report.worst_tensor == "projection");
  CHECK(report.worst_index == 0);
  CHECK(grad_check({}, 1e9).passed);
}

TEST_CASE("tied embedding gradient is the sum of its input and output roles") {
  const auto p = random_params(3);
  const ConditioningIds cond{1, 2, 1};

  auto tied = ModelParams<double>::zeros(p.dims);
  SegmentPass<double> a(p, kTokens, cond);
  a.backward(tied);

  const Matrix<double> out_copy = p.embedding;
  auto split = ModelParams<double>::zeros(p.dims);
  Matrix<double> out_grad = Matrix<double>::Zero(p.dims.vocab, p.dims.embed);
  SegmentPass<double> b(p, kTokens, cond, &out_copy);
  b.backward(split, 1.0, &out_grad);

  CHECK((a.probabilities() - b.probabilities()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(out_grad.cwiseAbs().maxCoeff() > 0.0);
  CHECK(split.embedding.cwiseAbs().maxCoeff() > 0.0);
  CHECK((tied.embedding - (split.embedding + out_grad)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("untouched conditioning rows receive exactly zero gradient") {
  const auto p = random_params(4);
  auto g = ModelParams<double>::zeros(p.dims);
  SegmentPass<double> pass(p, kTokens, {1, 2, 1});
  pass.backward(g);
  CHECK(g.author_table.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.author_table.row(2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.author_table.row(1).cwiseAbs().maxCoeff() > 0.0);
  CHECK(g.family_table.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.family_table.row(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.kind_table.row(2).cwiseAbs().maxCoeff() == 0.0);
  // token 1 and 3 never appear as inputs; their rows only see the output role
  auto untied = ModelParams<double>::zeros(p.dims);
  const Matrix<double> out_copy = p.embedding;
  Matrix<double> out_grad = Matrix<double>::Zero(p.dims.vocab, p.dims.embed);
  SegmentPass<double> sep(p, kTokens, {1, 2, 1}, &out_copy);
  sep.backward(untied, 1.0, &out_grad);
  CHECK(untied.embedding.row(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(untied.embedding.row(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward is single use") {
  const auto p = random_params(5);
  auto g = ModelParams<double>::zeros(p.dims);
  SegmentPass<double> pass(p, kTokens, {});
  pass.backward(g);
  CHECK_THROWS_AS(pass.backward(g), std::logic_error);
}

TEST_CASE("forward pass rejects bad inputs") {
  const auto p = random_params(6);
  CHECK_THROWS_AS(SegmentPass<double>(p, std::vector<TokenId>{5}, {}), ShapeError);
  CHECK_THROWS_AS(SegmentPass<double>(p, std::vector<TokenId>{5, 9}, {}), ShapeError);
  CHECK_THROWS_AS(SegmentPass<double>(p, kTokens, {3, 0, 0}), ShapeError);
}

TEST_CASE("output columns are distributions") {
  const auto p = random_params(7, 2.0);
  SegmentPass<double> pass(p, kTokens, {2, 3, 2});
  const auto& probs = pass.probabilities();
  CHECK(probs.rows() == 9);
  CHECK(probs.cols() == static_cast<Eigen::Index>(kTokens.size() - 1));
  for (Eigen::Index t = 0; t < probs.cols(); ++t) {
    CHECK(probs.col(t).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(probs.col(t).minCoeff() > 0.0);
  }
}

TEST_CASE("log_prob matches prefix-by-prefix rescoring") {
  const auto p = random_params(8);
  const ConditioningIds cond{2, 1, 2};
  SegmentPass<double> whole(p, kTokens, cond);
  double sum = 0.0;
  for (std::size_t t = 1; t < kTokens.size(); ++t) {
    const std::vector<TokenId> prefix(kTokens.begin(), kTokens.begin() + static_cast<std::ptrdiff_t>(t + 1));
    SegmentPass<double> part(p, prefix, cond);
    const auto last = part.probabilities().col(part.length() - 1);
    CHECK(last.isApprox(whole.probabilities().col(static_cast<Eigen::Index>(t - 1)), 1e-12));
    sum += std::log(last(kTokens[t]));
  }
  CHECK(whole.log_prob() == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("metadata changes the predictions") {
  const auto p = random_params(9);
  SegmentPass<double> a(p, kTokens, {1, 1, 1});
  SegmentPass<double> b(p, kTokens, {1, 2, 1});
  SegmentPass<double> c(p, kTokens, {1, 1, 2});
  CHECK((a.probabilities() - b.probabilities()).cwiseAbs().maxCoeff() > 1e-6);
  CHECK((a.probabilities() - c.probabilities()).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("one embedding row drives both input and output") {
  const auto p = random_params(10);
  const std::vector<TokenId> tokens = {6, 4, 7};
  SegmentPass<double> before(p, tokens, {});
  auto q = p;
  q.embedding.row(4).array() += 0.3;
  SegmentPass<double> after(q, tokens, {});
  // position 0 reads token 6, so only the logit of token 4 can move
  const Eigen::VectorXd d0 = after.probabilities().col(0) - before.probabilities().col(0);
  CHECK(std::abs(d0(4)) > 1e-6);
  // position 1 reads token 4, so the recurrent state moves too
  CHECK((after.final_hidden() - before.final_hidden()).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("zero parameters give uniform predictions and perplexity |V|") {
  const auto docs = make_alternating_fixture(400, 4).documents;
  auto model = make_model(docs, tiny_config());
  model.params().set_zero();
  const double v = static_cast<double>(model.vocab_size());
  CHECK(perplexity_on(model, docs) == doctest::Approx(v).epsilon(1e-6));

  const auto fresh = make_model(docs, tiny_config());
  CHECK(std::abs(perplexity_on(fresh, docs) - v) / v < 0.01);
}

TEST_CASE("training is deterministic and keeps the best parameters") {
  const auto docs = make_alternating_fixture(4000, 20).documents;
  const std::vector<Document> tr(docs.begin(), docs.begin() + 16), ho(docs.begin() + 16, docs.end());
  const auto cfg = tiny_config();

  std::vector<TrainLogEntry> observed;
  const auto r1 = train(tr, ho, cfg, [&](const TrainLogEntry& e) { observed.push_back(e); });
  const auto r2 = train(tr, ho, cfg);

  std::ostringstream l1, l2;
  write_train_log(l1, r1.log);
  write_train_log(l2, r2.log);
  CHECK(l1.str() == l2.str());
  CHECK(observed.size() == r1.log.size());

  REQUIRE(r1.log.size() >= 2);
  CHECK(r1.log.front().step == 0);
  CHECK(std::isnan(r1.log.front().train_loss));
  double min_ppl = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r1.log.size(); ++i) {
    min_ppl = std::min(min_ppl, r1.log[i].heldout_ppl);
    CHECK(r1.log[i].best_so_far == min_ppl);
    if (i > 0) {
      CHECK(r1.log[i].best_so_far <= r1.log[i - 1].best_so_far);
      CHECK(r1.log[i].step > r1.log[i - 1].step);
    }
  }
  CHECK(r1.best_heldout_ppl == min_ppl);
  CHECK(perplexity_on(r1.model, ho) == doctest::Approx(r1.best_heldout_ppl).epsilon(1e-9));

  const double v = static_cast<double>(r1.model.vocab_size());
  CHECK(r1.best_heldout_ppl < v);
  CHECK(r1.best_heldout_ppl < r1.log.front().heldout_ppl);

  auto other = cfg;
  other.seed = 6;
  const auto r3 = train(tr, ho, other);
  CHECK(r3.log.back().heldout_ppl != r1.log.back().heldout_ppl);
}

TEST_CASE("train log lines carry every field") {
  std::ostringstream out;
  write_train_log(out, {{.step = 0, .epoch = 0, .heldout_ppl = 7.0, .best_so_far = 7.0},
                        {.step = 4, .epoch = 1, .train_loss = 1.5, .heldout_ppl = 5.0, .best_so_far = 5.0}});
  std::istringstream in(out.str());
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    for (const char* key : {"\"step\"", "\"epoch\"", "\"train_loss\"", "\"heldout_ppl\"", "\"best_so_far\""})
      CHECK(line.find(key) != std::string::npos);
  }
  CHECK(lines == 2);
}

TEST_CASE("bad splits and diverging runs are reported") {
  const auto docs = make_alternating_fixture(800, 4).documents;
  CHECK_THROWS_AS(train({}, docs, tiny_config()), ValidationError);
  CHECK_THROWS_AS(train(docs, {}, tiny_config()), ValidationError);
  auto bad = tiny_config();
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(docs, docs, bad), ValidationError);

  auto wild = tiny_config();
  wild.adam.learning_rate = 1e30;
  CHECK_THROWS_AS(train(docs, docs, wild), NumericError);
}

TEST_CASE("checkpoint round trip is exact") {
  testing::TempDir dir("nlm_checkpoint");
  const auto corpus = testing::fixture_corpus();
  const auto model = make_model(corpus.documents(), tiny_config());
  save_checkpoint(model, dir / "model.json");
  CHECK(std::filesystem::exists(dir / "model.bin"));

  const auto back = load_checkpoint(dir / "model.json");
  CHECK(back.vocab().tokens() == model.vocab().tokens());
  CHECK(back.tables().authors() == model.tables().authors());
  CHECK(back.tables().families() == model.tables().families());
  CHECK(back.params().dims == model.params().dims);
  const auto a = model.params().tensors();
  const auto b = back.params().tensors();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::equal(a[i].begin(), a[i].end(), b[i].begin(), b[i].end()));
  CHECK(perplexity_on(back, corpus.documents()) == perplexity_on(model, corpus.documents()));

  CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), IoError);

  {
    std::fstream blob(dir / "model.bin", std::ios::in | std::ios::out | std::ios::binary);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    blob.write(reinterpret_cast<const char*>(&nan), sizeof nan);
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "model.json"), NumericError);

  std::filesystem::resize_file(dir / "model.bin", 8);
  CHECK_THROWS_AS(load_checkpoint(dir / "model.json"), ValidationError);
}

TEST_CASE("document states") {
  const auto corpus = testing::fixture_corpus();
  const auto model = make_model(corpus.documents(), tiny_config());
  const auto groups = group_by_period(corpus, testing::fixture_mapping());
  std::vector<std::string> warnings;
  const auto states = extract_states(model, groups, &warnings);
  CHECK(states.size() == corpus.size());
  CHECK(warnings.empty());
  for (const auto& s : states) CHECK(s.state.size() == 16);
  CHECK(states.front().group == "XIII");

  auto twin = corpus[2];
  twin.title = "another title";
  const auto s1 = model.document_state(corpus[2]);
  const auto s2 = model.document_state(twin);
  REQUIRE(s1);
  REQUIRE(s2);
  CHECK(*s1 == *s2);
  CHECK(*s1 != *model.document_state(corpus[3]));
  CHECK_FALSE(model.document_state(testing::make_doc("X", Kind::prose, "")));
}
