#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "pvmincq/bounds.hpp"
#include "pvmincq/pv.hpp"
#include "pvmincq/selection.hpp"
#include "pvmincq/transfer.hpp"

using namespace pvmincq;

namespace {

struct Domains {
  LabeledSample source;
  LabeledSample target;
};

Domains moons_pair(std::uint64_t seed, double angle, std::size_t n = 30) {
  return {generate_moons({.n_per_class = n, .noise_std = 0.1, .rotation_deg = 0, .seed = seed}),
          generate_moons({.n_per_class = n, .noise_std = 0.1, .rotation_deg = angle, .seed = seed + 1000})};
}

HyperGrid grid(std::vector<double> gammas, std::vector<double> mus, std::vector<double> epsilons, std::size_t k = 3) {
  HyperGrid g;
  g.gammas = std::move(gammas);
  g.mus = std::move(mus);
  g.epsilons = std::move(epsilons);
  g.k_folds = k;
  return g;
}

}  // namespace

TEST_CASE("folds partition the indices in balanced parts") {
  const auto folds = make_folds(23, 5, 7);
  REQUIRE(folds.size() == 5);
  std::set<std::size_t> all;
  for (const auto& fold : folds) {
    CHECK((fold.size() == 4 || fold.size() == 5));
    all.insert(fold.begin(), fold.end());
  }
  CHECK(all.size() == 23);
  CHECK(*all.rbegin() == 22);
  CHECK(make_folds(23, 5, 7) == folds);
  CHECK(make_folds(23, 5, 8) != folds);
  CHECK_THROWS_AS(make_folds(3, 5, 0), std::invalid_argument);
}

TEST_CASE("grid validation") {
  CHECK_NOTHROW(HyperGrid{}.validate());
  CHECK_THROWS_AS(grid({}, {0.1}, {0.1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(grid({1}, {-0.1}, {0.1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(grid({1}, {0.1}, {0.1}, 1).validate(), std::invalid_argument);
}

TEST_CASE("single feasible cell is returned") {
  const auto d = moons_pair(1, 20);
  const auto r = select(d.source, d.target.points, grid({1.0}, {0.01}, {0.5}), 3);
  CHECK(r.table.size() == 1);
  CHECK(r.gamma == 1.0);
  CHECK(r.mu == 0.01);
  CHECK(r.epsilon == 0.5);
  CHECK(r.score == r.table[0].score);
}

TEST_CASE("a cell whose epsilon matches nothing is skipped") {
  const auto d = moons_pair(2, 20);
  const auto r = select(d.source, d.target.points, grid({1.0}, {0.01}, {1e-9, 0.5}), 3);
  REQUIRE(r.table.size() == 2);
  CHECK(r.table[0].skipped);
  CHECK(r.table[0].cause.find("epsilon too small") != std::string::npos);
  CHECK_FALSE(r.table[1].skipped);
  CHECK(r.epsilon == 0.5);
}

TEST_CASE("all cells skipped raises a selection error listing causes") {
  const auto d = moons_pair(3, 20);
  try {
    select(d.source, d.target.points, grid({1.0}, {0.01, 0.02}, {1e-9}), 3);
    FAIL("expected selection_error");
  } catch (const selection_error& e) {
    const std::string what = e.what();
    CHECK(what.find("mu=0.01") != std::string::npos);
    CHECK(what.find("mu=0.02") != std::string::npos);
    CHECK(what.find("epsilon too small") != std::string::npos);
  }
}

TEST_CASE("argmin matches an independent re-evaluation of every cell") {
  const auto d = moons_pair(4, 30, 25);
  const auto g = grid({0.5, 2.0}, {1e-3, 0.05}, {0.25, 0.5}, 4);
  const std::uint64_t seed = 11;
  const auto r = select(d.source, d.target.points, g, seed);
  REQUIRE(r.table.size() == 8);

  const auto folds = make_folds(d.source.size(), g.k_folds, seed);
  double best = 1e300;
  std::tuple<double, double, double> best_cell;
  std::size_t row = 0;
  for (double gamma : g.gammas)
    for (double mu : g.mus)
      for (double eps : g.epsilons) {
        double risk = 0.0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
          std::vector<std::size_t> train;
          for (std::size_t h = 0; h < folds.size(); ++h)
            if (h != f) train.insert(train.end(), folds[h].begin(), folds[h].end());
          std::sort(train.begin(), train.end());
          const auto transferred = pv_transfer(d.source.subset(train), d.target.points, eps);
          const auto model = train_mincq(transferred.sample, gamma, mu);
          risk += bayes_risk(model.vote, d.source.subset(folds[f]));
        }
        const double score = risk / static_cast<double>(folds.size()) + pv_estimate(d.source.points, d.target.points, eps);
        const auto& cell = r.table[row++];
        CHECK(cell.gamma == gamma);
        CHECK(cell.mu == mu);
        CHECK(cell.epsilon == eps);
        CHECK_FALSE(cell.skipped);
        CHECK(cell.score == doctest::Approx(score).epsilon(1e-12));
        if (score < best - 1e-12) {
          best = score;
          best_cell = {gamma, mu, eps};
        }
      }
  CHECK(r.score == doctest::Approx(best).epsilon(1e-12));
  CHECK(std::get<0>(best_cell) == r.gamma);
  CHECK(std::get<1>(best_cell) == r.mu);
  CHECK(std::get<2>(best_cell) == r.epsilon);
}

TEST_CASE("score ties go to the smaller epsilon") {
  // Both radii exceed every distance, so the two cells are identical.
  const auto d = moons_pair(5, 10, 10);
  const auto r = select(d.source, d.target.points, grid({1.0}, {0.01}, {20.0, 10.0}), 3);
  CHECK(r.table[0].score == r.table[1].score);
  CHECK(r.epsilon == 10.0);
}

TEST_CASE("selection is deterministic for a seed") {
  const auto d = moons_pair(6, 40);
  const auto g = grid({0.5, 2.0}, {1e-3, 0.05}, {0.25, 0.5});
  const auto a = select(d.source, d.target.points, g, 3);
  const auto b = select(d.source, d.target.points, g, 3);
  REQUIRE(a.table.size() == b.table.size());
  for (std::size_t i = 0; i < a.table.size(); ++i) CHECK(a.table[i].score == b.table[i].score);
  CHECK(a.gamma == b.gamma);
  CHECK(a.mu == b.mu);
  CHECK(a.epsilon == b.epsilon);
}

TEST_CASE("pv term does not depend on the fold") {
  const auto d = moons_pair(7, 30);
  const auto r = select(d.source, d.target.points, grid({0.5, 2.0}, {1e-3, 0.05}, {0.25, 0.5}), 3);
  for (const auto& cell : r.table)
    CHECK(cell.pv.value() == pv_estimate(d.source.points, d.target.points, *cell.epsilon));
}

TEST_CASE("baseline selection uses source risk only") {
  const auto d = moons_pair(8, 30);
  const auto g = grid({0.5, 2.0}, {1e-3, 0.05}, {0.25});
  for (Method method : {Method::nn_mincq, Method::mincq_no_adapt}) {
    const auto r = select_baseline(d.source, d.target.points, g, method, 1, 3);
    REQUIRE(r.table.size() == 4);
    double best = 1e300;
    for (const auto& cell : r.table) {
      CHECK_FALSE(cell.epsilon.has_value());
      CHECK_FALSE(cell.pv.has_value());
      CHECK(cell.score == cell.source_risk);
      best = std::min(best, cell.score);
    }
    CHECK(r.score == best);
    CHECK_FALSE(r.epsilon.has_value());
  }
  CHECK_THROWS_AS(select_baseline(d.source, d.target.points, g, Method::pv_mincq, 1, 3), std::invalid_argument);
}

TEST_CASE("method names") {
  for (Method m : {Method::pv_mincq, Method::nn_mincq, Method::mincq_no_adapt}) CHECK(parse_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_method("svm"), std::invalid_argument);
}

TEST_CASE("selection CSV") {
  const auto d = moons_pair(9, 20);
  const auto r = select(d.source, d.target.points, grid({1.0}, {0.01}, {1e-9, 0.5}), 3);
  const auto path = std::filesystem::temp_directory_path() / "pvmincq_selection.csv";
  write_selection_csv(r, path);
  std::ifstream in(path);
  std::string header, skipped, kept;
  std::getline(in, header);
  std::getline(in, skipped);
  std::getline(in, kept);
  CHECK(header == "gamma,mu,epsilon,source_risk,pv,score,skipped");
  CHECK(skipped.rfind("1,0.01,1e-09,,", 0) == 0);
  CHECK(skipped.back() == '1');
  CHECK(kept.back() == '0');
}
