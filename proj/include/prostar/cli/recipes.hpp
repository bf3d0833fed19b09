#pragma once

#include <stdexcept>

#include "prostar/cli/scenario.hpp"

namespace prostar::cli {

class UnknownRecipe : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> n = {"trivial-group", "z2-swap-crossed", "s3-group-algebra", "random-covariant-cp",
                                             "tower-chain"};
  return n;
}

namespace detail {

inline Json values_literal(const CompletelyPositiveMap& rho) {
  Json vs = Json::array();
  for (const auto& v : rho.basis_values()) vs.push_back(matrix_to_json(v.flat()));
  return vs;
}

inline Json header(const std::string& description, std::uint64_t seed) {
  Json j;
  j["schema"] = kScenarioSchema;
  j["description"] = description;
  j["seed"] = seed;
  return j;
}

}  // namespace detail

// Scenario documents for the shipped worked examples; deterministic in the seed.
inline Json generate_example(const std::string& recipe, std::uint64_t seed) {
  using detail::matrix_to_json;
  Rng rng(seed);
  if (recipe == "trivial-group") {
    Json j = detail::header("Trivial group: the extension to A x| G = A must give back rho.", seed);
    j["algebras"] = {{"A", Json::array({2})}, {"B", Json::array({1})}};
    j["groups"] = {{"G", "trivial"}};
    j["actions"] = {{"alpha", {{"group", "G"}, {"algebra", "A"}, {"type", "trivial"}}}};
    j["modules"] = {{"E", {{"algebra", "B"}, {"rank", 2}}}};
    j["representations"] = {{"u", {{"group", "G"}, {"module", "E"}, {"type", "trivial"}}}};
    const auto rho = random_unital_cp(rng, FiniteCStarAlgebra::full(2), HilbertModule(FiniteCStarAlgebra::full(1), 2), 1);
    j["cp_maps"] = {{"rho", {{"source", "A"}, {"module", "E"}, {"type", "values"}, {"values", detail::values_literal(rho)}}}};
    j["tasks"] = Json::array({{{"name", "dilation"}, {"type", "dilate"}, {"cp", "rho"}, {"action", "alpha"}, {"representation", "u"}},
                              {{"name", "phi-equals-rho"}, {"type", "extend"}, {"cp", "rho"}, {"action", "alpha"}, {"representation", "u"}}});
    return j;
  }
  if (recipe == "z2-swap-crossed") {
    Json j = detail::header("Z2 acting on C + C by swapping the summands; the crossed product is M2.", seed);
    j["algebras"] = {{"C", Json::array({1})}, {"CC", Json::array({1, 1})}};
    j["groups"] = {{"Z2", "Z2"}};
    j["actions"] = {{"swap", {{"group", "Z2"}, {"algebra", "CC"}, {"type", "block-permutation"}, {"permutations", {{0, 1}, {1, 0}}}}},
                    {"trivial", {{"group", "Z2"}, {"algebra", "C"}, {"type", "trivial"}}}};
    j["tasks"] = Json::array({{{"name", "swap-crossed-product"}, {"type", "crossed-product"}, {"action", "swap"}, {"expect_blocks", Json::array({2})}},
                              {{"name", "group-algebra-z2"}, {"type", "crossed-product"}, {"action", "trivial"}, {"expect_blocks", {1, 1}}}});
    return j;
  }
  if (recipe == "s3-group-algebra") {
    Json j = detail::header("Group algebra of S3 as C x| S3 with the trivial action.", seed);
    j["algebras"] = {{"C", Json::array({1})}};
    j["groups"] = {{"S3", "S3"}};
    j["actions"] = {{"trivial", {{"group", "S3"}, {"algebra", "C"}, {"type", "trivial"}}}};
    j["tasks"] = Json::array({{{"name", "group-algebra-s3"}, {"type", "crossed-product"}, {"action", "trivial"}, {"expect_blocks", {1, 1, 2}}}});
    return j;
  }
  if (recipe == "random-covariant-cp") {
    Json j = detail::header("Z2 acting on M2 by a seeded inner action; rho is a group average of a random unital CP map.", seed);
    const FiniteCStarAlgebra A = FiniteCStarAlgebra::full(2), B = FiniteCStarAlgebra::full(1);
    const HilbertModule E(B, 2);
    const FiniteGroup G = FiniteGroup::cyclic(2);
    const ComplexMatrix w = random_unitary_matrix(rng, 2);
    ComplexMatrix flip = ComplexMatrix::Identity(2, 2);
    flip(1, 1) = -1.0;
    const MatrixRepresentation ua = {ComplexMatrix::Identity(2, 2), w * flip * w.adjoint()};
    const ComplexMatrix wu = random_unitary_matrix(rng, 2);
    const MatrixRepresentation ru = {ComplexMatrix::Identity(2, 2), flip};
    const auto alpha = GroupAction::inner(G, A, ua);
    const auto u = UnitaryRepresentation::from_matrices(G, E, ru, wu);
    const auto rho = covariant_average(random_unital_cp(rng, A, E, 2), alpha, u);
    j["algebras"] = {{"A", Json::array({2})}, {"B", Json::array({1})}};
    j["groups"] = {{"Z2", "Z2"}};
    j["actions"] = {{"alpha", {{"group", "Z2"}, {"algebra", "A"}, {"type", "inner"},
                               {"unitaries", {matrix_to_json(ua[0]), matrix_to_json(ua[1])}}}}};
    j["modules"] = {{"E", {{"algebra", "B"}, {"rank", 2}}}};
    j["representations"] = {{"u", {{"group", "Z2"}, {"module", "E"}, {"type", "matrices"},
                                   {"matrices", {matrix_to_json(ru[0]), matrix_to_json(ru[1])}}, {"unitary", matrix_to_json(wu)}}}};
    j["cp_maps"] = {{"rho", {{"source", "A"}, {"module", "E"}, {"type", "values"}, {"values", detail::values_literal(rho)}}}};
    j["tasks"] = Json::array({{{"name", "dilation"}, {"type", "dilate"}, {"cp", "rho"}, {"action", "alpha"}, {"representation", "u"}, {"uniqueness", true}},
                              {{"name", "extension"}, {"type", "extend"}, {"cp", "rho"}, {"action", "alpha"}, {"representation", "u"}},
                              {{"name", "crossed-product"}, {"type", "crossed-product"}, {"action", "alpha"}, {"expect_blocks", {2, 2}}},
                              {{"name", "all-declarations"}, {"type", "verify-all"}}});
    return j;
  }
  if (recipe == "tower-chain") {
    Json j = detail::header("Three-level chain M2+C+C -> M2+C -> M2 of block projections with a Z2-covariant map at the top.", seed);
    const FiniteCStarAlgebra A = FiniteCStarAlgebra::full(2), B({2, 1, 1});
    const HilbertModule E(B, 1);
    const FiniteGroup G = FiniteGroup::cyclic(2);
    ComplexMatrix flip = ComplexMatrix::Identity(2, 2);
    flip(1, 1) = -1.0;
    const MatrixRepresentation ua = {ComplexMatrix::Identity(2, 2), flip};
    const auto alpha = GroupAction::inner(G, A, ua);
    const auto u = UnitaryRepresentation::trivial(G, E);
    const auto rho = covariant_average(random_unital_cp(rng, A, E, 1), alpha, u);
    j["algebras"] = {{"A", Json::array({2})}, {"B0", Json::array({2, 1, 1})}, {"B1", Json::array({2, 1})}, {"B2", Json::array({2})}};
    j["groups"] = {{"Z2", "Z2"}};
    j["actions"] = {{"alpha", {{"group", "Z2"}, {"algebra", "A"}, {"type", "inner"},
                               {"unitaries", {matrix_to_json(ua[0]), matrix_to_json(ua[1])}}}}};
    j["modules"] = {{"E", {{"algebra", "B0"}, {"rank", 1}}}};
    j["representations"] = {{"u", {{"group", "Z2"}, {"module", "E"}, {"type", "trivial"}}}};
    j["cp_maps"] = {{"rho", {{"source", "A"}, {"module", "E"}, {"type", "values"}, {"values", detail::values_literal(rho)}}}};
    j["towers"] = {{"chain", {{"levels", {"B0", "B1", "B2"}},
                              {"maps", Json::array({{{"from", 0}, {"to", 1}, {"type", "block-projection"}, {"kept", {0, 1}}},
                                                    {{"from", 1}, {"to", 2}, {"type", "block-projection"}, {"kept", Json::array({0})}}})}}}};
    j["tasks"] = Json::array({{{"name", "coherence"}, {"type", "tower-check"}, {"tower", "chain"}, {"module", "E"}, {"cp", "rho"},
                               {"action", "alpha"}, {"representation", "u"}}});
    return j;
  }
  throw UnknownRecipe("unknown recipe \"" + recipe + "\"");
}

}  // namespace prostar::cli
