#include "kgcoref/neural.h"

#include <cmath>

#include <gtest/gtest.h>

#include "kgcoref/error.h"
#include "fd_oracle.h"
#include "toy.h"

namespace kgcoref {
namespace {

using testing::MakeToyInstance;
using testing::ToyConfig;
using testing::ToyVocabulary;

class GradientCheck : public ::testing::TestWithParam<Variant> {};

TEST_P(GradientCheck, MatchesFiniteDifferences) {
  Rng rng(20240601);
  for (int trial = 0; trial < 8; ++trial) {
    testing::ToyInstance toy = MakeToyInstance(rng);
    Model model = testing::JitteredToyModel(ToyConfig(GetParam()), ToyVocabulary(toy), 1000 + trial, rng);
    PreparedInstance inst = PrepareInstance(model, toy.graph, toy.doc, 0, toy.candidates);
    const testing::FdResult fd = testing::CheckGradients(model, inst, trial % 2 == 1);
    EXPECT_LT(fd.worst, 1e-3) << "trial " << trial << ": " << fd.worst_entry;
    EXPECT_GT(fd.checked, 0);
    EXPECT_TRUE(fd.oov_gradient_zero);
  }
}

INSTANTIATE_TEST_SUITE_P(AllVariants, GradientCheck,
                         ::testing::Values(Variant::kComplete, Variant::kWithoutKg,
                                           Variant::kWithoutAttention),
                         [](const auto& info) { return std::string(VariantName(info.param)); });

}  // namespace
}  // namespace kgcoref
