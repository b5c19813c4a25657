#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "varsim/core_model.hpp"
#include "varsim/random.hpp"

namespace varsim {
namespace {

using testing::entry;
using testing::face_service;
using namespace std::chrono_literals;

bool has_violation(const ValidationReport& r, const std::string& path_part, const std::string& msg_part) {
  for (const auto& v : r.violations) {
    if (v.path.find(path_part) != std::string::npos && v.message.find(msg_part) != std::string::npos) return true;
  }
  return false;
}

TEST(ValidateSpec, WellFormedFaceDetectionSpecIsClean) {
  const auto report = validate_spec(face_service());
  EXPECT_TRUE(report.ok()) << report.to_string();
}

TEST(ValidateSpec, DuplicateVariantId) {
  auto s = face_service();
  s.variants = {entry("v1", 70, 0.5, "haar"), entry("v1", 45, 0.5, "lbp")};
  s.initial_variant = "v1";
  const auto report = validate_spec(s);
  ASSERT_FALSE(report.ok());
  EXPECT_TRUE(has_violation(report, "variants[1]", "duplicate")) << report.to_string();
}

TEST(ValidateSpec, ParameterOutOfDomain) {
  auto s = face_service();
  s.variants[0].variant.parameters["scale-factor"] = 2.5;
  const auto report = validate_spec(s);
  ASSERT_FALSE(report.ok());
  EXPECT_TRUE(has_violation(report, "variants[0].parameters.scale-factor", "")) << report.to_string();
}

TEST(ValidateSpec, ParameterOnGridInsideDomainIsAccepted) {
  auto s = face_service();
  s.variants[0].variant.parameters["scale-factor"] = 1.3;
  EXPECT_TRUE(validate_spec(s).ok()) << validate_spec(s).to_string();
}

TEST(ValidateSpec, UndeclaredParameter) {
  auto s = face_service();
  s.variants[1].variant.parameters["min-size"] = 3.0;
  EXPECT_TRUE(has_violation(validate_spec(s), "variants[1].parameters.min-size", ""));
}

TEST(ValidateSpec, AlgorithmAndAuxDataMustBeDeclared) {
  auto s = face_service();
  s.variants[0].variant.algorithm = "surf";
  s.variants[1].variant.aux_data = "model-x";
  const auto report = validate_spec(s);
  EXPECT_TRUE(has_violation(report, "variants[0].algorithm", "")) << report.to_string();
  EXPECT_TRUE(has_violation(report, "variants[1].aux_data", "")) << report.to_string();
}

TEST(ValidateSpec, ProfileInvariants) {
  auto s = face_service();
  s.variants[0].profile.service_time = Duration{0};
  s.variants[1].profile.qor = 1.5;
  s.variants[1].profile.noise = NoiseModel::lognormal(-0.1);
  const auto report = validate_spec(s);
  EXPECT_TRUE(has_violation(report, "variants[0]", "")) << report.to_string();
  EXPECT_GE(report.violations.size(), 3u) << report.to_string();
}

TEST(ValidateSpec, InitialVariantMustExistAndVariantsNonEmpty) {
  auto s = face_service();
  s.initial_variant = "surf";
  EXPECT_TRUE(has_violation(validate_spec(s), "initial_variant", ""));
  s.variants.clear();
  EXPECT_TRUE(has_violation(validate_spec(s), "variants", ""));
}

TEST(ValidateDimensions, MalformedRange) {
  AdaptationDimensions d;
  d.parameters["x"] = NumericRange{2.0, 1.0, 0.5};
  d.parameters["y"] = NumericRange{0.0, 1.0, 0.0};
  const auto report = validate_dimensions(d);
  EXPECT_TRUE(has_violation(report, "x", "")) << report.to_string();
  EXPECT_TRUE(has_violation(report, "y", "")) << report.to_string();
}

TEST(ValidateChain, UnresolvedStageAndEmptyStages) {
  const std::vector<MicroserviceSpec> services{face_service()};
  ServiceChainSpec chain{"c", {"face-detection", "blur"}, std::nullopt};
  EXPECT_TRUE(has_violation(validate_chain(chain, services), "stages[1]", ""));
  chain.stages.clear();
  EXPECT_FALSE(validate_chain(chain, services).ok());
  chain.stages = {"face-detection"};
  EXPECT_TRUE(validate_chain(chain, services).ok());
}

TEST(EnumerateVariants, AlgorithmsOnly) {
  AdaptationDimensions d;
  d.algorithms = {"a", "b"};
  const auto v = enumerate_variants(d);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].algorithm, "a");
  EXPECT_EQ(v[1].algorithm, "b");
  EXPECT_FALSE(v[0].aux_data.has_value());
  EXPECT_TRUE(v[0].parameters.empty());
}

TEST(EnumerateVariants, AlgorithmsTimesMinNeighbors) {
  AdaptationDimensions d;
  d.algorithms = {"LBP", "Haar"};
  d.parameters["min-neighbors"] = NumericRange{1, 10, 1};
  const auto v = enumerate_variants(d);
  EXPECT_EQ(v.size(), 20u);
  std::set<std::string> ids;
  for (const auto& x : v) ids.insert(x.variant_id);
  EXPECT_EQ(ids.size(), 20u);
}

TEST(EnumerateVariants, AuxiliaryDataOnly) {
  AdaptationDimensions d;
  d.auxiliary_data = {"psnr-large", "psnr-small", "noise-cancel", "gans"};
  const auto v = enumerate_variants(d);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v[0].variant_id, "psnr-large");
  EXPECT_EQ(v[3].aux_data, "gans");
}

TEST(EnumerateVariants, EmptyDimensionsGiveOneDefaultVariant) {
  const auto v = enumerate_variants(AdaptationDimensions{});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].variant_id, "default");
}

TEST(EnumerateVariants, ContinuousRangeIsRejected) {
  AdaptationDimensions d;
  d.parameters["scale-factor"] = NumericRange{1.0, 1.9, std::nullopt};
  try {
    enumerate_variants(d);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("non-enumerable parameter space"), std::string::npos);
  }
}

TEST(EnumerateVariants, ScaleFactorGridHasTenPoints) {
  const auto grid = NumericRange{1.0, 1.9, 0.1}.grid();
  ASSERT_EQ(grid.size(), 10u);
  EXPECT_DOUBLE_EQ(grid.front(), 1.0);
  EXPECT_DOUBLE_EQ(grid.back(), 1.9);
}

// Random finite dimensions: product size, uniqueness and round-trip validity.
TEST(EnumerateVariantsProperty, ProductSizeUniqueAndValid) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    AdaptationDimensions d;
    const auto na = rng.below(4), nd = rng.below(4), np = rng.below(3);
    for (std::uint64_t i = 0; i < na; ++i) d.algorithms.push_back("alg" + std::to_string(i));
    for (std::uint64_t i = 0; i < nd; ++i) d.auxiliary_data.push_back("aux" + std::to_string(i));
    std::size_t expected = std::max<std::size_t>(na, 1) * std::max<std::size_t>(nd, 1);
    for (std::uint64_t i = 0; i < np; ++i) {
      const auto name = "p" + std::to_string(i);
      if (rng.below(2) == 0) {
        const auto steps = 1 + rng.below(5);
        d.parameters[name] = NumericRange{0.5, 0.5 + 0.25 * static_cast<double>(steps - 1), 0.25};
        expected *= steps;
      } else {
        EnumeratedValues e;
        const auto k = 1 + rng.below(3);
        for (std::uint64_t j = 0; j < k; ++j) e.values.push_back("val" + std::to_string(j));
        d.parameters[name] = e;
        expected *= k;
      }
    }
    const auto variants = enumerate_variants(d);
    ASSERT_EQ(variants.size(), expected);
    std::set<std::string> ids;
    MicroserviceSpec spec;
    spec.service_id = "svc";
    spec.dimensions = d;
    for (const auto& v : variants) {
      ids.insert(v.variant_id);
      VariantEntry e;
      e.variant = v;
      e.profile.variant_id = v.variant_id;
      e.profile.service_time = 10ms;
      spec.variants.push_back(e);
    }
    EXPECT_EQ(ids.size(), variants.size());
    spec.initial_variant = variants.front().variant_id;
    const auto report = validate_spec(spec);
    EXPECT_TRUE(report.ok()) << report.to_string();
  }
}

TEST(MakeVariantId, JoinsCoordinates) {
  EXPECT_EQ(make_variant_id("haar", {{"min-neighbors", 3.0}}, std::nullopt), "haar;min-neighbors=3");
  EXPECT_EQ(make_variant_id(std::nullopt, {}, "psnr-large"), "psnr-large");
  EXPECT_EQ(make_variant_id(std::nullopt, {}, std::nullopt), "default");
}

}  // namespace
}  // namespace varsim
