#include <gtest/gtest.h>

#include <cmath>

#include "netepi/integrate.hpp"

using namespace netepi;

namespace {

EpidemicParams baseline_params() {
  EpidemicParams p;
  p.lambda = 0.05;
  p.mu = 0.05;
  p.rho0 = 0.01;
  return p;
}

DegreeDistribution power_law_dist() { return DegreeDistribution::truncated_power_law(3.0, 1, 60); }

// one instance of every model, all with d = 0
std::vector<AnyModel> all_models(double lambda_scale = 1.0) {
  auto p = baseline_params();
  p.lambda *= lambda_scale;
  const auto dist = DegreeDistribution::truncated_power_law(2.5, 1, 30);
  std::vector<AnyModel> out;
  out.emplace_back(ClassicSirModel(p));
  out.emplace_back(StratifiedModel(dist, p));
  auto p2 = p;
  p2.lambda2 = 0.5 * p.lambda;
  out.emplace_back(TwoTypeModel(dist, p2));
  auto pb = p;
  pb.lambda_12 = 0.1 * lambda_scale;
  pb.lambda_21 = 0.2 * lambda_scale;
  out.emplace_back(BipartiteModel(dist, DegreeDistribution::truncated_power_law(2.0, 1, 20), pb));
  ModelOptions treat;
  treat.treatment.epochs = {10.0, 25.05};
  treat.treatment.coverages = {0.3, 0.7};
  auto ph = p;
  ph.lambda = 0.3 * lambda_scale;
  out.emplace_back(HivMsmModel(dist, ph, treat));
  out.emplace_back(HivHeteroModel(dist, DegreeDistribution::truncated_power_law(2.7, 1, 25), ph, treat));
  return out;
}

}  // namespace

TEST(Integrate, TimeGridAndAlignment) {
  StratifiedModel m(power_law_dist(), baseline_params());
  const auto tr = integrate(m, 0.0, 10.0, {Method::rk4, 0.1});
  ASSERT_EQ(tr.size(), 101u);
  EXPECT_EQ(tr.states.size(), tr.size());
  EXPECT_EQ(tr.derivatives.size(), tr.size());
  EXPECT_DOUBLE_EQ(tr.times.back(), 10.0);
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GT(tr.times[i], tr.times[i - 1]);
  EXPECT_EQ(tr.incidence[0], 0.0);
}

TEST(Integrate, PartialFinalStep) {
  StratifiedModel m(power_law_dist(), baseline_params());
  const auto tr = integrate(m, 0.0, 1.05, {Method::rk4, 0.1});
  EXPECT_EQ(tr.size(), 12u);
  EXPECT_DOUBLE_EQ(tr.times.back(), 1.05);
}

TEST(Integrate, EulerIncidenceIsStepInflow) {
  StratifiedModel m(power_law_dist(), baseline_params());
  const auto tr = integrate(m, 0.0, 20.0, {Method::euler, 1.0});
  for (std::size_t n = 1; n < tr.size(); ++n) {
    EXPECT_NEAR(tr.susceptible[n - 1] - tr.susceptible[n], tr.incidence[n], 1e-15) << n;
  }
}

TEST(Integrate, DerivativesAreRhsAtRecordedStates) {
  StratifiedModel m(power_law_dist(), baseline_params());
  const auto tr = integrate(m, 0.0, 5.0, {Method::rk4, 0.5});
  StratifiedState dx;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    m.rhs(tr.states[i], dx);
    EXPECT_EQ(dx, tr.derivatives[i]);
  }
}

TEST(Integrate, NoTransmissionKeepsSusceptibles) {
  for (const auto& model : all_models(0.0)) {
    const auto tr = integrate(model, 0.0, 50.0, {Method::rk4, 0.1});
    for (std::size_t i = 0; i < tr.size(); ++i) {
      for (std::size_t g = 0; g < tr.states[i].layout().groups(); ++g) {
        const auto s = tr.states[i].s(g);
        const auto s0 = tr.states[0].s(g);
        for (std::size_t k = 0; k < s.size(); ++k) ASSERT_NEAR(s[k], s0[k], 1e-12);
      }
    }
  }
}

TEST(Integrate, SubcriticalClassicPrevalenceDecreases) {
  ClassicSirModel m(baseline_params());
  const auto tr = integrate(m, 0.0, 200.0, {Method::rk4, 0.1});
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_LT(tr.prevalence[i], tr.prevalence[i - 1]);
}

TEST(Integrate, ConservationAllModels) {
  for (const auto& model : all_models()) {
    const auto tr = integrate(model, 0.0, 50.0, {Method::rk4, 0.1});
    ASSERT_GE(tr.size(), 501u);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      ASSERT_LE(std::abs(tr.susceptible[i] + tr.prevalence[i] + tr.removed[i] - 1.0), 1e-8) << model.index();
    }
  }
}

TEST(Integrate, MonotoneSusceptiblesAndRemoved) {
  for (const auto& model : all_models()) {
    const auto tr = integrate(model, 0.0, 50.0, {Method::rk4, 0.1});
    for (std::size_t i = 1; i < tr.size(); ++i) {
      ASSERT_GE(tr.removed[i], tr.removed[i - 1]);
      for (std::size_t g = 0; g < tr.states[i].layout().groups(); ++g) {
        const auto sa = tr.states[i - 1].s(g);
        const auto sb = tr.states[i].s(g);
        for (std::size_t k = 0; k < sa.size(); ++k) ASSERT_LE(sb[k], sa[k]);
      }
    }
  }
}

TEST(Integrate, HomogeneousReduction) {
  ModelOptions o;
  o.denominator = LinkDenominator::fixed;
  StratifiedModel strat(DegreeDistribution::single(1), baseline_params(), o);
  ClassicSirModel sir(baseline_params());
  const auto a = integrate(strat, 0.0, 200.0, {Method::rk4, 0.1});
  const auto b = integrate(sir, 0.0, 200.0, {Method::rk4, 0.1});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_NEAR(a.susceptible[i], b.susceptible[i], 1e-10);
    ASSERT_NEAR(a.prevalence[i], b.prevalence[i], 1e-10);
    ASSERT_NEAR(a.removed[i], b.removed[i], 1e-10);
  }
}

TEST(Integrate, TwoTypeCollapse) {
  const auto dist = DegreeDistribution::truncated_power_law(2.5, 1, 30);
  auto p = baseline_params();
  p.lambda = 0.1;
  p.lambda2 = 0.1;
  TwoTypeModel two(dist, p);
  StratifiedModel one(dist, p);
  const auto a = integrate(two, 0.0, 100.0, {Method::rk4, 0.1});
  const auto b = integrate(one, 0.0, 100.0, {Method::rk4, 0.1});
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_NEAR(a.prevalence[i], b.prevalence[i], 1e-8);
    ASSERT_NEAR(a.susceptible[i], b.susceptible[i], 1e-8);
  }
}

TEST(Integrate, BipartiteSymmetry) {
  const auto dist = DegreeDistribution::truncated_power_law(2.5, 1, 30);
  auto p = baseline_params();
  p.lambda_12 = p.lambda_21 = 0.15;
  BipartiteModel m(dist, dist, p);
  const auto tr = integrate(m, 0.0, 100.0, {Method::rk4, 0.1});
  double worst = 0.0;
  for (const auto& x : tr.states) {
    for (std::size_t i = 0; i < 30; ++i) {
      worst = std::max(worst, std::abs(x.s(0)[i] - x.s(1)[i]));
      worst = std::max(worst, std::abs(x.rho(0)[i] - x.rho(1)[i]));
      worst = std::max(worst, std::abs(x.removed(0)[i] - x.removed(1)[i]));
    }
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Integrate, StepHalvingAgreement) {
  StratifiedModel m(power_law_dist(), baseline_params());
  const auto a = integrate(m, 0.0, 600.0, {Method::rk4, 0.1, false});
  const auto b = integrate(m, 0.0, 600.0, {Method::rk4, 0.05, false});
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a.prevalence[i], b.prevalence[2 * i], 1e-6);
}

TEST(Integrate, Rk4FourthOrder) {
  const auto dist = DegreeDistribution::truncated_power_law(3.0, 1, 30);
  auto p = baseline_params();
  p.lambda = 0.3;
  StratifiedModel m(dist, p);
  auto at_end = [&](double dt) { return integrate(m, 0.0, 40.0, {Method::rk4, dt, false}).prevalence.back(); };
  const double ref = at_end(0.5 / 8);
  const double e1 = std::abs(at_end(1.0) - ref);
  const double e2 = std::abs(at_end(0.5) - ref);
  EXPECT_GT(e1 / e2, 12.0);
  EXPECT_LT(e1 / e2, 20.0);
}

TEST(Integrate, EulerFirstOrder) {
  StratifiedModel m(DegreeDistribution::truncated_power_law(3.0, 1, 30), baseline_params());
  auto at_end = [&](double dt) { return integrate(m, 0.0, 40.0, {Method::euler, dt, false}).prevalence.back(); };
  const double ref = integrate(m, 0.0, 40.0, {Method::rk4, 0.05, false}).prevalence.back();
  const double ratio = std::abs(at_end(0.2) - ref) / std::abs(at_end(0.1) - ref);
  EXPECT_NEAR(ratio, 2.0, 0.2);
}

TEST(Integrate, StabilityErrorSuggestsSmallerStep) {
  auto p = baseline_params();
  p.lambda = 1.0;
  p.mu = 1.0;
  p.rho0 = 0.5;
  ClassicSirModel m(p);
  try {
    integrate(m, 0.0, 20.0, {Method::euler, 5.0});
    FAIL() << "expected StabilityError";
  } catch (const StabilityError& e) {
    EXPECT_NE(std::string(e.what()).find("smaller dt"), std::string::npos);
  }
}

TEST(Integrate, RejectsBadSpan) {
  ClassicSirModel m(baseline_params());
  EXPECT_THROW(integrate(m, 0.0, 10.0, {Method::rk4, 0.0}), ParameterError);
  EXPECT_THROW(integrate(m, 0.0, 10.0, {Method::rk4, -1.0}), ParameterError);
  EXPECT_THROW(integrate(m, 5.0, 5.0, {}), ParameterError);
}

TEST(Integrate, EpochsFallOnStepBoundaries) {
  const auto dist = DegreeDistribution::truncated_power_law(1.6, 1, 40);
  auto p = baseline_params();
  p.lambda = 0.3;
  p.mu = 0.0;
  ModelOptions o;
  o.treatment.epochs = {2.25, 4.0};
  o.treatment.coverages = {0.5, 0.9};
  HivMsmModel m(dist, p, o);
  const auto tr = integrate(m, 0.0, 6.0, {Method::rk4, 0.5});
  ASSERT_EQ(tr.discontinuities.size(), 2u);
  EXPECT_DOUBLE_EQ(tr.times[tr.discontinuities[0].index], 2.25);
  EXPECT_DOUBLE_EQ(tr.times[tr.discontinuities[1].index], 4.0);
  // the grid continues from t0 after the shortened step
  EXPECT_DOUBLE_EQ(tr.times[tr.discontinuities[0].index + 1], 2.5);

  const auto& jump = tr.discontinuities[1];
  const auto& after = tr.states[jump.index];
  EXPECT_NEAR(jump.state_before.total(), after.total(), 1e-15);
  for (std::size_t i = 0; i < 40; ++i) {
    const double total = after.rho(0, 0)[i] + after.rho(0, 1)[i];
    EXPECT_NEAR(after.rho(0, 1)[i], 0.9 * total, 1e-15);
  }
  // treated infectors transmit less, so the susceptible outflow drops at the switch
  double before = 0.0, post = 0.0;
  for (std::size_t i = 0; i < 40; ++i) {
    before += jump.derivative_before.s()[i];
    post += tr.derivatives[jump.index].s()[i];
  }
  EXPECT_LT(before, post);
}

TEST(Integrate, EpochAtStartAppliedImmediately) {
  const auto dist = DegreeDistribution::truncated_power_law(1.6, 1, 20);
  ModelOptions o;
  o.treatment.epochs = {0.0};
  o.treatment.coverages = {1.0};
  HivMsmModel m(dist, baseline_params(), o);
  const auto tr = integrate(m, 0.0, 1.0, {Method::rk4, 0.1});
  for (double v : tr.states[0].rho(0, 0)) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(tr.discontinuities.empty());
}

TEST(Integrate, DeterministicRerun) {
  StratifiedModel m(power_law_dist(), baseline_params());
  const auto a = integrate(m, 0.0, 100.0);
  const auto b = integrate(m, 0.0, 100.0);
  EXPECT_EQ(a.prevalence, b.prevalence);
  EXPECT_EQ(a.incidence, b.incidence);
}

TEST(Integrate, PowerLawPeakShape) {
  StratifiedModel m(power_law_dist(), baseline_params());
  const auto tr = integrate(m, 0.0, 600.0, {Method::rk4, 0.1, false});
  EXPECT_GT(tr.peak_prevalence(), 0.1);
  EXPECT_GT(tr.peak_time(), 0.0);
  EXPECT_LT(tr.peak_time(), 600.0);
  EXPECT_GT(tr.final_size(), 0.9);
}
