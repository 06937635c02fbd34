// Copyright 2026 The scriptmatch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "scriptmatch/kernels.hpp"
#include "scriptmatch/losses.hpp"
#include "scriptmatch/matcher.hpp"
#include "scriptmatch/selfcheck.hpp"

using namespace scriptmatch;
namespace k = scriptmatch::kernels;

namespace {

std::vector<double> randv(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double scale) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * scale) << i;
}

std::vector<const k::KernelTable*> vector_tables() {
  std::vector<const k::KernelTable*> out;
  if (k::isa_available(k::Isa::kAvx2)) out.push_back(k::avx2_table());
  if (k::isa_available(k::Isa::kNeon)) out.push_back(k::neon_table());
  return out;
}

// Restores the startup choice when a test forces another ISA.
struct IsaGuard {
  k::Isa saved = k::active_isa();
  ~IsaGuard() { k::force_isa(saved); }
};

}  // namespace

TEST(Kernels, ScalarReferenceValues) {
  const auto& s = k::scalar_table();
  const double a[] = {1, 2, 3}, b[] = {4, -5, 6};
  EXPECT_EQ(s.dot(a, b, 3), 12.0);
  EXPECT_EQ(s.dot(a, b, 0), 0.0);
  double y[] = {1, 1, 1};
  s.axpy(2.0, a, y, 3);
  EXPECT_EQ(y[2], 7.0);
  const double m[] = {1, 2, 3, 4, 5, 6};  // 2 x 3
  double out[2];
  s.gemv(m, 2, 3, a, out);
  EXPECT_EQ(out[0], 14.0);
  EXPECT_EQ(out[1], 32.0);
  double acc[3] = {1, 0, 0};
  const double x2[] = {1, -1};
  s.gemv_t_acc(m, 2, 3, x2, acc);
  EXPECT_EQ(acc[0], -2.0);
  EXPECT_EQ(acc[2], -3.0);
  double g[6] = {};
  s.ger(0.5, x2, 2, a, 3, g);
  EXPECT_EQ(g[0], 0.5);
  EXPECT_EQ(g[5], -1.5);
}

TEST(Kernels, VectorVariantsMatchScalar) {
  const auto tables = vector_tables();
  if (tables.empty()) GTEST_SKIP() << "no vector ISA on this machine";
  const auto& ref = k::scalar_table();
  Rng rng(1);
  for (const auto* t : tables) {
    for (std::size_t n = 0; n < 70; ++n) {
      const auto a = randv(rng, n), b = randv(rng, n);
      double mag = 0.0;
      for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
      EXPECT_NEAR(t->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n),
                  1e-12 * std::max(1.0, mag));

      auto y1 = randv(rng, n), y2 = y1;
      t->axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      expect_close(y1, y2, 4.0);

      const std::size_t rows = 1 + n % 9;
      const auto m = randv(rng, rows * n);
      const auto xr = randv(rng, rows);
      std::vector<double> o1(rows), o2(rows);
      t->gemv(m.data(), rows, n, a.data(), o1.data());
      ref.gemv(m.data(), rows, n, a.data(), o2.data());
      expect_close(o1, o2, std::max<double>(1.0, n));

      auto c1 = randv(rng, n), c2 = c1;
      t->gemv_t_acc(m.data(), rows, n, xr.data(), c1.data());
      ref.gemv_t_acc(m.data(), rows, n, xr.data(), c2.data());
      expect_close(c1, c2, std::max<double>(1.0, rows));

      auto g1 = m, g2 = m;
      t->ger(-1.3, xr.data(), rows, a.data(), n, g1.data());
      ref.ger(-1.3, xr.data(), rows, a.data(), n, g2.data());
      expect_close(g1, g2, 8.0);
    }
  }
}

TEST(Kernels, ForcedIsaGivesEquivalentScores) {
  IsaGuard guard;
  Rng rng(2);
  const ModelShape shape = oracle::small_shape();
  const ModelParams p = oracle::random_params(rng, shape);
  const auto x = oracle::descriptor(rng, shape);
  const auto t = oracle::unit(rng, shape.dims.text);
  k::force_isa(k::Isa::kScalar);
  EXPECT_EQ(k::active_isa(), k::Isa::kScalar);
  const CandidateTrace a = trace_candidate(x, t, nullptr, p);
  const GradFixture f = make_grad_fixture(BatchKind::kMixed, 4);
  const GradientResult ga = grad_total(f.batch, f.bank, f.params);
  for (k::Isa isa : {k::Isa::kAvx2, k::Isa::kNeon}) {
    if (!k::isa_available(isa)) continue;
    k::force_isa(isa);
    const CandidateTrace b = trace_candidate(x, t, nullptr, p);
    EXPECT_NEAR(a.s_hat, b.s_hat, 1e-12 * std::max(1.0, std::abs(a.s_hat)));
    EXPECT_NEAR(a.gamma, b.gamma, 1e-12);
    const GradientResult gb = grad_total(f.batch, f.bank, f.params);
    for (std::size_t i = 0; i < ga.grad.size(); ++i)
      EXPECT_NEAR(ga.grad[i], gb.grad[i], 1e-10 * std::max(1.0, std::abs(ga.grad[i])));
  }
}

TEST(Kernels, UnavailableIsaIsRejected) {
  IsaGuard guard;
  for (k::Isa isa : {k::Isa::kAvx2, k::Isa::kNeon}) {
    if (!k::isa_available(isa)) {
      EXPECT_THROW(k::force_isa(isa), std::invalid_argument);
    }
  }
  EXPECT_NO_THROW(k::force_isa(k::Isa::kScalar));
  EXPECT_EQ(k::isa_name(k::Isa::kAvx2), "avx2");
}
