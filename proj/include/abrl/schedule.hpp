#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace abrl {

// Four polynomially decaying step-size sequences
//   alpha_n^(i) = c_i / (n0_i + n)^{p_i},
// indexed slowest first: [0] basis parameters s, [1] actor theta,
// [2] critic (eta, r), [3] moment estimators. A scale with zero
// coefficient is disabled (that iterate is frozen).
template <class Scalar>
struct StepSchedule {
  struct Scale {
    Scalar coeff = Scalar(0);
    Scalar offset = Scalar(1);
    Scalar exponent = Scalar(1);
  };

  std::array<Scale, 4> scales;
  bool single_time_scale = false;

  Scalar alpha(int scale, long n) const {
    const Scale& s = scales[scale];
    if (s.coeff == Scalar(0)) return Scalar(0);
    return s.coeff * std::pow(s.offset + Scalar(n), -s.exponent);
  }

  Scalar basis_rate(long n) const { return alpha(0, n); }
  Scalar actor_rate(long n) const { return alpha(1, n); }
  Scalar critic_rate(long n) const { return alpha(2, n); }
  Scalar estimator_rate(long n) const { return alpha(3, n); }

  static StepSchedule defaults() {
    StepSchedule sched;
    sched.scales[0] = {Scalar(0.01), Scalar(1000), Scalar(1.0)};
    sched.scales[1] = {Scalar(0.06), Scalar(1000), Scalar(0.85)};
    sched.scales[2] = {Scalar(0.25), Scalar(1000), Scalar(0.70)};
    sched.scales[3] = {Scalar(1.0), Scalar(100), Scalar(0.55)};
    return sched;
  }

  // Collapses every scale onto one sequence (single-time-scale mode).
  static StepSchedule single(Scalar coeff, Scalar offset, Scalar exponent) {
    StepSchedule sched;
    sched.single_time_scale = true;
    for (auto& s : sched.scales) s = {coeff, offset, exponent};
    return sched;
  }
};

struct ScheduleCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ScheduleReport {
  bool pass = false;
  std::vector<ScheduleCheck> checks;

  std::string to_string() const {
    std::string out;
    for (const auto& c : checks)
      out += std::string(c.pass ? "[ ok ] " : "[FAIL] ") + c.name + ": " +
             c.detail + "\n";
    out += pass ? "schedule: PASS\n" : "schedule: FAIL\n";
    return out;
  }
};

// Report-only contract check: square-summability / divergence of each
// scale via its exponent, strict time-scale separation via exponent
// ordering, and the numerical ratio proxy alpha^(i)/alpha^(i+1) evaluated
// at n = 1e3, 1e4, 1e6 (asserted < 0.05 at 1e6). Disabled scales are
// skipped; single-time-scale mode waives the separation checks.
template <class Scalar>
ScheduleReport validate_schedule(const StepSchedule<Scalar>& sched) {
  ScheduleReport report;
  report.pass = true;
  char buf[256];
  auto add = [&](const std::string& name, bool pass, const std::string& det) {
    report.checks.push_back({name, pass, det});
    if (!pass) report.pass = false;
  };

  static const char* kNames[4] = {"basis(s)", "actor(theta)", "critic(eta,r)",
                                  "estimators"};
  for (int i = 0; i < 4; ++i) {
    const auto& s = sched.scales[i];
    if (s.coeff == Scalar(0)) {
      add(std::string("scale ") + kNames[i], true, "disabled (coeff 0)");
      continue;
    }
    const double p = double(s.exponent);
    bool ok = s.coeff > Scalar(0) && s.offset > Scalar(0) && p > 0.5 && p <= 1.0;
    std::snprintf(buf, sizeof(buf),
                  "c=%g n0=%g p=%g (needs c>0, n0>0, 0.5<p<=1)", double(s.coeff),
                  double(s.offset), p);
    add(std::string("scale ") + kNames[i] + " summability", ok, buf);
  }

  if (!sched.single_time_scale) {
    for (int i = 0; i < 3; ++i) {
      const auto& slow = sched.scales[i];
      const auto& fast = sched.scales[i + 1];
      if (slow.coeff == Scalar(0) || fast.coeff == Scalar(0)) continue;
      const bool ordered = double(slow.exponent) > double(fast.exponent);
      std::snprintf(buf, sizeof(buf), "p_%d=%g > p_%d=%g", i + 1,
                    double(slow.exponent), i + 2, double(fast.exponent));
      add("separation exponents (" + std::string(kNames[i]) + "/" + kNames[i + 1] + ")",
          ordered, buf);

      std::string detail;
      bool ratio_ok = true;
      for (long n : {1000L, 10000L, 1000000L}) {
        const double ratio =
            double(sched.alpha(i, n)) / double(sched.alpha(i + 1, n));
        std::snprintf(buf, sizeof(buf), "n=%ld: %.4g  ", n, ratio);
        detail += buf;
        if (n == 1000000L && !(ratio < 0.05)) ratio_ok = false;
      }
      add("vanishing ratio (" + std::string(kNames[i]) + "/" + kNames[i + 1] + ")",
          ratio_ok, detail + "(asserting < 0.05 at n=1e6)");
    }
  } else {
    add("separation", true, "single-time-scale mode: separation waived");
  }
  return report;
}

}  // namespace abrl
