#pragma once

#include <string>
#include <vector>

namespace kineq {

enum class Verdict { Pass, Fail, OneSided };

std::string to_string(Verdict v);

/// One certified bound: measured value vs bound, with the slack used and a
/// context string recording seeds, tolerances and the oracle involved.
/// verdict == Pass iff measured <= bound * (1 + slack) + absolute slack
/// recorded in context; OneSided marks dictionary lower-estimate
/// comparisons that can weaken but never falsify a bound.
struct CertificateRecord {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  Verdict verdict = Verdict::Pass;
  std::string context;
};

CertificateRecord make_certificate(std::string name, double measured,
                                   double bound, double slack,
                                   std::string context,
                                   bool one_sided = false);

bool all_pass(const std::vector<CertificateRecord>& certificates);

}  // namespace kineq
