// Builds the p = 2, E = 8 cover of [0, 1/2], prints each interval with its
// endpoints and then re-checks the certificate.

#include <iostream>
#include <sstream>

#include "plc/plc.hpp"

int main() {
  plc::SearchConfig cfg{2, 8, 256};
  plc::Cover cover = plc::build_cover(cfg);

  std::ostringstream cert;
  plc::CertificateWriter writer(cert);
  writer.write_header({cfg.p, cfg.E, cover.start, cover.target});
  for (const auto& iv : cover.intervals) {
    auto [left, right] = plc::endpoints(iv, cfg.p, cfg.E);
    std::cout << plc::to_string(iv) << "  [" << left << ", " << right << "]\n";
    writer(iv);
  }
  writer.finish();

  std::cout << "intervals=" << cover.stats.count << " type1=" << cover.stats.type1
            << " type2=" << cover.stats.type2 << "\n";

  std::istringstream in(cert.str());
  auto report = plc::verify_certificate(in, cfg.p, cfg.E, {true, 3, 7});
  std::cout << report.summary() << "\n";
  return report.valid ? 0 : 1;
}
