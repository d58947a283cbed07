// Minimal end-to-end usage: generate a random MaxCut instance, solve it, and
// print the simplicity report.

#include <iostream>

#include "sdpcert/sdpcert.hpp"

int main() {
  using namespace sdpcert;
  Instance inst = maxcut(random_graph(40, 0.15, /*seed=*/7));
  SolverSolution sol = solve(inst.sdp);
  std::cout << "objective " << sol.primal_obj << " after " << sol.iterations << " iterations ("
            << sol.status << ")\n";
  SimplicityReport rep = certify(inst.sdp, sol);
  std::cout << render_report_table(rep, "maxcut-40");
  return rep.flags.simple ? 0 : 1;
}
