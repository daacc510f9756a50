// Superfluorescent decay of a fully excited ensemble: the emission burst
// peaks near the delay time t_D = ln(N)/(N gamma).

#include <cstdio>

#include "dickesim/liouvillian.hpp"
#include "dickesim/solvers.hpp"
#include "dickesim/states.hpp"

using namespace dickesim;

int main() {
  const int n = 20;
  Rates rates;
  rates.collective_emission = 1.0;

  const double t_d = std::log(n) / (n * rates.collective_emission);
  std::vector<double> times;
  for (int i = 0; i <= 200; ++i) times.push_back(4.0 * t_d * i / 200.0);

  const SpMat jpjm = SpMat(jspin(n, Axis::Plus) * jspin(n, Axis::Minus));
  const auto traj = pisolve(n, rates, SpMat(num_dicke_states(n), num_dicke_states(n)),
                            excited(n), times, {{"emission", jpjm}});

  std::printf("# t/t_D   <J+J->\n");
  for (std::size_t i = 0; i < times.size(); ++i)
    std::printf("%8.4f  %12.6f\n", times[i] / t_d, traj.expectations.at("emission")[i].real());
  return 0;
}
