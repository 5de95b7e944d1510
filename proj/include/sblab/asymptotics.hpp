#ifndef SBLAB_ASYMPTOTICS_HPP
#define SBLAB_ASYMPTOTICS_HPP

#include <cstddef>
#include <map>
#include <vector>

#include "sblab/rng.hpp"

namespace sblab::asymptotics {

// a_1 = 1, a_{j+1} = a_j + c a_j^{3/4}; a_n ~ (c n / 4)^4.  The sequence is
// iterated on b = a^{1/4} so magnitudes stay polynomial in n; a_n itself
// reaches ~1e24 at n = 1e6, c = 4.
struct RecursionResult {
  double c = 0.0;
  std::size_t n = 0;
  double ratio = 0.0;  // a_n / (c n / 4)^4
};
RecursionResult recursion_ratio(double c, std::size_t n);

// Direct iteration, for oracle checks at small n.
std::vector<double> recursion_direct(double c, std::size_t n);

// Centers t_0 = 0, t_j = a_j (2 eps / c)^4 until [0,1] is covered; every
// consecutive pair is verified to satisfy d(t_j, t_{j+1}) <= 2 eps, so the
// cover count bounds the metric entropy at radius 2 eps.
struct EntropyCover {
  double epsilon = 0.0;
  double c = 0.0;
  std::size_t count = 0;
  double max_pair_distance = 0.0;
  double t_last = 0.0;
};
EntropyCover build_entropy_cover(double epsilon, double c, double kappa);

// Smallest constants making d(s,t) <= c |t-s|^{1/4} min(1, (|t-s|/(s^t))^{3/4})
// and d(s,t) <= C_eta |t-s| (for s,t >= eta) hold on the sampled pairs.
struct DBoundFit {
  double c = 0.0;
  std::size_t violations = 0;  // at the returned constants, by construction
  std::map<double, double> c_eta;
};
DBoundFit verify_d_interpolation(std::size_t pairs, RngStream stream, double kappa,
                                 const std::vector<double>& etas = {0.1, 0.5});

}  // namespace sblab::asymptotics

#endif
