#ifndef DTMM_QUADRATURE_HPP
#define DTMM_QUADRATURE_HPP

#include <vector>

namespace dtmm {

// Numerical backbone of every marginal likelihood: theta abscissae carrying
// the Beta(theta0*nu0, (1-theta0)*nu0) prior mass, crossed with a discrete
// dispersion support of equal prior mass (default log10 tau in
// {-1, -0.5, ..., 4}).
//
// The theta rule is Gauss-Jacobi with the beta prior as the weight function,
// so polynomial integrands (beta-binomial products of total count d) are
// integrated exactly whenever 2*size-1 >= d, and the prior's endpoint
// singularities (e.g. the Jeffreys default theta0=1/2, nu0=1) cost nothing.
struct QuadGrid {
  std::vector<double> theta;       // abscissae in (0,1)
  std::vector<double> log_wtheta;  // log prior weights, sum(exp) == 1
  std::vector<double> tau;         // strictly increasing, > 0
  std::vector<double> log_wtau;    // log(1/|tau|) each

  int n_theta() const { return static_cast<int>(theta.size()); }
  int n_tau() const { return static_cast<int>(tau.size()); }
  int n_cells() const { return n_theta() * n_tau(); }

  // Combined log weight of cell (it, iu) = log_wtheta[it] + log_wtau[iu],
  // flattened row-major over theta then tau.
  const std::vector<double>& log_wcell() const { return log_wcell_; }

  static QuadGrid make(double theta0, double nu0, int n_theta = 64,
                       double tau_log10_min = -1.0, double tau_log10_max = 4.0,
                       double tau_log10_step = 0.5);

 private:
  std::vector<double> log_wcell_;
};

// Gauss-Jacobi rule for the normalized weight x^(a-1) (1-x)^(b-1) / B(a,b)
// on (0,1); weights sum to 1.
void gauss_jacobi_beta(double a, double b, int n, std::vector<double>& nodes,
                       std::vector<double>& weights);

}  // namespace dtmm

#endif  // DTMM_QUADRATURE_HPP
