#include "dtmm/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace dtmm {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix built from the
// three-term recurrence of the Jacobi polynomials P^(al,be) on [-1,1] with
// weight (1-x)^al (1+x)^be; weights are proportional to the squared first
// components of the eigenvectors. Mapped to (0,1) with x = (1+t)/2 this
// covers the beta weight with al = b-1, be = a-1.
void gauss_jacobi_beta(double a, double b, int n, std::vector<double>& nodes,
                       std::vector<double>& weights) {
  if (a <= 0 || b <= 0) throw std::invalid_argument("beta weight needs a,b > 0");
  if (n < 1) throw std::invalid_argument("quadrature needs n >= 1");
  const double al = b - 1.0, be = a - 1.0;

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double denom = (2.0 * k + al + be) * (2.0 * k + al + be + 2.0);
    double diag;
    if (k == 0)
      diag = (be - al) / (al + be + 2.0);
    else
      diag = (be * be - al * al) / denom;
    J(k, k) = diag;
    if (k == 1) {
      // The general expression is indeterminate at k=1 (al+be in {0,-1}).
      double b1 = 4.0 * (1.0 + al) * (1.0 + be) /
                  ((2.0 + al + be) * (2.0 + al + be) * (3.0 + al + be));
      J(1, 0) = J(0, 1) = std::sqrt(b1);
    } else if (k > 1) {
      double num = 4.0 * k * (k + al) * (k + be) * (k + al + be);
      double den = (2.0 * k + al + be) * (2.0 * k + al + be);
      den *= (2.0 * k + al + be + 1.0) * (2.0 * k + al + be - 1.0);
      J(k, k - 1) = J(k - 1, k) = std::sqrt(num / den);
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gauss_jacobi_beta: eigendecomposition failed");

  nodes.resize(n);
  weights.resize(n);
  double wsum = 0;
  for (int i = 0; i < n; ++i) {
    nodes[i] = 0.5 * (1.0 + es.eigenvalues()[i]);
    double v0 = es.eigenvectors()(0, i);
    weights[i] = v0 * v0;
    wsum += weights[i];
  }
  // Normalize to a probability measure; the total mass of the beta prior
  // is 1 by construction.
  for (int i = 0; i < n; ++i) weights[i] /= wsum;
}

QuadGrid QuadGrid::make(double theta0, double nu0, int n_theta,
                        double tau_log10_min, double tau_log10_max,
                        double tau_log10_step) {
  if (!(theta0 > 0 && theta0 < 1)) throw std::invalid_argument("theta0 in (0,1)");
  if (nu0 <= 0) throw std::invalid_argument("nu0 > 0");
  if (tau_log10_step <= 0 || tau_log10_max < tau_log10_min)
    throw std::invalid_argument("invalid tau support");

  QuadGrid g;
  std::vector<double> w;
  gauss_jacobi_beta(theta0 * nu0, (1.0 - theta0) * nu0, n_theta, g.theta, w);
  g.log_wtheta.resize(n_theta);
  for (int i = 0; i < n_theta; ++i) g.log_wtheta[i] = std::log(w[i]);

  int n_tau =
      static_cast<int>(std::floor((tau_log10_max - tau_log10_min) /
                                  tau_log10_step * (1.0 + 1e-12))) + 1;
  g.tau.resize(n_tau);
  for (int i = 0; i < n_tau; ++i)
    g.tau[i] = std::pow(10.0, tau_log10_min + i * tau_log10_step);
  g.log_wtau.assign(n_tau, -std::log(static_cast<double>(n_tau)));

  g.log_wcell_.resize(static_cast<size_t>(n_theta) * n_tau);
  for (int it = 0; it < n_theta; ++it)
    for (int iu = 0; iu < n_tau; ++iu)
      g.log_wcell_[static_cast<size_t>(it) * n_tau + iu] =
          g.log_wtheta[it] + g.log_wtau[iu];
  return g;
}

}  // namespace dtmm
