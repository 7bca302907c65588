#include "enot/ot/expectile.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "enot/common.hpp"

namespace enot::ot {

double expectile_loss(double u, double tau) {
  require(tau >= 0.0 && tau < 1.0, ErrorKind::BadParams, "expectile level must lie in [0, 1)");
  const double weight = u <= 0.0 ? 1.0 - tau : tau;
  return weight * u * u;
}

double scalar_expectile(std::span<const double> samples, double tau) {
  require(!samples.empty(), ErrorKind::EmptySamples, "expectile of an empty sample set");
  require(tau > 0.0 && tau < 1.0, ErrorKind::BadParams, "expectile level must lie in (0, 1)");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  const double total = std::accumulate(x.begin(), x.end(), 0.0);

  // (1 - tau) sum_{x <= e} (e - x) - tau sum_{x > e} (x - e) is increasing and
  // linear between order statistics. With the k smallest samples below e
  // (prefix sum p) its root is ((1 - tau) p + tau (total - p)) / ((1 - tau) k + tau (n - k)).
  auto root = [&](std::size_t k, double p) {
    const double kk = static_cast<double>(k);
    return ((1.0 - tau) * p + tau * (total - p)) / ((1.0 - tau) * kk + tau * (static_cast<double>(n) - kk));
  };
  double prefix = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    prefix += x[k - 1];
    if (k == n || x[k] == x[k - 1]) continue;
    // Balance at the next order statistic, with k samples strictly below it.
    const double next = x[k];
    const double kk = static_cast<double>(k);
    const double bal = (1.0 - tau) * (kk * next - prefix) - tau * ((total - prefix) - (static_cast<double>(n) - kk) * next);
    if (bal >= 0.0) return std::clamp(root(k, prefix), x[k - 1], next);
  }
  return x.back();  // every sample equal
}

}  // namespace enot::ot
