#include "seasonmatch/losses.hpp"

#include "seasonmatch/error.hpp"

namespace seasonmatch {

namespace {
void check_distance(double d, const char* name) {
  if (d < 0.0) throw UsageError(std::string(name) + " must be non-negative");
}
void check_margin(double m) {
  if (m <= 0.0) throw UsageError("margin must be positive");
}
}  // namespace

double contrastive_loss(double d, PairLabel label, double margin_c) {
  check_distance(d, "distance");
  check_margin(margin_c);
  if (label == PairLabel::positive) return d * d;
  const double gap = margin_c - d;
  return gap > 0.0 ? gap * gap : 0.0;
}

double contrastive_loss_grad(double d, PairLabel label, double margin_c) {
  check_distance(d, "distance");
  check_margin(margin_c);
  if (label == PairLabel::positive) return 2.0 * d;
  const double gap = margin_c - d;
  return gap > 0.0 ? -2.0 * gap : 0.0;
}

double wohlhart_lepetit_loss(double d_p, double d_n, double margin) {
  check_distance(d_p, "d_p");
  check_distance(d_n, "d_n");
  check_margin(margin);
  const double v = 1.0 - d_n / (margin + d_p);
  return v > 0.0 ? v : 0.0;
}

TripletLossGrad wohlhart_lepetit_grad(double d_p, double d_n, double margin) {
  check_distance(d_p, "d_p");
  check_distance(d_n, "d_n");
  check_margin(margin);
  TripletLossGrad g;
  const double denom = margin + d_p;
  if (1.0 - d_n / denom > 0.0) {
    g.d_dp = d_n / (denom * denom);
    g.d_dn = -1.0 / denom;
  }
  return g;
}

}  // namespace seasonmatch
