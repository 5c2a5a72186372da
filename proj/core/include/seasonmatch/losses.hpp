#pragma once

namespace seasonmatch {

enum class PairLabel { positive, negative };

// Contrastive loss on an embedding distance d: d^2 for positives,
// max(0, margin - d)^2 for negatives.
double contrastive_loss(double d, PairLabel label, double margin_c);

// dLoss/dd. At the negative-branch kink (d == margin) the subgradient 0
// is used so runs stay deterministic.
double contrastive_loss_grad(double d, PairLabel label, double margin_c);

// Bounded triplet loss max{0, 1 - d_n / (margin + d_p)}; zero exactly
// when d_n >= margin + d_p, one exactly when d_n == 0.
double wohlhart_lepetit_loss(double d_p, double d_n, double margin);

struct TripletLossGrad {
  double d_dp = 0.0;
  double d_dn = 0.0;
};

// Partials wrt (d_p, d_n); zero on the flat branch (kink subgradient 0).
TripletLossGrad wohlhart_lepetit_grad(double d_p, double d_n, double margin);

}  // namespace seasonmatch
