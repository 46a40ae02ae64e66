//! Scalar training losses built on the autodiff graph.
//!
//! Discriminator outputs are always logits. `log D` is `log_sigmoid(logit)` and
//! `log(1 - D)` is `log_sigmoid(-logit)`; no clamping constants appear anywhere.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, NodeId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Regularizer weights: `lambda1` (reconstruction), `lambda2` (mode term) and
/// `lambda` (manifold-step discriminator term).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda: f64,
}

impl LossWeights {
    pub fn new(lambda1: f64, lambda2: f64, lambda: f64) -> Result<Self> {
        for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2), ("lambda", lambda)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("{v} must be a non-negative number")));
            }
        }
        Ok(Self {
            lambda1,
            lambda2,
            lambda,
        })
    }

    /// True when either regularizer of the generator target is switched on.
    pub fn regularized(&self) -> bool {
        self.lambda1 > 0.0 || self.lambda2 > 0.0
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda1: 0.005,
            lambda2: 0.005,
            lambda: 1.0,
        }
    }
}

/// Direction of the mode regularizer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSign {
    /// `-lambda2 * mean log D(G(E(x)))`: minimizing pulls reconstructions up the
    /// discriminator, toward nearby data modes.
    #[default]
    Rewarding,
    /// `+lambda2 * mean log D(G(E(x)))`, the sign as printed in the regularized target.
    Literal,
}

fn check_logits<T: Scalar>(g: &Graph<T>, op: &'static str, id: NodeId) -> Result<()> {
    let (r, c) = g.shape(id);
    if r == 0 || c != 1 {
        return Err(Error::Shape {
            op,
            lhs: (r, c),
            rhs: (r.max(1), 1),
        });
    }
    Ok(())
}

/// `-mean log sigmoid(logits)`.
fn neg_mean_log_d<T: Scalar>(g: &mut Graph<T>, logits: NodeId) -> NodeId {
    let l = g.log_sigmoid(logits);
    let m = g.mean(l);
    g.neg(m)
}

/// `-mean log(1 - sigmoid(logits))`.
fn neg_mean_log_one_minus_d<T: Scalar>(g: &mut Graph<T>, logits: NodeId) -> NodeId {
    let flipped = g.neg(logits);
    neg_mean_log_d(g, flipped)
}

/// Discriminator loss `-[mean log D(real) + mean log(1 - D(fake))]`.
pub fn d_loss<T: Scalar>(g: &mut Graph<T>, real_logits: NodeId, fake_logits: NodeId) -> Result<NodeId> {
    check_logits(g, "d_loss", real_logits)?;
    check_logits(g, "d_loss", fake_logits)?;
    let a = neg_mean_log_d(g, real_logits);
    let b = neg_mean_log_one_minus_d(g, fake_logits);
    g.add(a, b)
}

/// Non-saturating generator loss `-mean log D(G(z))`.
pub fn g_loss<T: Scalar>(g: &mut Graph<T>, fake_logits: NodeId) -> Result<NodeId> {
    check_logits(g, "g_loss", fake_logits)?;
    Ok(neg_mean_log_d(g, fake_logits))
}

/// Mean over rows of the squared Euclidean distance `||x - x_hat||^2`.
pub fn reconstruction<T: Scalar>(g: &mut Graph<T>, x: NodeId, x_hat: NodeId) -> Result<NodeId> {
    let diff = g.sub(x, x_hat)?;
    let rows = g.shape(x).0;
    if rows == 0 {
        return Err(Error::Shape {
            op: "reconstruction",
            lhs: g.shape(x),
            rhs: g.shape(x_hat),
        });
    }
    let sq = g.square(diff);
    let total = g.sum(sq);
    Ok(g.scale(total, T::one() / T::from_usize(rows).unwrap()))
}

fn mode_term<T: Scalar>(g: &mut Graph<T>, recon_logits: NodeId, sign: ModeSign) -> NodeId {
    let reward = neg_mean_log_d(g, recon_logits);
    match sign {
        ModeSign::Rewarding => reward,
        ModeSign::Literal => g.neg(reward),
    }
}

/// Nodes of a regularized generator or encoder target.
#[derive(Clone, Copy, Debug)]
pub struct RegularizedTerms {
    pub total: NodeId,
    /// `g_loss` for the generator target, `None` for the encoder target.
    pub adversarial: Option<NodeId>,
    /// The encoder target `lambda1 * reconstruction + lambda2 * mode`.
    pub regularizer: NodeId,
    pub reconstruction: NodeId,
    pub mode: NodeId,
}

/// `T_G = g_loss(fake) + lambda1 * reconstruction(x, x_hat) + lambda2 * mode_term(recon)`.
pub fn reg_generator_target<T: Scalar>(
    g: &mut Graph<T>,
    fake_logits: NodeId,
    recon_logits: NodeId,
    x: NodeId,
    x_hat: NodeId,
    weights: &LossWeights,
    sign: ModeSign,
) -> Result<RegularizedTerms> {
    let adv = g_loss(g, fake_logits)?;
    let enc = encoder_target(g, recon_logits, x, x_hat, weights, sign)?;
    let total = g.add(adv, enc.total)?;
    Ok(RegularizedTerms {
        total,
        adversarial: Some(adv),
        ..enc
    })
}

/// `T_E = lambda1 * reconstruction(x, x_hat) + lambda2 * mode_term(recon)`.
pub fn encoder_target<T: Scalar>(
    g: &mut Graph<T>,
    recon_logits: NodeId,
    x: NodeId,
    x_hat: NodeId,
    weights: &LossWeights,
    sign: ModeSign,
) -> Result<RegularizedTerms> {
    check_logits(g, "encoder_target", recon_logits)?;
    let rec = reconstruction(g, x, x_hat)?;
    let mode = mode_term(g, recon_logits, sign);
    let a = g.scale(rec, T::lit(weights.lambda1));
    let b = g.scale(mode, T::lit(weights.lambda2));
    let total = g.add(a, b)?;
    Ok(RegularizedTerms {
        total,
        adversarial: None,
        regularizer: total,
        reconstruction: rec,
        mode,
    })
}

/// Generator/encoder loss of the manifold step:
/// `lambda * (-mean log D1(G(E(x)))) + reconstruction(x, x_hat)`.
pub fn manifold_generator_loss<T: Scalar>(
    g: &mut Graph<T>,
    x: NodeId,
    x_hat: NodeId,
    d1_recon_logits: NodeId,
    lambda: f64,
) -> Result<NodeId> {
    check_logits(g, "manifold_generator_loss", d1_recon_logits)?;
    let adv = neg_mean_log_d(g, d1_recon_logits);
    let adv = g.scale(adv, T::lit(lambda));
    let rec = reconstruction(g, x, x_hat)?;
    g.add(adv, rec)
}

/// `(d1_loss, g_manifold_loss)` of the manifold step. `x_hat = G(E(x))` plays the
/// fake role for D1.
pub fn mdgan_manifold_losses<T: Scalar>(
    g: &mut Graph<T>,
    x: NodeId,
    x_hat: NodeId,
    d1_real_logits: NodeId,
    d1_recon_logits: NodeId,
    lambda: f64,
) -> Result<(NodeId, NodeId)> {
    let d1 = d_loss(g, d1_real_logits, d1_recon_logits)?;
    let gm = manifold_generator_loss(g, x, x_hat, d1_recon_logits, lambda)?;
    Ok((d1, gm))
}

/// `(d2_loss, g_diffusion_loss)` of the diffusion step. Reconstructions `G(E(x))` play
/// the real role for D2 and `G(z)` the fake role; the generator ascends `log D2(G(z))`.
pub fn mdgan_diffusion_losses<T: Scalar>(
    g: &mut Graph<T>,
    d2_recon_logits: NodeId,
    d2_gen_logits: NodeId,
) -> Result<(NodeId, NodeId)> {
    let d2 = d_loss(g, d2_recon_logits, d2_gen_logits)?;
    let gd = g_loss(g, d2_gen_logits)?;
    Ok((d2, gd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{grad_check, Tensor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn col(v: &[f64]) -> Tensor<f64> {
        Tensor::new(v.len(), 1, v.to_vec()).unwrap()
    }

    fn naive_sigmoid(x: f64) -> f64 {
        (1.0 / (1.0 + (-x).exp())).clamp(1e-12, 1.0 - 1e-12)
    }

    fn random(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(lo..hi)).collect()
    }

    fn eval(f: impl FnOnce(&mut Graph<f64>) -> Result<NodeId>) -> f64 {
        let mut g = Graph::new();
        let id = f(&mut g).unwrap();
        g.value(id).item()
    }

    #[test]
    fn d_loss_values() {
        let v = eval(|g| {
            let r = g.constant(col(&[0.0, 0.0]));
            let f = g.constant(col(&[0.0, 0.0]));
            d_loss(g, r, f)
        });
        assert!((v - 1.3862943611).abs() < 1e-10);
        let v = eval(|g| {
            let r = g.constant(col(&[50.0]));
            let f = g.constant(col(&[-50.0]));
            d_loss(g, r, f)
        });
        assert!(v < 1e-20);
    }

    #[test]
    fn d_loss_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let real = random(&mut rng, 8, -6.0, 6.0);
            let fake = random(&mut rng, 8, -6.0, 6.0);
            let naive = real
                .iter()
                .zip(&fake)
                .map(|(&r, &f)| -(naive_sigmoid(r).ln() + (1.0 - naive_sigmoid(f)).ln()))
                .sum::<f64>()
                / 8.0;
            let v = eval(|g| {
                let r = g.constant(col(&real));
                let f = g.constant(col(&fake));
                d_loss(g, r, f)
            });
            assert!((v - naive).abs() < 1e-9);
        }
    }

    #[test]
    fn g_loss_values() {
        let v = eval(|g| {
            let f = g.constant(col(&[0.0]));
            g_loss(g, f)
        });
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        let v = eval(|g| {
            let f = g.constant(col(&[50.0]));
            g_loss(g, f)
        });
        assert!(v < 1e-20);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fake = random(&mut rng, 16, -8.0, 8.0);
        let naive = -fake.iter().map(|&f| naive_sigmoid(f).ln()).sum::<f64>() / 16.0;
        let v = eval(|g| {
            let f = g.constant(col(&fake));
            g_loss(g, f)
        });
        assert!((v - naive).abs() < 1e-9);
    }

    #[test]
    fn losses_finite_for_extreme_logits() {
        let v = eval(|g| {
            let r = g.constant(col(&[-1e6, 1e6]));
            let f = g.constant(col(&[1e6, -1e6]));
            d_loss(g, r, f)
        });
        assert!(v.is_finite());
    }

    #[test]
    fn empty_logits_rejected() {
        let mut g = Graph::<f64>::new();
        let e = g.constant(Tensor::zeros(0, 1));
        let r = g.constant(col(&[1.0]));
        assert!(d_loss(&mut g, r, e).is_err());
        assert!(g_loss(&mut g, e).is_err());
    }

    #[test]
    fn reconstruction_values() {
        let v = eval(|g| {
            let x = g.constant(Tensor::row(vec![0.0, 0.0]).unwrap());
            let y = g.constant(Tensor::row(vec![3.0, 4.0]).unwrap());
            reconstruction(g, x, y)
        });
        assert_eq!(v, 25.0);
        let v = eval(|g| {
            let x = g.constant(Tensor::row(vec![1.5, -2.0]).unwrap());
            reconstruction(g, x, x)
        });
        assert_eq!(v, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(&mut rng, 20, -3.0, 3.0);
        let b = random(&mut rng, 20, -3.0, 3.0);
        let mut oracle = 0.0;
        for r in 0..10 {
            for c in 0..2 {
                oracle += (a[2 * r + c] - b[2 * r + c]).powi(2);
            }
        }
        oracle /= 10.0;
        let v = eval(|g| {
            let x = g.constant(Tensor::new(10, 2, a.clone()).unwrap());
            let y = g.constant(Tensor::new(10, 2, b.clone()).unwrap());
            reconstruction(g, x, y)
        });
        assert!((v - oracle).abs() < 1e-12);
        let mut g = Graph::<f64>::new();
        let x = g.constant(Tensor::zeros(2, 2));
        let y = g.constant(Tensor::zeros(2, 3));
        assert!(reconstruction(&mut g, x, y).is_err());
    }

    fn reg_target(
        fake: &[f64],
        recon: &[f64],
        x: &Tensor<f64>,
        xh: &Tensor<f64>,
        w: LossWeights,
        sign: ModeSign,
    ) -> (f64, f64) {
        let mut g = Graph::new();
        let f = g.constant(col(fake));
        let r = g.constant(col(recon));
        let xi = g.constant(x.clone());
        let xhi = g.constant(xh.clone());
        let tg = reg_generator_target(&mut g, f, r, xi, xhi, &w, sign).unwrap();
        let te = encoder_target(&mut g, r, xi, xhi, &w, sign).unwrap();
        (g.value(tg.total).item(), g.value(te.total).item())
    }

    #[test]
    fn reg_target_reductions() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5]]).unwrap();
        let xh = Tensor::from_rows(&[vec![0.0, 2.5], vec![-1.5, 0.0]]).unwrap();
        let fake = [0.3, -1.2];
        let off = LossWeights::new(0.0, 0.0, 1.0).unwrap();
        let (tg, _) = reg_target(&fake, &[2.0, -2.0], &x, &xh, off, ModeSign::Rewarding);
        let plain = eval(|g| {
            let f = g.constant(col(&fake));
            g_loss(g, f)
        });
        assert_eq!(tg, plain);
        // perfect autoencoder: only the mode term remains
        let w = LossWeights::new(1.0, 0.0, 1.0).unwrap();
        let (tg, te) = reg_target(&fake, &[0.0, 0.0], &x, &x, w, ModeSign::Rewarding);
        assert_eq!(tg, plain);
        assert_eq!(te, 0.0);
    }

    #[test]
    fn reg_target_hand_computed() {
        // two samples, lambda1 = lambda2 = 0.005
        let x = Tensor::from_rows(&[vec![5.0, 0.0], vec![2.5, 4.0]]).unwrap();
        let xh = Tensor::from_rows(&[vec![4.0, 1.0], vec![2.5, 3.0]]).unwrap();
        let fake = [0.5, -1.0];
        let recon = [2.0, 0.0];
        let ls = |v: f64| -> f64 { -(1.0 + (-v).exp()).ln() };
        let g_term = -(ls(0.5) + ls(-1.0)) / 2.0;
        let rec = (1.0 + 1.0 + 0.0 + 1.0) / 2.0;
        let mode = -(ls(2.0) + ls(0.0)) / 2.0;
        let w = LossWeights::new(0.005, 0.005, 1.0).unwrap();
        let (tg, te) = reg_target(&fake, &recon, &x, &xh, w, ModeSign::Rewarding);
        assert!((tg - (g_term + 0.005 * rec + 0.005 * mode)).abs() < 1e-9);
        assert!((te - (0.005 * rec + 0.005 * mode)).abs() < 1e-9);
        let (tg_lit, te_lit) = reg_target(&fake, &recon, &x, &xh, w, ModeSign::Literal);
        assert!((tg_lit - (g_term + 0.005 * rec - 0.005 * mode)).abs() < 1e-9);
        assert!((te_lit - (0.005 * rec - 0.005 * mode)).abs() < 1e-9);
    }

    #[test]
    fn encoder_target_limits() {
        let x = Tensor::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let w = LossWeights::new(0.3, 0.0, 1.0).unwrap();
        let xh = Tensor::from_rows(&[vec![2.0, 1.0]]).unwrap();
        let (_, te) = reg_target(&[0.0], &[-4.0], &x, &xh, w, ModeSign::Rewarding);
        assert!((te - 0.3).abs() < 1e-15);
        let w = LossWeights::new(0.3, 0.7, 1.0).unwrap();
        let (_, te) = reg_target(&[0.0], &[50.0], &x, &x, w, ModeSign::Rewarding);
        assert!(te.abs() < 1e-20);
    }

    #[test]
    fn encoder_target_random_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(&mut rng, 12, -2.0, 2.0);
        let b = random(&mut rng, 12, -2.0, 2.0);
        let recon = random(&mut rng, 6, -5.0, 5.0);
        let w = LossWeights::new(0.2, 0.4, 1.0).unwrap();
        let rec: f64 = a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / 6.0;
        let mode = -recon.iter().map(|&l| naive_sigmoid(l).ln()).sum::<f64>() / 6.0;
        let x = Tensor::new(6, 2, a).unwrap();
        let xh = Tensor::new(6, 2, b).unwrap();
        let (_, te) = reg_target(&[0.0; 6], &recon, &x, &xh, w, ModeSign::Rewarding);
        assert!((te - (0.2 * rec + 0.4 * mode)).abs() < 1e-9);
    }

    #[test]
    fn reg_target_monotone() {
        let x = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let xh = Tensor::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let far = Tensor::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let w = LossWeights::new(0.5, 0.5, 1.0).unwrap();
        let base = reg_target(&[0.0, 1.0], &[0.0, -1.0], &x, &xh, w, ModeSign::Rewarding).0;
        assert!(reg_target(&[0.5, 1.0], &[0.0, -1.0], &x, &xh, w, ModeSign::Rewarding).0 <= base);
        assert!(reg_target(&[0.0, 1.0], &[0.0, 0.5], &x, &xh, w, ModeSign::Rewarding).0 <= base);
        assert!(reg_target(&[0.0, 1.0], &[0.0, -1.0], &x, &far, w, ModeSign::Rewarding).0 >= base);
    }

    #[test]
    fn manifold_losses() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0], vec![0.0, -1.0]]).unwrap();
        let xh = Tensor::from_rows(&[vec![1.5, 2.0], vec![0.0, 0.0]]).unwrap();
        let run = |x: &Tensor<f64>, xh: &Tensor<f64>, real: &[f64], recon: &[f64], lambda: f64| {
            let mut g = Graph::new();
            let (xi, xhi) = (g.constant(x.clone()), g.constant(xh.clone()));
            let (r, f) = (g.constant(col(real)), g.constant(col(recon)));
            let (d1, gm) = mdgan_manifold_losses(&mut g, xi, xhi, r, f, lambda).unwrap();
            let rec = reconstruction(&mut g, xi, xhi).unwrap();
            (g.value(d1).item(), g.value(gm).item(), g.value(rec).item())
        };
        let (_, gm, rec) = run(&x, &xh, &[1.0, 2.0], &[-3.0, 0.5], 0.0);
        assert_eq!(gm, rec);
        let (d1, _, _) = run(&x, &x, &[0.0, 0.0], &[0.0, 0.0], 1.0);
        assert!((d1 - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        // step-3 bracket: -(1/m) sum [lambda log D1(x_hat) - ||x - x_hat||^2]
        let recon = [-0.7, 1.9];
        let (_, gm, _) = run(&x, &xh, &[0.0, 0.0], &recon, 1.0);
        let bracket = (naive_sigmoid(-0.7).ln() - 0.25) + (naive_sigmoid(1.9).ln() - 1.0);
        assert!((gm + bracket / 2.0).abs() < 1e-9);
    }

    #[test]
    fn diffusion_losses() {
        let run = |recon: &[f64], gen: &[f64]| {
            let mut g = Graph::new();
            let (r, f) = (g.constant(col(recon)), g.constant(col(gen)));
            let (d2, gd) = mdgan_diffusion_losses(&mut g, r, f).unwrap();
            (g.value(d2).item(), g.value(gd).item())
        };
        let (d2, gd) = run(&[0.0, 0.0], &[0.0, 0.0]);
        assert!((d2 - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((gd - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(run(&[0.0], &[50.0]).1 < 1e-20);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let recon = random(&mut rng, 5, -4.0, 4.0);
        let gen = random(&mut rng, 5, -4.0, 4.0);
        let d2_oracle = -recon
            .iter()
            .zip(&gen)
            .map(|(&r, &f)| naive_sigmoid(r).ln() + (1.0 - naive_sigmoid(f)).ln())
            .sum::<f64>()
            / 5.0;
        let gd_oracle = -gen.iter().map(|&f| naive_sigmoid(f).ln()).sum::<f64>() / 5.0;
        let (d2, gd) = run(&recon, &gen);
        assert!((d2 - d2_oracle).abs() < 1e-9 && (gd - gd_oracle).abs() < 1e-9);
    }

    #[test]
    fn loss_gradients_pass_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let real = col(&random(&mut rng, 4, -3.0, 3.0));
        let fake = col(&random(&mut rng, 4, -3.0, 3.0));
        let recon = col(&random(&mut rng, 4, -3.0, 3.0));
        let x = Tensor::new(4, 2, random(&mut rng, 8, -2.0, 2.0)).unwrap();
        let xh = Tensor::new(4, 2, random(&mut rng, 8, -2.0, 2.0)).unwrap();
        let w = LossWeights::new(0.2, 0.4, 0.7).unwrap();
        let params = [real, fake, recon, x, xh];
        type Builder = fn(&mut Graph<f64>, &[NodeId], &LossWeights) -> Result<NodeId>;
        let builders: [Builder; 7] = [
            |g, p, _| d_loss(g, p[0], p[1]),
            |g, p, _| g_loss(g, p[1]),
            |g, p, _| reconstruction(g, p[3], p[4]),
            |g, p, w| Ok(reg_generator_target(g, p[1], p[2], p[3], p[4], w, ModeSign::Rewarding)?.total),
            |g, p, w| Ok(encoder_target(g, p[2], p[3], p[4], w, ModeSign::Literal)?.total),
            |g, p, w| manifold_generator_loss(g, p[3], p[4], p[2], w.lambda),
            |g, p, _| Ok(mdgan_diffusion_losses(g, p[2], p[1])?.0),
        ];
        for b in builders {
            let report = grad_check(&params, 1e-5, |g, p| b(g, p, &w)).unwrap();
            assert!(report.max_rel_error < 1e-6, "{report:?}");
        }
    }
}
