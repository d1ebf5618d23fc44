//! Training objective: Gaussian negative log-likelihood plus a KL divergence
//! to a standard normal, combined as recon + lambda * kl. Both terms average
//! over channels.

use crate::error::{Result, VaradeError};
use crate::tape::{GradTape, ValueId};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub recon: f32,
    pub kl: f32,
    pub total: f32,
}

fn check_shapes(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(VaradeError::shape(
            op,
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    Ok(())
}

/// Mean over channels of 1/2 * (logvar + (y - mu)^2 * exp(-logvar)).
/// The constant log(2*pi) term is dropped.
pub fn gaussian_nll(y: &Tensor, mu: &Tensor, logvar: &Tensor) -> Result<f32> {
    check_shapes("gaussian_nll", y, mu)?;
    check_shapes("gaussian_nll", y, logvar)?;
    let mut acc = 0.0f32;
    for ((yv, mv), lv) in y.data().iter().zip(mu.data()).zip(logvar.data()) {
        let d = yv - mv;
        acc += 0.5 * (lv + d * d * (-lv).exp());
    }
    Ok(acc / y.len() as f32)
}

/// Mean over channels of -1/2 * (1 + logvar - mu^2 - exp(logvar)).
pub fn kl_std_normal(mu: &Tensor, logvar: &Tensor) -> Result<f32> {
    check_shapes("kl_std_normal", mu, logvar)?;
    let mut acc = 0.0f32;
    for (mv, lv) in mu.data().iter().zip(logvar.data()) {
        acc += -0.5 * (1.0 + lv - mv * mv - lv.exp());
    }
    Ok(acc / mu.len() as f32)
}

pub fn total_loss(y: &Tensor, mu: &Tensor, logvar: &Tensor, lambda: f32) -> Result<LossBreakdown> {
    let recon = gaussian_nll(y, mu, logvar)?;
    let kl = kl_std_normal(mu, logvar)?;
    Ok(LossBreakdown {
        recon,
        kl,
        total: recon + lambda * kl,
    })
}

/// Records the total loss on the tape. Returns (total, recon, kl) handles.
pub fn total_loss_on_tape(
    tape: &mut GradTape,
    y: ValueId,
    mu: ValueId,
    logvar: ValueId,
    lambda: f32,
) -> Result<(ValueId, ValueId, ValueId)> {
    // recon = 0.5 * mean(logvar + (y-mu)^2 * exp(-logvar))
    let diff = tape.sub(y, mu)?;
    let sq = tape.mul(diff, diff)?;
    let neg_lv = tape.scale(logvar, -1.0);
    let inv_var = tape.exp(neg_lv);
    let weighted = tape.mul(sq, inv_var)?;
    let inner = tape.add(logvar, weighted)?;
    let recon_mean = tape.mean(inner);
    let recon = tape.scale(recon_mean, 0.5);

    // kl = -0.5 * mean(1 + logvar - mu^2 - exp(logvar))
    let one_plus = tape.add_scalar(logvar, 1.0);
    let mu_sq = tape.mul(mu, mu)?;
    let a = tape.sub(one_plus, mu_sq)?;
    let var = tape.exp(logvar);
    let b = tape.sub(a, var)?;
    let kl_mean = tape.mean(b);
    let kl = tape.scale(kl_mean, -0.5);

    let weighted_kl = tape.scale(kl, lambda);
    let total = tape.add(recon, weighted_kl)?;
    Ok((total, recon, kl))
}
