//! Compares the closed-form penalty gradients with central differences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use uag::penalty::{
    latent_cosine_gradient, latent_cosine_loss, local_loss_softmax, repulsion_gradient, softmax, Aggregation, PenaltyConfig,
};

fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = 1e-5;
    (0..x.len())
        .map(|i| {
            let (mut up, mut down) = (x.to_vec(), x.to_vec());
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    d / b.iter().map(|y| y * y).sum::<f64>().sqrt()
}

fn main() -> uag::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() };

    let logits = draw(12);
    let bank: Vec<Vec<f64>> = (0..3).map(|_| softmax(&draw(12))).collect();
    // the repulsion gradient differentiates the mean over the bank
    let lm = PenaltyConfig { local_aggregation: Aggregation::Mean, ..PenaltyConfig::language_model() };
    let g = repulsion_gradient(&logits, &bank)?;
    let fd = central_diff(|y| local_loss_softmax(y, &bank, &lm).unwrap(), &logits);
    println!("repulsion gradient     rel err {:.2e}", rel_err(&g, &fd));

    let z = draw(16);
    let latents: Vec<Vec<f64>> = (0..3).map(|_| draw(16)).collect();
    let lat = PenaltyConfig::latent();
    let g = latent_cosine_gradient(&z, &latents)?;
    let fd = central_diff(|z| latent_cosine_loss(z, &latents, &lat).unwrap(), &z);
    println!("latent cosine gradient rel err {:.2e}", rel_err(&g, &fd));
    Ok(())
}
