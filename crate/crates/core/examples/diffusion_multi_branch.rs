//! Final latents from the toy diffusion model, guided against naive.

use uag::metrics::LatentDiversityReport;
use uag::process::{NoiseJacobian, ToyDiffusion};
use uag::{multi_branch_latent, GenerationConfig};

fn main() -> uag::Result<()> {
    let model = ToyDiffusion::seeded(16, 50, 4)?;
    let cond = model.condition("a cat on a mat");
    let guided = GenerationConfig::latent(50, 8, 1);
    let identity = GenerationConfig { noise_jacobian: NoiseJacobian::Identity, ..guided };
    let naive = GenerationConfig { uag_enabled: false, ..guided };

    for (label, cfg) in [("naive", naive), ("guided, identity jacobian", identity), ("guided", guided)] {
        let branches = multi_branch_latent(&model, &cond, &cfg)?;
        let latents: Vec<&[f64]> = branches.iter().filter_map(|b| b.latent()).collect();
        let report = LatentDiversityReport::compute(&latents)?;
        println!("{label:<26} pairwise cosine {:.4}  distance {:.4}", report.pairwise_cosine, report.pairwise_distance);
    }
    Ok(())
}
