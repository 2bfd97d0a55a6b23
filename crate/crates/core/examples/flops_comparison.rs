//! Operation counts per step and per branch, guided against unguided.

use uag::penalty::{flops_estimate, PenaltyConfig};
use uag::process::{LanguageModel, ToyArModel};
use uag::{multi_branch, GenerationConfig};

fn main() -> uag::Result<()> {
    let lm = PenaltyConfig::language_model();
    for (v, d, n_out, n_hid) in [(4, 0, 2, 0), (64, 32, 4, 4), (32000, 4096, 8, 8)] {
        let f = flops_estimate(v, d, n_out, n_hid, &lm);
        println!("V={v:<6} d={d:<5} N={n_out}/{n_hid}: {f:?} total {}", f.total());
    }

    let model = ToyArModel::seeded(64, 32, 0)?;
    let guided = GenerationConfig::language_model(40, 6, 0);
    let naive = GenerationConfig { uag_enabled: false, ..guided };
    let on = multi_branch(&model, &[1], &guided)?;
    let off = multi_branch(&model, &[1], &naive)?;
    println!("model step: {} flops", model.step_flops());
    for (a, b) in on.iter().zip(&off) {
        let ratio = a.total_flops as f64 / b.total_flops as f64;
        println!("branch {}: guided {:>8} naive {:>8} ratio {ratio:.2}", a.index, a.total_flops, b.total_flops);
    }
    Ok(())
}
