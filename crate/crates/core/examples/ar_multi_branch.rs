//! Branches from the toy language model with and without guidance, then the
//! same comparison summarized over several model seeds.

use uag::metrics::{distinct_n, self_bleu, DiversityReport};
use uag::process::{LanguageModel, ToyArModel};
use uag::{multi_branch, GenerationConfig};

fn texts(model: &ToyArModel, cfg: &GenerationConfig) -> uag::Result<Vec<Vec<usize>>> {
    let branches = multi_branch(model, &[1, 2, 3], cfg)?;
    Ok(branches.iter().filter_map(|b| b.tokens().map(<[usize]>::to_vec)).collect())
}

fn main() -> uag::Result<()> {
    let model = ToyArModel::seeded(64, 32, 0)?;
    let guided = GenerationConfig::language_model(40, 8, 1000);
    let naive = GenerationConfig { uag_enabled: false, ..guided };

    for (label, cfg) in [("naive", naive), ("guided", guided)] {
        let out = texts(&model, &cfg)?;
        println!("== {label}");
        for t in out.iter().take(4) {
            println!("  {}", model.tokenizer().decode(t));
        }
        for (name, value) in DiversityReport::compute(&out)?.rows() {
            println!("  {name:<20} {value:.4}");
        }
    }

    println!("\nseed  self-BLEU naive/guided  distinct-2 naive/guided");
    for seed in 0..8 {
        let model = ToyArModel::seeded(64, 32, seed)?;
        let guided = GenerationConfig::language_model(40, 8, 1000 + seed);
        let naive = GenerationConfig { uag_enabled: false, ..guided };
        let (g, n) = (texts(&model, &guided)?, texts(&model, &naive)?);
        println!(
            "{seed:>4}  {:>10.4} {:>10.4}  {:>10.4} {:>10.4}",
            self_bleu(&n, 4)?, self_bleu(&g, 4)?, distinct_n(&n, 2)?, distinct_n(&g, 2)?
        );
    }
    Ok(())
}
